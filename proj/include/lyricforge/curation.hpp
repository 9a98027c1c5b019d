#pragma once

// Curation of generated lyrics: rule-based normalization, interquartile
// filtering against human reference statistics, and semantic-similarity
// filtering against the human documents of the same group.

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unicode/regex.h>

#include "lyricforge/embedding.hpp"
#include "lyricforge/error.hpp"
#include "lyricforge/lyrics.hpp"
#include "lyricforge/text.hpp"

namespace lyricforge::curation {

inline constexpr int kRulesVersion = 1;

class LinePattern {
 public:
  explicit LinePattern(std::string source) : source_(std::move(source)) {
    UErrorCode status = U_ZERO_ERROR;
    UParseError parse_error;
    auto pattern = icu::UnicodeString::fromUTF8(source_);
    pattern_.reset(icu::RegexPattern::compile(pattern, UREGEX_CASE_INSENSITIVE, parse_error, status));
    if (U_FAILURE(status))
      fail(ErrorKind::config, "pattern \"" + source_ + "\" does not compile: " + u_errorName(status));
  }

  bool search(std::string_view line) const {
    UErrorCode status = U_ZERO_ERROR;
    auto input = icu::UnicodeString::fromUTF8(icu::StringPiece(line.data(), static_cast<int32_t>(line.size())));
    std::unique_ptr<icu::RegexMatcher> m(pattern_->matcher(input, status));
    if (U_FAILURE(status)) fail(ErrorKind::config, "cannot match pattern " + source_);
    const bool found = m->find(status);
    return U_SUCCESS(status) && found;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::shared_ptr<icu::RegexPattern> pattern_;
};

struct NormalizationRules {
  std::u32string strip_line_end_punct = U".,;:!?";
  bool strip_wrapping_quotes = true;
  std::vector<LinePattern> drop_line_patterns;
  bool collapse_blank_lines = true;
};

inline const std::vector<std::string>& default_drop_patterns() {
  static const std::vector<std::string> kPatterns = {
      R"(^\W*here(?:'|’)?s\b.*\b(?:example|sample|version|attempt|song|lyrics?)\b)",
      R"(^\W*here\s+(?:is|are)\s+(?:a|an|the|my|some)\b.*\b(?:song|lyrics?|example|verses?)\b)",
      R"(^\W*(?:sure|certainly|of course|absolutely)\b\W*$)",
      R"(^\W*(?:sure|certainly|of course|absolutely)[,!.]\s+(?:here|i)\b)",
      R"(\bas an ai\b|\b(?:ai )?language model\b)",
      R"(\b(?:offensive|explicit content|content warning|trigger warning|disclaimer)\b)",
      R"(^\W*(?:i hope you (?:enjoy|like)|let me know if)\b)",
      R"(^\W*\(?note\s*:)",
  };
  return kPatterns;
}

inline NormalizationRules default_rules() {
  NormalizationRules rules;
  for (const auto& p : default_drop_patterns()) rules.drop_line_patterns.emplace_back(p);
  return rules;
}

inline bool parse_bool(std::string_view v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(ErrorKind::config, "expected a boolean, got \"" + std::string(v) + "\"");
}

/// Parses the rules config: `key = value` lines, `#` comments, one
/// `drop_line_pattern = <regex>` line per pattern. A version line is required.
inline NormalizationRules parse_rules(const std::string& content, const std::string& source = "<rules>") {
  NormalizationRules rules;
  bool versioned = false;
  std::istringstream in(content);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string trimmed = text::trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) throw FormatError(source, number, "expected key = value");
    const std::string key = text::trim(trimmed.substr(0, eq));
    const std::string value = text::trim(trimmed.substr(eq + 1));
    try {
      if (key == "version") {
        if (value != std::to_string(kRulesVersion)) throw FormatError(source, number, "unsupported rules version " + value);
        versioned = true;
      } else if (key == "strip_line_end_punct") {
        rules.strip_line_end_punct.clear();
        for (char32_t c : text::decode(value))
          if (c != U'\'' && c != U'’' && !text::is_space(c)) rules.strip_line_end_punct += c;
      } else if (key == "strip_wrapping_quotes") {
        rules.strip_wrapping_quotes = parse_bool(value);
      } else if (key == "collapse_blank_lines") {
        rules.collapse_blank_lines = parse_bool(value);
      } else if (key == "drop_line_pattern") {
        rules.drop_line_patterns.emplace_back(value);
      } else {
        throw FormatError(source, number, "unknown key \"" + key + "\"");
      }
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(source, number, e.what());
    }
  }
  if (!versioned) throw FormatError(source, 1, "rules file has no version line");
  return rules;
}

inline NormalizationRules load_rules(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::not_found, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_rules(buf.str(), path);
}

namespace detail {

struct QuotePair {
  char32_t open;
  char32_t close;
};

inline constexpr std::array<QuotePair, 5> kQuotes = {
    QuotePair{U'"', U'"'}, QuotePair{U'“', U'”'}, QuotePair{U'„', U'“'}, QuotePair{U'«', U'»'},
    QuotePair{U'»', U'«'}};

inline std::string encode(const std::u32string& s) {
  std::string out;
  for (char32_t c : s) text::append_utf8(out, c);
  return out;
}

inline std::u32string trim32(std::u32string s) {
  while (!s.empty() && text::is_space(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && text::is_space(s[i])) ++i;
  return s.substr(i);
}

inline std::u32string decode32(std::string_view s) {
  auto cps = text::decode(s);
  return {cps.begin(), cps.end()};
}

inline bool is_quote_open(char32_t c) {
  return std::any_of(kQuotes.begin(), kQuotes.end(), [&](auto q) { return q.open == c; });
}

inline bool is_quote_close(char32_t c) {
  return std::any_of(kQuotes.begin(), kQuotes.end(), [&](auto q) { return q.close == c; });
}

inline std::u32string strip_wrapping(std::u32string s) {
  s = trim32(std::move(s));
  if (s.size() >= 2)
    for (auto q : kQuotes)
      if (s.front() == q.open && s.back() == q.close) return trim32(s.substr(1, s.size() - 2));
  return s;
}

inline std::u32string strip_end_punct(std::u32string s, const std::u32string& set) {
  s = trim32(std::move(s));
  while (!s.empty() && (set.find(s.back()) != std::u32string::npos || text::is_space(s.back()))) s.pop_back();
  return s;
}

// One pass of the rule chain over a document. Dropped lines are marked by
// std::nullopt so that collapse_blank_lines=false can turn them into breaks.
inline std::vector<Verse> apply_once(const std::vector<Verse>& verses, const NormalizationRules& rules) {
  std::vector<std::vector<std::optional<std::u32string>>> work;
  for (const auto& v : verses) {
    std::vector<std::optional<std::u32string>> lines;
    for (const auto& l : v.lines) {
      bool drop = false;
      for (const auto& p : rules.drop_line_patterns)
        if (p.search(l)) {
          drop = true;
          break;
        }
      if (drop)
        lines.emplace_back(std::nullopt);
      else
        lines.emplace_back(decode32(l));
    }
    work.push_back(std::move(lines));
  }

  if (rules.strip_wrapping_quotes) {
    for (auto& v : work)
      for (auto& l : v)
        if (l) *l = strip_wrapping(*l);
    // A song wrapped in quotes as a whole: opening quote on the first kept
    // line, closing quote on the last one.
    std::optional<std::u32string>* first = nullptr;
    std::optional<std::u32string>* last = nullptr;
    for (auto& v : work)
      for (auto& l : v)
        if (l && !l->empty()) {
          if (!first) first = &l;
          last = &l;
        }
    if (first && last && first != last && is_quote_open((**first).front()) && is_quote_close((**last).back())) {
      **first = trim32((**first).substr(1));
      (**last).pop_back();
      **last = trim32(**last);
    }
  }

  for (auto& v : work)
    for (auto& l : v)
      if (l) *l = strip_end_punct(*l, rules.strip_line_end_punct);

  std::vector<Verse> out;
  Verse current;
  auto flush = [&] {
    if (!current.lines.empty()) out.push_back(std::move(current));
    current = Verse{};
  };
  for (const auto& v : work) {
    for (const auto& l : v) {
      if (!l) {
        if (!rules.collapse_blank_lines) flush();
        continue;
      }
      if (l->empty()) continue;
      current.lines.push_back(encode(*l));
    }
    flush();
  }
  return out;
}

}  // namespace detail

/// Applies drop-lines, wrapping-quote removal, line-end punctuation removal
/// and blank-line collapsing, repeated to a fixed point so the result is
/// idempotent.
inline LyricsDoc normalize(const LyricsDoc& doc, const NormalizationRules& rules) {
  std::vector<Verse> verses = doc.verses;
  for (int pass = 0; pass < 32; ++pass) {
    auto next = detail::apply_once(verses, rules);
    if (next == verses) break;
    verses = std::move(next);
  }
  if (verses.empty()) fail(ErrorKind::empty_input, "document " + doc.id + " is empty after normalization");
  return with_verses(doc, std::move(verses));
}

// --- interquartile filter ------------------------------------------------------

enum class GroupKey { artist, language_genre };

inline GroupKey parse_group_key(std::string_view s) {
  if (s == "artist") return GroupKey::artist;
  if (s == "language_genre") return GroupKey::language_genre;
  fail(ErrorKind::config, "group key must be artist or language_genre");
}

inline std::string group_of(const LyricsDoc& doc, GroupKey key) {
  return key == GroupKey::artist ? doc.artist : doc.language + "/" + doc.genre;
}

inline constexpr std::array<const char*, 4> kMetricNames = {"avg_line_len_words", "num_verses",
                                                            "avg_verse_size_lines", "word_count"};

inline std::array<double, 4> metric_values(const DocStats& s) {
  return {s.avg_line_len_words, static_cast<double>(s.num_verses), s.avg_verse_size_lines,
          static_cast<double>(s.word_count)};
}

/// Linear-interpolation quantile: rank h = (n - 1) q between floor and ceil.
inline double quantile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::empty_input, "quantile of no values");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct Interval {
  double q1 = 0.0;
  double q3 = 0.0;
};

struct IqrBounds {
  std::string group;
  std::array<Interval, 4> metrics;
};

using IqrTable = std::map<std::string, IqrBounds>;

inline constexpr std::size_t kMinGroupSize = 4;

/// Fits per-group Q1/Q3 bounds from human documents only.
inline IqrTable fit_iqr(const std::vector<LyricsDoc>& docs, GroupKey key) {
  std::map<std::string, std::array<std::vector<double>, 4>> values;
  for (const auto& d : docs) {
    if (d.label != Label::human) continue;
    auto m = metric_values(compute_stats(d));
    auto& slot = values[group_of(d, key)];
    for (std::size_t i = 0; i < 4; ++i) slot[i].push_back(m[i]);
  }
  require(!values.empty(), ErrorKind::empty_input, "no human documents to fit bounds on");
  IqrTable table;
  for (const auto& [group, metrics] : values) {
    if (metrics[0].size() < kMinGroupSize)
      fail(ErrorKind::invariant, "group \"" + group + "\" has " + std::to_string(metrics[0].size()) +
                                     " human documents, need at least " + std::to_string(kMinGroupSize));
    IqrBounds b{group, {}};
    for (std::size_t i = 0; i < 4; ++i) b.metrics[i] = {quantile(metrics[i], 0.25), quantile(metrics[i], 0.75)};
    table.emplace(group, b);
  }
  return table;
}

struct Rejection {
  std::string id;
  std::string stage;
  std::string reason;
};

struct FilterResult {
  std::vector<LyricsDoc> kept;
  std::vector<Rejection> rejected;
};

/// First metric outside [q1, q3], or nullptr when all four are inside.
inline const char* first_violation(const DocStats& stats, const IqrBounds& bounds) {
  const auto m = metric_values(stats);
  for (std::size_t i = 0; i < 4; ++i)
    if (m[i] < bounds.metrics[i].q1 || m[i] > bounds.metrics[i].q3) return kMetricNames[i];
  return nullptr;
}

inline FilterResult iqr_filter(const std::vector<LyricsDoc>& candidates, const IqrTable& bounds, GroupKey key) {
  FilterResult result;
  for (const auto& c : candidates) {
    const auto group = group_of(c, key);
    auto it = bounds.find(group);
    if (it == bounds.end()) fail(ErrorKind::not_found, "no IQR bounds for group \"" + group + "\" (document " + c.id + ")");
    if (const char* reason = first_violation(compute_stats(c), it->second))
      result.rejected.push_back({c.id, "iqr", reason});
    else
      result.kept.push_back(c);
  }
  return result;
}

// --- semantic filter -------------------------------------------------------------

enum class SimilarityAggregation { mean, max };

inline SimilarityAggregation parse_aggregation(std::string_view s) {
  if (s == "mean") return SimilarityAggregation::mean;
  if (s == "max") return SimilarityAggregation::max;
  fail(ErrorKind::config, "similarity aggregation must be mean or max");
}

struct ScoredDoc {
  LyricsDoc doc;
  double similarity = 0.0;
};

inline const DocEmbedding& embedding_for(const EmbeddingMap& embeddings, const std::string& id) {
  auto it = embeddings.find(id);
  if (it == embeddings.end()) fail(ErrorKind::not_found, "missing embedding for document " + id);
  return it->second;
}

/// Keeps, per (generator, group) bucket, the `cap` candidates most similar to
/// the group's human documents. Output is sorted by similarity, descending,
/// then by id.
inline std::vector<ScoredDoc> semantic_filter(const std::vector<LyricsDoc>& candidates,
                                              const std::vector<LyricsDoc>& human_docs, const EmbeddingMap& embeddings,
                                              GroupKey key, std::size_t cap = 150,
                                              SimilarityAggregation aggregation = SimilarityAggregation::mean) {
  std::map<std::string, std::vector<const DocEmbedding*>> human_by_group;
  for (const auto& h : human_docs)
    if (h.label == Label::human) human_by_group[group_of(h, key)].push_back(&embedding_for(embeddings, h.id));

  std::map<std::pair<std::string, std::string>, std::vector<ScoredDoc>> buckets;
  for (const auto& c : candidates) {
    const auto group = group_of(c, key);
    auto it = human_by_group.find(group);
    if (it == human_by_group.end()) fail(ErrorKind::not_found, "no human documents in group \"" + group + "\"");
    const auto& e = embedding_for(embeddings, c.id);
    double sim = aggregation == SimilarityAggregation::max ? -1.0 : 0.0;
    for (const auto* h : it->second) {
      const double s = embed::cosine(e, *h);
      sim = aggregation == SimilarityAggregation::max ? std::max(sim, s) : sim + s;
    }
    if (aggregation == SimilarityAggregation::mean) sim /= static_cast<double>(it->second.size());
    buckets[{c.generator.value_or(""), group}].push_back({c, sim});
  }

  auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.doc.id < b.doc.id;
  };
  std::vector<ScoredDoc> kept;
  for (auto& [_, bucket] : buckets) {
    std::sort(bucket.begin(), bucket.end(), better);
    for (std::size_t i = 0; i < std::min(cap, bucket.size()); ++i) kept.push_back(std::move(bucket[i]));
  }
  std::sort(kept.begin(), kept.end(), better);
  return kept;
}

}  // namespace lyricforge::curation

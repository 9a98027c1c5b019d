#pragma once

// Lyric document model: verse segmentation, text statistics and the
// JSON Lines corpus interchange format.

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lyricforge/error.hpp"
#include "lyricforge/text.hpp"

namespace lyricforge {

enum class Label { human, synthetic };

inline const char* to_string(Label label) {
  return label == Label::human ? "human" : "synthetic";
}

inline Label parse_label(std::string_view s) {
  if (s == "human") return Label::human;
  if (s == "synthetic") return Label::synthetic;
  fail(ErrorKind::format, "label must be \"human\" or \"synthetic\", got \"" + std::string(s) + "\"");
}

struct Verse {
  std::vector<std::string> lines;

  bool operator==(const Verse&) const = default;
};

struct LyricsDoc {
  std::string id;
  std::string language;
  std::string genre;
  std::string artist;
  Label label = Label::human;
  std::optional<std::string> generator;
  std::string text;  // canonical form
  std::vector<Verse> verses;
  std::optional<std::vector<std::string>> seed_ids;

  std::size_t line_count() const {
    std::size_t n = 0;
    for (const auto& v : verses) n += v.lines.size();
    return n;
  }

  bool operator==(const LyricsDoc&) const = default;
};

struct DocStats {
  double avg_line_len_words = 0.0;
  std::size_t num_verses = 0;
  double avg_verse_size_lines = 0.0;
  std::size_t word_count = 0;
};

/// Maps every line-break convention (CRLF, CR, NEL, LS, PS, VT, FF) to LF.
inline std::string normalize_line_breaks(std::string_view raw) {
  auto cps = text::decode(raw);
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    char32_t c = cps[i];
    if (c == U'\r' && i + 1 < cps.size() && cps[i + 1] == U'\n') continue;
    if (c == U'\r' || c == U'\u0085' || c == U'\u2028' || c == U'\u2029' || c == U'\v' || c == U'\f')
      c = U'\n';
    text::append_utf8(out, c);
  }
  return out;
}

/// Splits text into verses at runs of blank lines. Trailing whitespace of
/// each line is removed; whitespace-only lines count as blank.
inline std::vector<Verse> segment_verses(std::string_view raw) {
  std::vector<Verse> verses;
  Verse current;
  const std::string normalized = normalize_line_breaks(raw);
  for (auto line : text::split_char(normalized, '\n')) {
    std::string trimmed = text::rtrim(line);
    if (text::is_blank(trimmed)) {
      if (!current.lines.empty()) verses.push_back(std::move(current));
      current = Verse{};
    } else {
      current.lines.push_back(std::move(trimmed));
    }
  }
  if (!current.lines.empty()) verses.push_back(std::move(current));
  return verses;
}

/// Joins verses with single blank-line separators.
inline std::string join_verses(const std::vector<Verse>& verses) {
  std::string out;
  for (std::size_t v = 0; v < verses.size(); ++v) {
    if (v > 0) out += "\n\n";
    for (std::size_t l = 0; l < verses[v].lines.size(); ++l) {
      if (l > 0) out += '\n';
      out += verses[v].lines[l];
    }
  }
  return out;
}

inline std::string canonical_text(std::string_view raw) {
  return join_verses(segment_verses(text::to_nfc(raw)));
}

/// Replaces the verse list and recomputes the canonical text.
inline LyricsDoc with_verses(LyricsDoc doc, std::vector<Verse> verses) {
  doc.verses = std::move(verses);
  doc.text = join_verses(doc.verses);
  return doc;
}

inline void check_doc_invariants(const LyricsDoc& doc) {
  require(!doc.id.empty(), ErrorKind::format, "document id is empty");
  if (doc.label == Label::human && doc.generator)
    fail(ErrorKind::invariant, "human document " + doc.id + " carries a generator");
  if (doc.label == Label::synthetic && (!doc.generator || doc.generator->empty()))
    fail(ErrorKind::invariant, "synthetic document " + doc.id + " has no generator");
  if (doc.seed_ids && doc.seed_ids->size() > 3)
    fail(ErrorKind::invariant, "document " + doc.id + " has more than 3 seed ids");
  if (doc.verses.empty()) fail(ErrorKind::empty_input, "document " + doc.id + " has empty text");
}

/// Builds a document from its interchange JSON object.
inline LyricsDoc doc_from_json(const nlohmann::json& j) {
  static const std::set<std::string> kFields = {"id",        "language", "genre", "artist",
                                                "label",     "generator", "text", "seed_ids"};
  if (!j.is_object()) fail(ErrorKind::format, "record is not a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kFields.count(key)) fail(ErrorKind::format, "unexpected field \"" + key + "\"");
  for (const auto& key : kFields)
    if (!j.contains(key)) fail(ErrorKind::format, "missing field \"" + key + "\"");

  auto str = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_string()) fail(ErrorKind::format, std::string("field \"") + key + "\" must be a string");
    return text::to_nfc(v.get<std::string>());
  };

  LyricsDoc doc;
  doc.id = str("id");
  doc.language = str("language");
  doc.genre = str("genre");
  doc.artist = str("artist");
  doc.label = parse_label(str("label"));
  if (!j.at("generator").is_null()) doc.generator = str("generator");
  const auto& seeds = j.at("seed_ids");
  if (!seeds.is_null()) {
    if (!seeds.is_array()) fail(ErrorKind::format, "seed_ids must be null or an array");
    std::vector<std::string> ids;
    for (const auto& s : seeds) {
      if (!s.is_string()) fail(ErrorKind::format, "seed_ids entries must be strings");
      ids.push_back(s.get<std::string>());
    }
    doc.seed_ids = std::move(ids);
  }
  doc.verses = segment_verses(str("text"));
  doc.text = join_verses(doc.verses);
  check_doc_invariants(doc);
  return doc;
}

/// Parses one corpus line.
inline LyricsDoc parse_doc(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("invalid JSON: ") + e.what());
  }
  return doc_from_json(j);
}

inline nlohmann::ordered_json to_json(const LyricsDoc& doc) {
  nlohmann::ordered_json j;
  j["id"] = doc.id;
  j["language"] = doc.language;
  j["genre"] = doc.genre;
  j["artist"] = doc.artist;
  j["label"] = to_string(doc.label);
  j["generator"] = doc.generator ? nlohmann::ordered_json(*doc.generator) : nlohmann::ordered_json(nullptr);
  j["text"] = doc.text;
  j["seed_ids"] = doc.seed_ids ? nlohmann::ordered_json(*doc.seed_ids) : nlohmann::ordered_json(nullptr);
  return j;
}

inline std::string serialize_doc(const LyricsDoc& doc) { return to_json(doc).dump(); }

/// Calls `fn(line_view, line_number)` for every non-empty line; strips a
/// trailing CR and rejects a UTF-8 BOM.
template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::not_found, "cannot open " + path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0)
      throw FormatError(path, number, "file starts with a byte-order mark");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(std::string_view(line), number);
  }
}

/// Reads a whole corpus file. Errors carry the offending line number.
inline std::vector<LyricsDoc> read_corpus(const std::string& path) {
  std::vector<LyricsDoc> docs;
  std::set<std::string> seen;
  for_each_record(path, [&](std::string_view line, std::size_t number) {
    try {
      auto doc = parse_doc(line);
      if (!seen.insert(doc.id).second) throw FormatError(path, number, "duplicate id " + doc.id);
      docs.push_back(std::move(doc));
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(path, number, e.what());
    }
  });
  return docs;
}

inline void write_corpus(const std::string& path, const std::vector<LyricsDoc>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::not_found, "cannot write " + path);
  for (const auto& d : docs) out << serialize_doc(d) << '\n';
}

/// Corpus-level checks: seed ids must reference human documents.
inline void validate_corpus(const std::vector<LyricsDoc>& docs) {
  std::map<std::string, Label> labels;
  for (const auto& d : docs) labels[d.id] = d.label;
  for (const auto& d : docs) {
    if (!d.seed_ids) continue;
    for (const auto& s : *d.seed_ids) {
      auto it = labels.find(s);
      if (it == labels.end())
        fail(ErrorKind::invariant, "document " + d.id + " references unknown seed " + s);
      if (it->second != Label::human)
        fail(ErrorKind::invariant, "document " + d.id + " seed " + s + " is not human-written");
    }
  }
}

inline DocStats compute_stats(const LyricsDoc& doc) {
  require(!doc.verses.empty(), ErrorKind::empty_input, "document " + doc.id + " has no verses");
  DocStats stats;
  std::size_t lines = 0;
  for (const auto& verse : doc.verses) {
    for (const auto& line : verse.lines) {
      stats.word_count += text::split_whitespace(line).size();
      ++lines;
    }
  }
  stats.num_verses = doc.verses.size();
  stats.avg_line_len_words = static_cast<double>(stats.word_count) / static_cast<double>(lines);
  stats.avg_verse_size_lines = static_cast<double>(lines) / static_cast<double>(stats.num_verses);
  return stats;
}

}  // namespace lyricforge

#pragma once

// Probabilistic detection features computed from per-token log-likelihood
// streams. All logarithms are natural.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lyricforge/error.hpp"
#include "lyricforge/lyrics.hpp"

namespace lyricforge {

struct TokenLogProb {
  std::string text;
  double logprob = 0.0;

  bool operator==(const TokenLogProb&) const = default;
};

struct TokenLogProbs {
  std::string doc_id;
  std::string model;
  std::vector<TokenLogProb> tokens;
  std::vector<std::size_t> verse_breaks;  // first token index of each verse

  std::size_t verse_count() const { return verse_breaks.size(); }

  /// Half-open token range [begin, end) of verse v.
  std::pair<std::size_t, std::size_t> verse_range(std::size_t v) const {
    const std::size_t end = v + 1 < verse_breaks.size() ? verse_breaks[v + 1] : tokens.size();
    return {verse_breaks[v], end};
  }

  bool operator==(const TokenLogProbs&) const = default;
};

/// A named, fixed-dimension feature for one document.
struct FeatureVector {
  std::string name;
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

enum class EntropyPooling { max, max_plus_min };

struct ProbFeatureConfig {
  double min_k_percent = 10.0;
};

inline void validate(const TokenLogProbs& tlp) {
  const std::string who = "token stream for " + tlp.doc_id;
  if (tlp.tokens.empty()) fail(ErrorKind::empty_input, who + " has no tokens");
  for (std::size_t i = 0; i < tlp.tokens.size(); ++i) {
    const double lp = tlp.tokens[i].logprob;
    if (!std::isfinite(lp) || lp > 0.0)
      fail(ErrorKind::invariant, who + ": logprob at token " + std::to_string(i) +
                                     " must be finite and <= 0, got " + std::to_string(lp));
  }
  if (tlp.verse_breaks.empty() || tlp.verse_breaks.front() != 0)
    fail(ErrorKind::invariant, who + ": verse_breaks must start with 0");
  for (std::size_t v = 0; v < tlp.verse_breaks.size(); ++v) {
    if (tlp.verse_breaks[v] >= tlp.tokens.size())
      fail(ErrorKind::invariant, who + ": verse break beyond token count");
    if (v > 0 && tlp.verse_breaks[v] <= tlp.verse_breaks[v - 1])
      fail(ErrorKind::invariant, who + ": verse_breaks must be strictly increasing (empty verse)");
  }
}

namespace features {

/// exp of the mean negative log-likelihood over the whole song.
inline double perplexity(const TokenLogProbs& tlp) {
  validate(tlp);
  double total = 0.0;
  for (const auto& t : tlp.tokens) total -= t.logprob;
  return std::exp(total / static_cast<double>(tlp.tokens.size()));
}

/// Mean token NLL of every verse, in verse order.
inline std::vector<double> verse_mean_nll(const TokenLogProbs& tlp) {
  validate(tlp);
  std::vector<double> means;
  for (std::size_t v = 0; v < tlp.verse_count(); ++v) {
    auto [begin, end] = tlp.verse_range(v);
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum -= tlp.tokens[i].logprob;
    means.push_back(sum / static_cast<double>(end - begin));
  }
  return means;
}

inline double max_neg_log_likelihood(const TokenLogProbs& tlp) {
  auto means = verse_mean_nll(tlp);
  return *std::max_element(means.begin(), means.end());
}

/// Observed-token entropy proxy per verse: mean of -p ln p with p = exp(logprob).
/// Each term lies in [0, 1/e].
inline std::vector<double> verse_entropy(const TokenLogProbs& tlp) {
  validate(tlp);
  std::vector<double> out;
  for (std::size_t v = 0; v < tlp.verse_count(); ++v) {
    auto [begin, end] = tlp.verse_range(v);
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double lp = tlp.tokens[i].logprob;
      sum += -std::exp(lp) * lp;
    }
    out.push_back(sum / static_cast<double>(end - begin));
  }
  return out;
}

inline std::vector<double> shannon_entropy(const TokenLogProbs& tlp, EntropyPooling pooling) {
  auto h = verse_entropy(tlp);
  auto [lo, hi] = std::minmax_element(h.begin(), h.end());
  if (pooling == EntropyPooling::max) return {*hi};
  return {*hi, *lo};
}

/// Number of tokens selected by Min-K% for a stream of `count` tokens.
inline std::size_t min_k_count(double k_percent, std::size_t count) {
  const auto n = static_cast<std::size_t>(std::floor(k_percent * static_cast<double>(count) / 100.0));
  return std::max<std::size_t>(1, std::min(n, count));
}

/// Mean NLL of the K% least probable tokens of the whole song.
inline double min_k_prob(const TokenLogProbs& tlp, double k_percent) {
  if (!(k_percent > 0.0 && k_percent <= 100.0))
    fail(ErrorKind::config, "Min-K percent must be in (0, 100], got " + std::to_string(k_percent));
  validate(tlp);
  std::vector<double> lps;
  lps.reserve(tlp.tokens.size());
  for (const auto& t : tlp.tokens) lps.push_back(t.logprob);
  const std::size_t n = min_k_count(k_percent, lps.size());
  std::partial_sort(lps.begin(), lps.begin() + static_cast<std::ptrdiff_t>(n), lps.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum -= lps[i];
  return sum / static_cast<double>(n);
}

inline const std::vector<std::pair<std::string, std::size_t>>& feature_dims() {
  static const std::vector<std::pair<std::string, std::size_t>> kDims = {
      {"perplexity", 1}, {"max_nll", 1}, {"entropy_max", 1}, {"entropy_max_min", 2}, {"min_k", 1}};
  return kDims;
}

inline std::vector<FeatureVector> extract_all(const TokenLogProbs& tlp, const ProbFeatureConfig& cfg) {
  return {
      {"perplexity", {perplexity(tlp)}},
      {"max_nll", {max_neg_log_likelihood(tlp)}},
      {"entropy_max", shannon_entropy(tlp, EntropyPooling::max)},
      {"entropy_max_min", shannon_entropy(tlp, EntropyPooling::max_plus_min)},
      {"min_k", {min_k_prob(tlp, cfg.min_k_percent)}},
  };
}

}  // namespace features

// --- TokenLogProbs JSON Lines ------------------------------------------------

inline TokenLogProbs token_logprobs_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::format, "record is not a JSON object");
  for (const char* key : {"doc_id", "model", "tokens", "verse_breaks"})
    if (!j.contains(key)) fail(ErrorKind::format, std::string("missing field \"") + key + "\"");
  if (j.size() != 4) fail(ErrorKind::format, "unexpected extra fields");
  TokenLogProbs tlp;
  if (!j["doc_id"].is_string() || !j["model"].is_string())
    fail(ErrorKind::format, "doc_id and model must be strings");
  tlp.doc_id = j["doc_id"].get<std::string>();
  tlp.model = j["model"].get<std::string>();
  if (!j["tokens"].is_array()) fail(ErrorKind::format, "tokens must be an array");
  for (const auto& t : j["tokens"]) {
    if (!t.is_array() || t.size() != 2 || !t[0].is_string() || !t[1].is_number())
      fail(ErrorKind::format, "each token must be [\"text\", logprob]");
    tlp.tokens.push_back({t[0].get<std::string>(), t[1].get<double>()});
  }
  if (!j["verse_breaks"].is_array()) fail(ErrorKind::format, "verse_breaks must be an array");
  for (const auto& b : j["verse_breaks"]) {
    if (!b.is_number_unsigned()) fail(ErrorKind::format, "verse_breaks entries must be non-negative integers");
    tlp.verse_breaks.push_back(b.get<std::size_t>());
  }
  validate(tlp);
  return tlp;
}

inline nlohmann::ordered_json to_json(const TokenLogProbs& tlp) {
  nlohmann::ordered_json j;
  j["doc_id"] = tlp.doc_id;
  j["model"] = tlp.model;
  auto tokens = nlohmann::ordered_json::array();
  for (const auto& t : tlp.tokens) tokens.push_back(nlohmann::ordered_json::array({t.text, t.logprob}));
  j["tokens"] = std::move(tokens);
  j["verse_breaks"] = tlp.verse_breaks;
  return j;
}

inline std::vector<TokenLogProbs> read_token_logprobs(const std::string& path) {
  std::vector<TokenLogProbs> out;
  for_each_record(path, [&](std::string_view line, std::size_t number) {
    try {
      out.push_back(token_logprobs_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path, number, e.what());
    } catch (const Error& e) {
      throw FormatError(path, number, e.what());
    }
  });
  return out;
}

inline void write_token_logprobs(const std::string& path, const std::vector<TokenLogProbs>& streams) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::not_found, "cannot write " + path);
  for (const auto& s : streams) out << to_json(s).dump() << '\n';
}

/// Checks that a stream's verse count matches its document.
inline void check_alignment(const TokenLogProbs& tlp, const LyricsDoc& doc) {
  if (tlp.verse_count() != doc.verses.size())
    fail(ErrorKind::invariant, "token stream for " + tlp.doc_id + " has " +
                                   std::to_string(tlp.verse_count()) + " verses, document has " +
                                   std::to_string(doc.verses.size()));
}

}  // namespace lyricforge

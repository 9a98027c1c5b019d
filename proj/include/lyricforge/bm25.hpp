#pragma once

// Okapi BM25 index over human lyrics and the seed-regurgitation audit:
// synthetic lyrics are used as queries and the ranks of the human lyrics
// that seeded their generation are tallied by rank range.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lyricforge/error.hpp"
#include "lyricforge/lyrics.hpp"
#include "lyricforge/parallel.hpp"
#include "lyricforge/text.hpp"

namespace lyricforge::bm25 {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

inline std::vector<std::string> tokenize(std::string_view s) { return text::word_tokens(s); }

class Bm25Index {
 public:
  Bm25Index(const std::vector<LyricsDoc>& docs, Bm25Params params = {}) : params_(params) {
    require(!docs.empty(), ErrorKind::empty_input, "cannot index an empty corpus");
    require(params.k1 >= 0.0 && params.b >= 0.0 && params.b <= 1.0, ErrorKind::config,
            "BM25 needs k1 >= 0 and b in [0, 1]");
    std::size_t total_length = 0;
    for (const auto& d : docs) {
      if (position_.count(d.id)) fail(ErrorKind::invariant, "duplicate document id " + d.id);
      position_[d.id] = ids_.size();
      ids_.push_back(d.id);
      std::unordered_map<std::string, std::uint32_t> tf;
      auto tokens = tokenize(d.text);
      for (auto& t : tokens) ++tf[t];
      for (const auto& [term, _] : tf) ++df_[term];
      lengths_.push_back(tokens.size());
      total_length += tokens.size();
      tf_.push_back(std::move(tf));
    }
    avgdl_ = static_cast<double>(total_length) / static_cast<double>(ids_.size());
    require(avgdl_ > 0.0, ErrorKind::empty_input, "indexed documents contain no terms");
  }

  std::size_t size() const { return ids_.size(); }
  double avgdl() const { return avgdl_; }
  const Bm25Params& params() const { return params_; }
  const std::vector<std::string>& ids() const { return ids_; }
  bool contains(const std::string& id) const { return position_.count(id) != 0; }

  std::size_t df(const std::string& term) const {
    auto it = df_.find(term);
    return it == df_.end() ? 0 : it->second;
  }

  const std::map<std::string, std::size_t>& df_table() const { return df_; }

  /// Non-negative IDF: ln((N - df + 0.5) / (df + 0.5) + 1).
  double idf(const std::string& term) const {
    const auto n = static_cast<double>(ids_.size());
    const auto d = static_cast<double>(df(term));
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
  }

  /// Score of document `doc` (index position) for a set of query terms.
  double score(const std::set<std::string>& terms, std::size_t doc) const {
    double s = 0.0;
    const double norm = params_.k1 * (1.0 - params_.b + params_.b * static_cast<double>(lengths_[doc]) / avgdl_);
    for (const auto& t : terms) {
      auto it = tf_[doc].find(t);
      if (it == tf_[doc].end()) continue;
      const double f = it->second;
      s += idf(t) * f * (params_.k1 + 1.0) / (f + norm);
    }
    return s;
  }

  /// Full or truncated ranking; descending score, ties by document id.
  std::vector<std::pair<std::string, double>> query(std::string_view text, std::size_t top_n) const {
    auto tokens = tokenize(text);
    const std::set<std::string> terms(tokens.begin(), tokens.end());
    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(ids_.size());
    for (std::size_t d = 0; d < ids_.size(); ++d) ranked.emplace_back(ids_[d], score(terms, d));
    auto better = [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    };
    top_n = std::min(top_n, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(top_n), ranked.end(), better);
    ranked.resize(top_n);
    return ranked;
  }

 private:
  Bm25Params params_;
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> position_;
  std::vector<std::unordered_map<std::string, std::uint32_t>> tf_;
  std::vector<std::size_t> lengths_;
  std::map<std::string, std::size_t> df_;
  double avgdl_ = 0.0;
};

inline Bm25Index build_index(const std::vector<LyricsDoc>& human_docs, Bm25Params params = {}) {
  return Bm25Index(human_docs, params);
}

// --- hit-rate audit ------------------------------------------------------------

enum class HitMode { pairs, queries };

inline HitMode parse_hit_mode(std::string_view s) {
  if (s == "pairs") return HitMode::pairs;
  if (s == "queries") return HitMode::queries;
  fail(ErrorKind::config, "hit-rate mode must be pairs or queries");
}

struct RankBucket {
  std::string label;
  std::size_t lo = 0;  // exclusive lower rank bound
  std::size_t hi = 0;  // inclusive upper rank bound
  std::size_t count = 0;
  double rate = 0.0;        // percent of events
  double cumulative = 0.0;  // percent of events with rank <= hi
};

struct HitRateTable {
  HitMode mode = HitMode::pairs;
  std::size_t events = 0;
  std::size_t beyond = 0;  // events ranked past the last bucket
  std::vector<RankBucket> buckets;
};

inline std::vector<RankBucket> standard_buckets() {
  return {{"1", 0, 1}, {"2", 1, 2}, {"3", 2, 3}, {"3 to 5", 3, 5}, {"5 to 10", 5, 10}, {"10 to 20", 10, 20}, {"20 to 50", 20, 50}};
}

/// Tallies seed ranks from already-computed events (1-based ranks).
inline HitRateTable tabulate(const std::vector<std::size_t>& ranks, HitMode mode) {
  HitRateTable table;
  table.mode = mode;
  table.events = ranks.size();
  table.buckets = standard_buckets();
  for (std::size_t r : ranks) {
    bool placed = false;
    for (auto& b : table.buckets)
      if (r > b.lo && r <= b.hi) {
        ++b.count;
        placed = true;
        break;
      }
    if (!placed) ++table.beyond;
  }
  std::size_t running = 0;
  for (auto& b : table.buckets) {
    running += b.count;
    if (table.events > 0) {
      b.rate = 100.0 * static_cast<double>(b.count) / static_cast<double>(table.events);
      b.cumulative = 100.0 * static_cast<double>(running) / static_cast<double>(table.events);
    }
  }
  return table;
}

/// Seed ranks of every query. In pair mode each (query, seed) is one event;
/// in query mode each query contributes its best-ranked seed.
inline std::vector<std::size_t> seed_ranks(const Bm25Index& index, const std::vector<LyricsDoc>& synthetic, HitMode mode,
                                           std::size_t jobs = 1) {
  for (const auto& q : synthetic) {
    if (!q.seed_ids || q.seed_ids->empty()) fail(ErrorKind::invariant, "synthetic document " + q.id + " has no seed_ids");
    for (const auto& s : *q.seed_ids)
      if (!index.contains(s)) fail(ErrorKind::not_found, "seed " + s + " of " + q.id + " is not in the index");
  }
  std::vector<std::vector<std::size_t>> per_query(synthetic.size());
  parallel_for(synthetic.size(), jobs, [&](std::size_t i) {
    const auto& q = synthetic[i];
    const auto ranking = index.query(q.text, index.size());
    std::map<std::string, std::size_t> position;
    for (std::size_t r = 0; r < ranking.size(); ++r) position[ranking[r].first] = r + 1;
    std::size_t best = ranking.size() + 1;
    for (const auto& s : *q.seed_ids) {
      if (mode == HitMode::pairs)
        per_query[i].push_back(position.at(s));
      else
        best = std::min(best, position.at(s));
    }
    if (mode == HitMode::queries) per_query[i].push_back(best);
  });
  std::vector<std::size_t> ranks;
  for (const auto& r : per_query) ranks.insert(ranks.end(), r.begin(), r.end());
  return ranks;
}

inline HitRateTable hit_rate(const Bm25Index& index, const std::vector<LyricsDoc>& synthetic,
                             HitMode mode = HitMode::pairs, std::size_t jobs = 1) {
  return tabulate(seed_ranks(index, synthetic, mode, jobs), mode);
}

inline std::string format_table(const HitRateTable& t) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-10s %12s %16s\n", "Rank", "% Hit rate", "Cumulated %");
  out << buf;
  for (const auto& b : t.buckets) {
    std::snprintf(buf, sizeof buf, "%-10s %12.2f %16.2f\n", b.label.c_str(), b.rate, b.cumulative);
    out << buf;
  }
  out << "events: " << t.events << " (" << (t.mode == HitMode::pairs ? "query-seed pairs" : "queries")
      << "), beyond rank 50: " << t.beyond << '\n';
  return out.str();
}

inline nlohmann::ordered_json to_json(const HitRateTable& t) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& b : t.buckets) {
    nlohmann::ordered_json r;
    r["bucket"] = b.label;
    r["rate"] = b.rate;
    r["cumulative"] = b.cumulative;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace lyricforge::bm25

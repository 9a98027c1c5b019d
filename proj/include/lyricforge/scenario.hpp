#pragma once

// Evaluation scenarios over a labeled corpus and a feature table: baseline,
// scalability, cross-lingual, robustness, genre novelty, seen/unseen artist
// (billboard-style) and the k sweep. Each scenario builds one or more
// k-NN vector spaces from a seeded train split and scores the held-out docs.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "lyricforge/error.hpp"
#include "lyricforge/feature_table.hpp"
#include "lyricforge/knn.hpp"
#include "lyricforge/lyrics.hpp"
#include "lyricforge/metrics.hpp"
#include "lyricforge/random.hpp"

namespace lyricforge::eval {

enum class Scenario { baseline, scalability, cross_lingual, robustness, genre_novelty, billboard, k_sweep };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::baseline: return "baseline";
    case Scenario::scalability: return "scalability";
    case Scenario::cross_lingual: return "cross_lingual";
    case Scenario::robustness: return "robustness";
    case Scenario::genre_novelty: return "genre_novelty";
    case Scenario::billboard: return "billboard";
    case Scenario::k_sweep: return "k_sweep";
  }
  return "baseline";
}

inline Scenario parse_scenario(std::string_view s) {
  for (auto sc : {Scenario::baseline, Scenario::scalability, Scenario::cross_lingual, Scenario::robustness,
                  Scenario::genre_novelty, Scenario::billboard, Scenario::k_sweep})
    if (s == to_string(sc)) return sc;
  fail(ErrorKind::config, "unknown scenario \"" + std::string(s) + "\"");
}

inline std::vector<std::string> default_language_order() {
  return {"en", "de", "tr", "fr", "pt", "es", "it", "ar", "ja"};
}

struct ScenarioConfig {
  Scenario scenario = Scenario::baseline;
  std::uint64_t seed = 42;
  std::size_t per_cell = 5;  // train docs per (language, genre, class) cell
  knn::KnnConfig knn;
  std::vector<std::string> language_order = default_language_order();
  std::string source_language = "en";        // genre novelty
  std::vector<std::string> holdout_artists;  // never in any space
  std::vector<std::size_t> k_values = {1, 3, 5, 10, 20};
  std::size_t jobs = 1;
};

struct SliceRow {
  std::string key;
  std::size_t n_human = 0;
  std::size_t n_synthetic = 0;
  std::optional<double> recall_human;
  std::optional<double> recall_synthetic;
  std::optional<double> macro_recall;
  double micro_recall = 0.0;
  std::optional<double> auroc;
  std::vector<std::string> flags;
};

struct SetupResult {
  std::string name;
  std::size_t space_size = 0;
  std::vector<SliceRow> slices;
  SliceRow overall;
};

struct EvalReport {
  Scenario scenario = Scenario::baseline;
  std::string slice_kind;  // what the slice keys denote
  nlohmann::ordered_json config;
  std::vector<SetupResult> setups;
  std::vector<std::string> warnings;
};

// --- split ---------------------------------------------------------------------

using Cell = std::tuple<std::string, std::string, Label>;  // language, genre, class

struct Split {
  std::map<Cell, std::vector<const LyricsDoc*>> train;  // shuffled; prefix of length m is the m-sample
  std::vector<const LyricsDoc*> test;
};

/// Seeded split: each (language, genre, class) cell is shuffled and its first
/// `per_cell` documents form the training pool. Held-out artists are test-only.
inline Split split_corpus(const std::vector<LyricsDoc>& corpus, const ScenarioConfig& cfg) {
  const std::set<std::string> holdout(cfg.holdout_artists.begin(), cfg.holdout_artists.end());
  std::map<Cell, std::vector<const LyricsDoc*>> cells;
  Split split;
  for (const auto& d : corpus) {
    if (holdout.count(d.artist)) {
      split.test.push_back(&d);
      continue;
    }
    cells[{d.language, d.genre, d.label}].push_back(&d);
  }
  Rng rng(cfg.seed);
  for (auto& [cell, docs] : cells) {
    std::sort(docs.begin(), docs.end(), [](const LyricsDoc* a, const LyricsDoc* b) { return a->id < b->id; });
    rng.shuffle(docs);
    const std::size_t n = std::min(cfg.per_cell, docs.size());
    split.train[cell] = {docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n)};
    split.test.insert(split.test.end(), docs.begin() + static_cast<std::ptrdiff_t>(n), docs.end());
  }
  std::sort(split.test.begin(), split.test.end(), [](const LyricsDoc* a, const LyricsDoc* b) { return a->id < b->id; });
  return split;
}

// --- evaluation of one space ------------------------------------------------------

namespace detail {

inline std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

inline SliceRow summarize(std::string key, const std::vector<Label>& truth, const std::vector<Label>& pred,
                          const std::vector<double>& scores) {
  SliceRow row;
  row.key = std::move(key);
  std::size_t correct = 0, tp_h = 0, tp_s = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    correct += truth[i] == pred[i];
    if (truth[i] == Label::human) {
      ++row.n_human;
      tp_h += pred[i] == Label::human;
    } else {
      ++row.n_synthetic;
      tp_s += pred[i] == Label::synthetic;
    }
  }
  if (!truth.empty()) row.micro_recall = static_cast<double>(correct) / static_cast<double>(truth.size());
  if (row.n_human > 0) row.recall_human = static_cast<double>(tp_h) / static_cast<double>(row.n_human);
  if (row.n_synthetic > 0) row.recall_synthetic = static_cast<double>(tp_s) / static_cast<double>(row.n_synthetic);
  if (row.n_human > 0 && row.n_synthetic > 0) {
    const auto m = recall_metrics(pred, truth);
    row.macro_recall = m.macro;
    row.auroc = auroc(scores, truth);
  }
  return row;
}

struct Outcome {
  const LyricsDoc* doc;
  Label predicted;
  double score;
};

template <typename KeyFn>
std::vector<SliceRow> slice_rows(const std::vector<Outcome>& outcomes, const std::vector<std::string>& key_order, KeyFn&& key_of) {
  std::map<std::string, std::tuple<std::vector<Label>, std::vector<Label>, std::vector<double>>> groups;
  for (const auto& o : outcomes) {
    auto& [t, p, s] = groups[key_of(*o.doc)];
    t.push_back(o.doc->label);
    p.push_back(o.predicted);
    s.push_back(o.score);
  }
  std::vector<SliceRow> rows;
  for (const auto& key : key_order) {
    auto it = groups.find(key);
    if (it == groups.end()) continue;
    auto& [t, p, s] = it->second;
    rows.push_back(summarize(key, t, p, s));
  }
  return rows;
}

}  // namespace detail

inline std::vector<std::string> ordered_languages(const std::vector<LyricsDoc>& corpus, const std::vector<std::string>& order) {
  std::set<std::string> present;
  for (const auto& d : corpus) present.insert(d.language);
  std::vector<std::string> out;
  for (const auto& l : order)
    if (present.erase(l)) out.push_back(l);
  out.insert(out.end(), present.begin(), present.end());
  return out;
}

class ScenarioRunner {
 public:
  ScenarioRunner(const std::vector<LyricsDoc>& corpus, const FeatureTable& table, ScenarioConfig cfg)
      : corpus_(corpus), table_(table), cfg_(std::move(cfg)), split_(split_corpus(corpus, cfg_)) {
    cfg_.knn.check();
    require(!corpus.empty(), ErrorKind::empty_input, "empty corpus");
    require(cfg_.per_cell >= 1, ErrorKind::config, "per-cell train size must be >= 1");
    for (const auto& d : corpus)
      if (!table.rows.count(d.id)) fail(ErrorKind::not_found, "no " + table.name + " features for document " + d.id);
    languages_ = ordered_languages(corpus, cfg_.language_order);
    require(!split_.test.empty(), ErrorKind::empty_input, "train split leaves no test documents");
  }

  const Split& split() const { return split_; }

  EvalReport run() {
    EvalReport report;
    report.scenario = cfg_.scenario;
    report.slice_kind = "language";
    report.config = config_snapshot();
    switch (cfg_.scenario) {
      case Scenario::baseline:
        add_setup(report, "All", select([](const Cell&) { return true; }, cfg_.per_cell), cfg_.knn);
        break;
      case Scenario::scalability:
        for (std::size_t m = 1; m <= cfg_.per_cell; ++m)
          add_setup(report, std::to_string(m), select([](const Cell&) { return true; }, m), cfg_.knn);
        break;
      case Scenario::cross_lingual:
        for (const auto& lang : languages_)
          add_setup(report, detail::upper(lang), select([&](const Cell& c) { return std::get<0>(c) == lang; }, cfg_.per_cell),
                    cfg_.knn, {lang});
        break;
      case Scenario::robustness: {
        std::set<std::string> included;
        for (const auto& lang : languages_) {
          included.insert(lang);
          const std::string name = included.size() == 1 ? detail::upper(lang) : "+ " + detail::upper(lang);
          add_setup(report, name, select([&](const Cell& c) { return included.count(std::get<0>(c)) > 0; }, cfg_.per_cell),
                    cfg_.knn, {included.begin(), included.end()});
        }
        break;
      }
      case Scenario::genre_novelty:
        report.slice_kind = "language/genre";
        add_setup(report, detail::upper(cfg_.source_language),
                  select([&](const Cell& c) { return std::get<0>(c) == cfg_.source_language; }, cfg_.per_cell), cfg_.knn,
                  {cfg_.source_language});
        break;
      case Scenario::billboard:
        report.slice_kind = "generator/seen";
        add_setup(report, "All", select([](const Cell&) { return true; }, cfg_.per_cell), cfg_.knn);
        break;
      case Scenario::k_sweep:
        for (std::size_t k : cfg_.k_values) {
          auto knn = cfg_.knn;
          knn.k = k;
          add_setup(report, "k=" + std::to_string(k), select([](const Cell&) { return true; }, cfg_.per_cell), knn);
        }
        break;
    }
    return report;
  }

 private:
  template <typename Pred>
  std::vector<const LyricsDoc*> select(Pred&& keep, std::size_t m) const {
    std::vector<const LyricsDoc*> out;
    for (const auto& [cell, docs] : split_.train) {
      if (!keep(cell)) continue;
      for (std::size_t i = 0; i < std::min(m, docs.size()); ++i) out.push_back(docs[i]);
    }
    return out;
  }

  nlohmann::ordered_json config_snapshot() const {
    nlohmann::ordered_json j;
    j["scenario"] = to_string(cfg_.scenario);
    j["feature"] = table_.name;
    j["feature_dim"] = table_.dim;
    j["seed"] = cfg_.seed;
    j["per_cell"] = cfg_.per_cell;
    j["k"] = cfg_.knn.k;
    j["p"] = cfg_.knn.p;
    j["standardize"] = cfg_.knn.resolve_standardize(table_.sources);
    j["language_order"] = languages_;
    if (cfg_.scenario == Scenario::genre_novelty) j["source_language"] = cfg_.source_language;
    j["holdout_artists"] = cfg_.holdout_artists;
    if (cfg_.scenario == Scenario::k_sweep) j["k_values"] = cfg_.k_values;
    j["corpus_docs"] = corpus_.size();
    j["test_docs"] = split_.test.size();
    j["avg_column"] = "micro recall over all test documents (by count)";
    return j;
  }

  // Warn about cells of the given languages that have test documents but no
  // training documents in this setup.
  void check_cells(EvalReport& report, const std::string& setup, const std::vector<const LyricsDoc*>& train,
                   const std::vector<std::string>& languages) const {
    std::set<Cell> have;
    for (const auto* d : train) have.insert({d->language, d->genre, d->label});
    std::set<Cell> wanted;
    for (const auto& d : corpus_)
      if (languages.empty() || std::find(languages.begin(), languages.end(), d.language) != languages.end())
        wanted.insert({d.language, d.genre, d.label});
    for (const auto& c : wanted)
      if (!have.count(c))
        report.warnings.push_back("setup " + setup + ": no training documents for cell (" + std::get<0>(c) + ", " +
                                  std::get<1>(c) + ", " + lyricforge::to_string(std::get<2>(c)) + "); cell skipped");
  }

  void add_setup(EvalReport& report, const std::string& name, const std::vector<const LyricsDoc*>& train,
                 const knn::KnnConfig& knn_cfg, const std::vector<std::string>& languages = {}) const {
    check_cells(report, name, train, languages);
    std::vector<LyricsDoc> train_docs;
    for (const auto* d : train) train_docs.push_back(*d);
    bool has_h = false, has_s = false;
    for (const auto& d : train_docs) (d.label == Label::human ? has_h : has_s) = true;
    if (!has_h || !has_s) {
      report.warnings.push_back("setup " + name + ": training data lacks a class; setup skipped");
      return;
    }
    if (knn_cfg.k > train_docs.size()) {
      report.warnings.push_back("setup " + name + ": k exceeds the " + std::to_string(train_docs.size()) +
                                " training points; setup skipped");
      return;
    }
    const auto space = knn::build_space(table_, train_docs, knn_cfg);

    std::vector<knn::Query> queries;
    for (const auto* d : split_.test) queries.push_back({d->id, table_.rows.at(d->id)});
    const auto detections = knn::classify_all(space, queries, knn_cfg, cfg_.jobs);
    std::vector<detail::Outcome> outcomes;
    for (std::size_t i = 0; i < detections.size(); ++i)
      outcomes.push_back({split_.test[i], detections[i].predicted, detections[i].score_synthetic});

    SetupResult result;
    result.name = name;
    result.space_size = space.points.size();
    std::vector<Label> t, p;
    std::vector<double> s;
    for (const auto& o : outcomes) {
      t.push_back(o.doc->label);
      p.push_back(o.predicted);
      s.push_back(o.score);
    }
    result.overall = detail::summarize("Avg.", t, p, s);

    if (cfg_.scenario == Scenario::genre_novelty) {
      std::set<std::string> space_genres;
      for (const auto& d : train_docs) space_genres.insert(d.genre);
      std::vector<std::string> keys;
      for (const auto& lang : languages_) {
        std::set<std::string> genres;
        for (const auto* d : split_.test)
          if (d->language == lang) genres.insert(d->genre);
        for (const auto& g : genres) keys.push_back(lang + "/" + g);
      }
      result.slices = detail::slice_rows(outcomes, keys, [](const LyricsDoc& d) { return d.language + "/" + d.genre; });
      for (auto& row : result.slices) {
        const auto genre = row.key.substr(row.key.find('/') + 1);
        if (!space_genres.count(genre)) row.flags.push_back("unseen_genre");
      }
    } else if (cfg_.scenario == Scenario::billboard) {
      std::set<std::string> seen_artists;
      for (const auto& d : train_docs) seen_artists.insert(d.artist);
      auto key_of = [&](const LyricsDoc& d) {
        return (d.generator ? *d.generator : std::string("human")) + "/" + (seen_artists.count(d.artist) ? "S" : "U");
      };
      std::set<std::string> generators;
      for (const auto* d : split_.test)
        if (d->generator) generators.insert(*d->generator);
      std::vector<std::string> keys;
      for (const auto& g : generators) {
        keys.push_back(g + "/S");
        keys.push_back(g + "/U");
      }
      keys.push_back("human/S");
      keys.push_back("human/U");
      result.slices = detail::slice_rows(outcomes, keys, key_of);
    } else {
      result.slices = detail::slice_rows(outcomes, languages_, [](const LyricsDoc& d) { return d.language; });
    }
    report.setups.push_back(std::move(result));
  }

  const std::vector<LyricsDoc>& corpus_;
  const FeatureTable& table_;
  ScenarioConfig cfg_;
  Split split_;
  std::vector<std::string> languages_;
};

inline EvalReport run_scenario(const std::vector<LyricsDoc>& corpus, const FeatureTable& table, const ScenarioConfig& cfg) {
  return ScenarioRunner(corpus, table, cfg).run();
}

// --- output --------------------------------------------------------------------

namespace detail {

inline std::string pct(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
  return buf;
}

inline nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json row_json(const SliceRow& r) {
  nlohmann::ordered_json j;
  j["key"] = r.key;
  j["n_human"] = r.n_human;
  j["n_synthetic"] = r.n_synthetic;
  j["recall_human"] = opt(r.recall_human);
  j["recall_synthetic"] = opt(r.recall_synthetic);
  j["macro_recall"] = opt(r.macro_recall);
  j["micro_recall"] = r.micro_recall;
  j["auroc"] = opt(r.auroc);
  j["flags"] = r.flags;
  return j;
}

inline const SliceRow* find_slice(const SetupResult& s, const std::string& key) {
  for (const auto& r : s.slices)
    if (r.key == key) return &r;
  return nullptr;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["scenario"] = to_string(report.scenario);
  j["slice_kind"] = report.slice_kind;
  j["config"] = report.config;
  auto setups = nlohmann::ordered_json::array();
  for (const auto& s : report.setups) {
    nlohmann::ordered_json sj;
    sj["setup"] = s.name;
    sj["space_size"] = s.space_size;
    auto slices = nlohmann::ordered_json::array();
    for (const auto& r : s.slices) slices.push_back(detail::row_json(r));
    sj["slices"] = std::move(slices);
    sj["overall"] = detail::row_json(s.overall);
    setups.push_back(std::move(sj));
  }
  j["setups"] = std::move(setups);
  j["warnings"] = report.warnings;
  return j;
}

/// Slice cells hold macro recall (percent); "Avg." is micro recall over all
/// test documents. The k sweep is printed transposed (languages as rows).
inline std::string format_table(const EvalReport& report) {
  std::ostringstream out;
  char buf[64];
  std::vector<std::string> columns;
  for (const auto& s : report.setups)
    for (const auto& r : s.slices)
      if (std::find(columns.begin(), columns.end(), r.key) == columns.end()) columns.push_back(r.key);
  auto cell = [](const SliceRow* r) { return r ? detail::pct(r->macro_recall ? r->macro_recall : std::optional<double>(r->micro_recall)) : std::string("-"); };
  auto label = [&](const std::string& key) {
    if (report.slice_kind == "language") return detail::upper(key);
    return key;
  };

  if (report.scenario == Scenario::k_sweep) {
    std::snprintf(buf, sizeof buf, "%-14s", "Langs");
    out << buf;
    for (const auto& s : report.setups) {
      std::snprintf(buf, sizeof buf, " %8s", s.name.c_str());
      out << buf;
    }
    out << '\n';
    for (const auto& key : columns) {
      std::snprintf(buf, sizeof buf, "%-14s", label(key).c_str());
      out << buf;
      for (const auto& s : report.setups) {
        std::snprintf(buf, sizeof buf, " %8s", cell(detail::find_slice(s, key)).c_str());
        out << buf;
      }
      out << '\n';
    }
    std::snprintf(buf, sizeof buf, "%-14s", "Avg.");
    out << buf;
    for (const auto& s : report.setups) {
      std::snprintf(buf, sizeof buf, " %8s", detail::pct(s.overall.micro_recall).c_str());
      out << buf;
    }
    out << '\n';
  } else if (report.scenario == Scenario::genre_novelty) {
    for (const auto& s : report.setups) {
      out << "Vector space: " << s.name << " (" << s.space_size << " points)\n";
      std::snprintf(buf, sizeof buf, "%-28s %8s\n", "Language/genre", "Recall");
      out << buf;
      for (const auto& r : s.slices) {
        const bool unseen = std::find(r.flags.begin(), r.flags.end(), "unseen_genre") != r.flags.end();
        std::snprintf(buf, sizeof buf, "%-28s %8s%s\n", r.key.c_str(), cell(&r).c_str(), unseen ? " *" : "");
        out << buf;
      }
      std::snprintf(buf, sizeof buf, "%-28s %8s\n", "Avg.", detail::pct(s.overall.micro_recall).c_str());
      out << buf;
    }
    out << "* genre absent from the vector space\n";
  } else {
    std::snprintf(buf, sizeof buf, "%-14s %-8s", "Scenario", "Setup");
    out << buf;
    for (const auto& c : columns) {
      std::snprintf(buf, sizeof buf, " %7s", label(c).c_str());
      out << buf;
    }
    out << "    Avg.\n";
    for (std::size_t i = 0; i < report.setups.size(); ++i) {
      const auto& s = report.setups[i];
      std::snprintf(buf, sizeof buf, "%-14s %-8s", i == 0 ? to_string(report.scenario) : "", s.name.c_str());
      out << buf;
      for (const auto& c : columns) {
        std::snprintf(buf, sizeof buf, " %7s", cell(detail::find_slice(s, c)).c_str());
        out << buf;
      }
      std::snprintf(buf, sizeof buf, " %7s\n", detail::pct(s.overall.micro_recall).c_str());
      out << buf;
    }
  }
  out << "Cells: macro recall (%), or class recall where a slice holds one class. "
         "Avg.: micro recall over all test documents, by count.\n";
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  return out.str();
}

/// Plot-data export: one CSV row per (setup, slice).
inline std::string format_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "scenario,setup,slice,n_human,n_synthetic,recall_human,recall_synthetic,macro_recall,micro_recall,auroc\n";
  auto num = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return std::string(buf);
  };
  for (const auto& s : report.setups) {
    auto rows = s.slices;
    rows.push_back(s.overall);
    for (const auto& r : rows)
      out << to_string(report.scenario) << ',' << s.name << ',' << r.key << ',' << r.n_human << ',' << r.n_synthetic << ','
          << num(r.recall_human) << ',' << num(r.recall_synthetic) << ',' << num(r.macro_recall) << ','
          << num(r.micro_recall) << ',' << num(r.auroc) << '\n';
  }
  return out.str();
}

}  // namespace lyricforge::eval

// lyricforge: command-line front end for the detection, curation, audit and
// evaluation pipeline.
//
// Exit codes: 0 success, 1 validation or usage error, 2 internal error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "lyricforge/bm25.hpp"
#include "lyricforge/curation.hpp"
#include "lyricforge/embedding.hpp"
#include "lyricforge/error.hpp"
#include "lyricforge/feature_table.hpp"
#include "lyricforge/fixture.hpp"
#include "lyricforge/knn.hpp"
#include "lyricforge/lyrics.hpp"
#include "lyricforge/metrics.hpp"
#include "lyricforge/mlp.hpp"
#include "lyricforge/ngram.hpp"
#include "lyricforge/parallel.hpp"
#include "lyricforge/scenario.hpp"
#include "lyricforge/tokenprob.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace lyricforge;

namespace {

struct Globals {
  std::uint64_t seed = 42;
  std::size_t jobs = 0;
  bool json = false;
  std::string data_dir;
  std::string out_dir = ".";
};

Globals g;

std::size_t jobs() { return g.jobs == 0 ? default_jobs() : g.jobs; }

// Inputs resolve against the data directory: --data-dir, else LYRICFORGE_DATA,
// else the working directory.
std::string data_dir() {
  if (!g.data_dir.empty()) return g.data_dir;
  if (const char* env = std::getenv("LYRICFORGE_DATA"); env && *env) return env;
  return ".";
}

std::string input(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) p = fs::path(data_dir()) / p;
  if (!fs::exists(p)) fail(ErrorKind::not_found, "input file not found: " + p.string());
  return p.lexically_normal().string();
}

std::string output(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) p = fs::path(g.out_dir) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p.lexically_normal().string();
}

json globals_json() {
  json j;
  j["seed"] = g.seed;
  j["data_dir"] = data_dir();
  return j;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::not_found, "cannot write " + path);
  out << content;
}

void write_rejections(const std::string& path, const std::vector<curation::Rejection>& rejected) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::not_found, "cannot write " + path);
  for (const auto& r : rejected) {
    json j;
    j["id"] = r.id;
    j["stage"] = r.stage;
    j["reason"] = r.reason;
    out << j.dump() << '\n';
  }
}

std::pair<std::vector<LyricsDoc>, std::vector<LyricsDoc>> by_label(const std::vector<LyricsDoc>& docs) {
  std::vector<LyricsDoc> human, synthetic;
  for (const auto& d : docs) (d.label == Label::human ? human : synthetic).push_back(d);
  return {std::move(human), std::move(synthetic)};
}

std::vector<LyricsDoc> sorted_by_id(std::vector<LyricsDoc> docs) {
  std::sort(docs.begin(), docs.end(), [](const LyricsDoc& a, const LyricsDoc& b) { return a.id < b.id; });
  return docs;
}

FeatureTable load_features(const std::string& path, const std::vector<std::string>& names) {
  std::vector<FeatureTable> tables;
  for (const auto& n : names) tables.push_back(load_feature_table(path, n));
  return concat(tables);
}

std::vector<std::string> split_plus(const std::string& s) {
  std::vector<std::string> out;
  for (auto part : text::split_char(s, '+')) out.emplace_back(part);
  return out;
}

// --- fixture -------------------------------------------------------------------

struct FixtureArgs {
  std::string corpus = "corpus.jsonl";
  std::string reference = "reference.jsonl";
};

void run_fixture(const FixtureArgs& a) {
  fixture::FixtureSpec spec;
  spec.seed = g.seed;
  const auto fx = fixture::build(spec);
  write_corpus(output(a.corpus), fx.corpus);
  write_corpus(output(a.reference), fx.reference);
  std::cerr << "wrote " << fx.corpus.size() << " documents and " << fx.reference.size() << " reference documents\n";
}

// --- curate ----------------------------------------------------------------------

struct CurateArgs {
  std::string input;
  std::string output;
  std::string log;
  std::string rules;
  bool all = false;
  std::string reference;
  std::string group = "artist";
  std::string embeddings;
  std::size_t cap = 150;
  std::string aggregation = "mean";
};

void finish_curation(const CurateArgs& a, const std::string& stage, std::vector<LyricsDoc> kept,
                     const std::vector<curation::Rejection>& rejected, std::size_t candidates) {
  write_corpus(output(a.output), sorted_by_id(std::move(kept)));
  if (!a.log.empty()) write_rejections(output(a.log), rejected);
  if (g.json) {
    json j;
    j["stage"] = stage;
    j["candidates"] = candidates;
    j["rejected"] = rejected.size();
    j["config"] = globals_json();
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << stage << ": " << candidates - rejected.size() << " of " << candidates << " candidates kept\n";
  }
}

void run_normalize(const CurateArgs& a) {
  const auto rules = a.rules.empty() ? curation::default_rules() : curation::load_rules(input(a.rules));
  const auto docs = read_corpus(input(a.input));
  std::vector<LyricsDoc> kept;
  std::vector<curation::Rejection> rejected;
  std::size_t candidates = 0;
  for (const auto& d : docs) {
    if (d.label == Label::human && !a.all) {
      kept.push_back(d);
      continue;
    }
    ++candidates;
    try {
      kept.push_back(curation::normalize(d, rules));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::empty_input) throw;
      rejected.push_back({d.id, "normalize", "empty after normalization"});
    }
  }
  finish_curation(a, "normalize", std::move(kept), rejected, candidates);
}

std::vector<LyricsDoc> reference_humans(const CurateArgs& a, const std::vector<LyricsDoc>& human_in_input) {
  if (a.reference.empty()) return human_in_input;
  return by_label(read_corpus(input(a.reference))).first;
}

void run_iqr(const CurateArgs& a) {
  const auto key = curation::parse_group_key(a.group);
  auto [human, synthetic] = by_label(read_corpus(input(a.input)));
  const auto bounds = curation::fit_iqr(reference_humans(a, human), key);
  auto result = curation::iqr_filter(synthetic, bounds, key);
  auto kept = human;
  kept.insert(kept.end(), result.kept.begin(), result.kept.end());
  finish_curation(a, "iqr", std::move(kept), result.rejected, synthetic.size());
}

void run_semantic(const CurateArgs& a) {
  const auto key = curation::parse_group_key(a.group);
  const auto aggregation = curation::parse_aggregation(a.aggregation);
  require(a.cap >= 1, ErrorKind::config, "--cap must be >= 1");
  auto [human, synthetic] = by_label(read_corpus(input(a.input)));
  const auto embeddings = embed::load_embeddings(input(a.embeddings));
  const auto scored = curation::semantic_filter(synthetic, reference_humans(a, human), embeddings, key, a.cap, aggregation);
  std::set<std::string> kept_ids;
  auto kept = human;
  for (const auto& s : scored) {
    kept_ids.insert(s.doc.id);
    kept.push_back(s.doc);
  }
  std::vector<curation::Rejection> rejected;
  for (const auto& d : synthetic)
    if (!kept_ids.count(d.id))
      rejected.push_back({d.id, "semantic", "outside top " + std::to_string(a.cap) + " of bucket " +
                                                d.generator.value_or("") + "/" + curation::group_of(d, key)});
  finish_curation(a, "semantic", std::move(kept), rejected, synthetic.size());
}

// --- oracle ------------------------------------------------------------------------

struct OracleArgs {
  std::string corpus;
  std::string model;
  std::string output;
  int order = 3;
  double alpha = 0.5;
  std::string name = "char-ngram";
};

void run_oracle_train(const OracleArgs& a) {
  const auto human = by_label(read_corpus(input(a.corpus))).first;
  require(!human.empty(), ErrorKind::empty_input, "oracle training needs human documents");
  ngram::save(ngram::train(human, a.order, a.alpha), output(a.output));
  std::cerr << "trained order-" << a.order << " model on " << human.size() << " human documents\n";
}

void run_oracle_score(const OracleArgs& a) {
  const auto model = ngram::load(input(a.model));
  const auto docs = read_corpus(input(a.corpus));
  std::vector<TokenLogProbs> streams(docs.size());
  parallel_for(docs.size(), jobs(), [&](std::size_t i) { streams[i] = ngram::score(model, docs[i], a.name); });
  write_token_logprobs(output(a.output), streams);
}

// --- features ----------------------------------------------------------------------

struct FeatureArgs {
  std::string input;
  std::string corpus;
  std::string output;
  double min_k = 10.0;
};

void run_features_tokenprob(const FeatureArgs& a) {
  const auto streams = read_token_logprobs(input(a.input));
  if (!a.corpus.empty()) {
    std::map<std::string, LyricsDoc> docs;
    for (auto& d : read_corpus(input(a.corpus))) docs.emplace(d.id, std::move(d));
    for (const auto& s : streams) {
      auto it = docs.find(s.doc_id);
      if (it == docs.end()) fail(ErrorKind::not_found, "token stream for unknown document " + s.doc_id);
      check_alignment(s, it->second);
    }
  }
  ProbFeatureConfig cfg;
  cfg.min_k_percent = a.min_k;
  std::vector<DocFeatures> out(streams.size());
  parallel_for(streams.size(), jobs(), [&](std::size_t i) {
    out[i] = {streams[i].doc_id, features::extract_all(streams[i], cfg)};
  });
  std::sort(out.begin(), out.end(), [](const DocFeatures& x, const DocFeatures& y) { return x.doc_id < y.doc_id; });
  write_feature_file(output(a.output), out);
}

void run_validate_embeddings(const FeatureArgs& a) {
  const auto embeddings = embed::load_embeddings(input(a.input));
  require(!embeddings.empty(), ErrorKind::empty_input, "embedding file is empty");
  if (!a.corpus.empty())
    for (const auto& d : read_corpus(input(a.corpus)))
      if (!embeddings.count(d.id)) fail(ErrorKind::not_found, "no embedding for document " + d.id);
  const auto& first = embeddings.begin()->second;
  if (!a.output.empty()) {
    std::vector<DocFeatures> out;
    for (const auto& [id, e] : embeddings) out.push_back({id, {{e.model, e.vector}}});
    write_feature_file(output(a.output), out);
  }
  if (g.json) {
    json j;
    j["model"] = first.model;
    j["dim"] = first.dim;
    j["documents"] = embeddings.size();
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << embeddings.size() << " embeddings, model " << first.model << ", dim " << first.dim << '\n';
  }
}

// --- space / detect ------------------------------------------------------------------

struct KnnArgs {
  std::size_t k = 3;
  double p = 2.0;
  std::string standardize = "auto";

  knn::KnnConfig config() const {
    knn::KnnConfig cfg;
    cfg.k = k;
    cfg.p = p;
    cfg.standardize = knn::parse_standardize(standardize);
    cfg.check();
    return cfg;
  }
};

struct SpaceArgs {
  std::string corpus;
  std::string features;
  std::vector<std::string> feature;
  std::string output;
  std::size_t per_cell = 0;
  KnnArgs knn;
};

void run_space_build(const SpaceArgs& a) {
  const auto docs = read_corpus(input(a.corpus));
  const auto table = load_features(input(a.features), a.feature);
  std::vector<LyricsDoc> members;
  if (a.per_cell == 0) {
    members = docs;
  } else {
    eval::ScenarioConfig sc;
    sc.seed = g.seed;
    sc.per_cell = a.per_cell;
    const auto split = eval::split_corpus(docs, sc);
    for (const auto& [cell, list] : split.train)
      for (const auto* d : list) members.push_back(*d);
    members = sorted_by_id(std::move(members));
  }
  const auto space = knn::build_space(table, members, a.knn.config());
  knn::save_space(space, output(a.output));
  std::cerr << "space " << space.feature_name << ": " << space.points.size() << " points, dim " << space.dim
            << (space.scaling ? ", standardized" : "") << '\n';
}

struct DetectArgs {
  std::vector<std::string> spaces;
  std::string corpus;
  std::string features;
  std::string output;
  std::string method = "knn";
  bool include_space_points = false;
  KnnArgs knn;
  std::size_t hidden = 32;
  double lr = 0.05;
  std::size_t epochs = 200;
};

void run_detect(const DetectArgs& a) {
  require(a.method == "knn" || a.method == "mlp", ErrorKind::config, "--method must be knn or mlp");
  auto cfg = a.knn.config();
  const auto docs = read_corpus(input(a.corpus));
  std::vector<knn::VectorSpace> spaces;
  std::vector<std::string> names;
  for (const auto& s : a.spaces) {
    spaces.push_back(knn::load_space(input(s)));
    names.push_back(spaces.back().feature_name);
  }
  std::set<std::string> in_space;
  for (const auto& s : spaces)
    for (const auto& p : s.points) in_space.insert(p.meta.id);
  std::vector<const LyricsDoc*> targets;
  for (const auto& d : docs)
    if (a.include_space_points || !in_space.count(d.id)) targets.push_back(&d);
  require(!targets.empty(), ErrorKind::empty_input, "no documents to classify outside the space");

  // per detector, per target
  std::vector<std::vector<knn::Detection>> results;
  for (const auto& space : spaces) {
    const auto table = load_features(input(a.features), split_plus(space.feature_name));
    std::vector<knn::Query> queries;
    for (const auto* d : targets) {
      auto it = table.rows.find(d->id);
      if (it == table.rows.end()) fail(ErrorKind::not_found, "no " + table.name + " features for " + d->id);
      queries.push_back({d->id, it->second});
    }
    if (a.method == "knn") {
      results.push_back(knn::classify_all(space, queries, cfg, jobs()));
      continue;
    }
    std::vector<std::vector<double>> xs;
    std::vector<Label> ys;
    for (const auto& p : space.points) {
      xs.push_back(p.vector);
      ys.push_back(p.label);
    }
    mlp::MlpConfig mc;
    mc.seed = g.seed;
    mc.hidden = a.hidden;
    mc.learning_rate = a.lr;
    mc.epochs = a.epochs;
    const auto model = mlp::train(xs, ys, mc);
    std::vector<knn::Detection> dets;
    for (const auto& q : queries) {
      const double prob = model.probability(space.transform(q.vector));
      dets.push_back({q.doc_id, prob >= 0.5 ? Label::synthetic : Label::human, prob, {}});
    }
    results.push_back(std::move(dets));
  }

  std::vector<Label> predicted, truth;
  std::vector<double> scores;
  std::ofstream out;
  if (!a.output.empty()) {
    out.open(output(a.output), std::ios::binary);
    if (!out) fail(ErrorKind::not_found, "cannot write " + a.output);
  }
  for (std::size_t t = 0; t < targets.size(); ++t) {
    std::vector<knn::Vote> votes;
    double score = 0.0;
    json per = json::array();
    for (std::size_t s = 0; s < spaces.size(); ++s) {
      const auto& det = results[s][t];
      votes.push_back({names[s], det.predicted});
      score += det.score_synthetic / static_cast<double>(spaces.size());
      json dj;
      dj["detector"] = names[s];
      dj["predicted"] = to_string(det.predicted);
      dj["score_synthetic"] = det.score_synthetic;
      json nb = json::array();
      for (const auto& n : det.neighbors) nb.push_back(json{{"id", n.id}, {"distance", n.distance}});
      dj["neighbors"] = std::move(nb);
      per.push_back(std::move(dj));
    }
    const Label label = spaces.size() == 1 ? votes.front().label : knn::majority_vote(votes, names);
    predicted.push_back(label);
    truth.push_back(targets[t]->label);
    scores.push_back(score);
    if (out) {
      json j;
      j["doc_id"] = targets[t]->id;
      j["predicted"] = to_string(label);
      j["score_synthetic"] = score;
      j["detectors"] = std::move(per);
      out << j.dump() << '\n';
    }
  }

  json summary;
  summary["method"] = a.method;
  summary["detectors"] = names;
  summary["documents"] = targets.size();
  const bool both = std::count(truth.begin(), truth.end(), Label::human) > 0 &&
                    std::count(truth.begin(), truth.end(), Label::synthetic) > 0;
  if (both) {
    const auto m = eval::recall_metrics(predicted, truth);
    summary["recall_human"] = m.recall_human;
    summary["recall_synthetic"] = m.recall_synthetic;
    summary["macro_recall"] = m.macro;
    summary["micro_recall"] = m.micro;
    summary["auroc"] = eval::auroc(scores, truth);
  }
  json config = globals_json();
  config["k"] = cfg.k;
  config["p"] = cfg.p;
  summary["config"] = std::move(config);
  if (g.json) {
    std::cout << summary.dump(2) << '\n';
  } else {
    std::cout << "classified " << targets.size() << " documents with " << names.size() << " detector(s)\n";
    if (both) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "recall human %.1f  synthetic %.1f  macro %.1f  micro %.1f  AUROC %.3f\n",
                    100.0 * summary["recall_human"].get<double>(), 100.0 * summary["recall_synthetic"].get<double>(),
                    100.0 * summary["macro_recall"].get<double>(), 100.0 * summary["micro_recall"].get<double>(),
                    summary["auroc"].get<double>());
      std::cout << buf;
    }
  }
}

// --- eval ------------------------------------------------------------------------------

struct ScenarioArgs {
  std::string name = "baseline";
  std::string corpus;
  std::string features;
  std::vector<std::string> feature;
  std::string output;
  std::string plot_data;
  std::size_t per_cell = 5;
  std::vector<std::string> language_order;
  std::string source_language = "en";
  std::vector<std::string> holdout_artists;
  std::vector<std::size_t> k_values;
  KnnArgs knn;
};

void run_eval_scenario(const ScenarioArgs& a) {
  eval::ScenarioConfig cfg;
  cfg.scenario = eval::parse_scenario(a.name);
  cfg.seed = g.seed;
  cfg.per_cell = a.per_cell;
  cfg.knn = a.knn.config();
  if (!a.language_order.empty()) cfg.language_order = a.language_order;
  cfg.source_language = a.source_language;
  cfg.holdout_artists = a.holdout_artists;
  if (!a.k_values.empty()) cfg.k_values = a.k_values;
  cfg.jobs = jobs();
  const auto docs = read_corpus(input(a.corpus));
  const auto table = load_features(input(a.features), a.feature);
  const auto report = eval::run_scenario(docs, table, cfg);
  const auto text_report = eval::format_table(report);
  const auto json_report = eval::to_json(report).dump(2) + "\n";
  if (!a.output.empty()) {
    write_text(output(a.output + ".txt"), text_report);
    write_text(output(a.output + ".json"), json_report);
  }
  if (!a.plot_data.empty()) write_text(output(a.plot_data), eval::format_csv(report));
  std::cout << (g.json ? json_report : text_report);
}

struct AgreementArgs {
  std::string annotations;
  std::string corpus;
  std::string output;
};

json agreement_json(const eval::AgreementReport& r) {
  json j;
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    json pj;
    pj["rater_a"] = p.rater_a;
    pj["rater_b"] = p.rater_b;
    pj["items"] = p.items;
    pj["agreement"] = p.agreement;
    pj["kappa"] = p.kappa;
    pj["ac1"] = p.ac1;
    pairs.push_back(std::move(pj));
  }
  j["pairs"] = std::move(pairs);
  json conf = json::object();
  for (const auto& [rater, c] : r.confidence) {
    json cj;
    cj["mean_correct"] = c.mean_correct ? json(*c.mean_correct) : json(nullptr);
    cj["mean_incorrect"] = c.mean_incorrect ? json(*c.mean_incorrect) : json(nullptr);
    conf[rater] = std::move(cj);
  }
  j["confidence"] = std::move(conf);
  json recalls = json::array();
  for (const auto& rr : r.recalls) {
    json rj;
    rj["rater"] = rr.rater;
    rj["recall_human"] = rr.recall.recall_human;
    rj["recall_synthetic"] = rr.recall.recall_synthetic;
    rj["macro_recall"] = rr.recall.macro;
    recalls.push_back(std::move(rj));
  }
  j["recalls"] = std::move(recalls);
  j["full_agreement"] = r.full_agreement;
  return j;
}

std::string agreement_text(const eval::AgreementReport& r) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %-12s %6s %10s %8s %8s\n", "Rater A", "Rater B", "Items", "Agree %", "Kappa", "AC1");
  out << buf;
  for (const auto& p : r.pairs) {
    std::snprintf(buf, sizeof buf, "%-12s %-12s %6zu %10.2f %8.3f %8.3f\n", p.rater_a.c_str(), p.rater_b.c_str(), p.items,
                  p.agreement, p.kappa, p.ac1);
    out << buf;
  }
  out << '\n';
  std::snprintf(buf, sizeof buf, "%-12s %10s %10s\n", "Rater", "Correct", "Incorrect");
  out << buf;
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", *v);
    return std::string(b);
  };
  for (const auto& [rater, c] : r.confidence) {
    std::snprintf(buf, sizeof buf, "%-12s %10s %10s\n", rater.c_str(), cell(c.mean_correct).c_str(),
                  cell(c.mean_incorrect).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "\nfull agreement: %.2f%%\n", r.full_agreement);
  out << buf;
  return out.str();
}

void run_eval_agreement(const AgreementArgs& a) {
  const auto annotations = eval::read_annotations(input(a.annotations));
  std::map<std::string, Label> truth;
  for (const auto& d : read_corpus(input(a.corpus))) truth.emplace(d.id, d.label);
  const auto report = eval::agreement_report(annotations, truth);
  auto j = agreement_json(report);
  j["config"] = globals_json();
  const auto text_report = agreement_text(report);
  if (!a.output.empty()) {
    write_text(output(a.output + ".txt"), text_report);
    write_text(output(a.output + ".json"), j.dump(2) + "\n");
  }
  std::cout << (g.json ? j.dump(2) + "\n" : text_report);
}

// --- audit -----------------------------------------------------------------------------

struct AuditArgs {
  std::string corpus;
  std::string index;
  std::string mode = "pairs";
  double k1 = 1.2;
  double b = 0.75;
  std::string output;
};

void run_audit(const AuditArgs& a) {
  const auto mode = bm25::parse_hit_mode(a.mode);
  auto [human, synthetic] = by_label(read_corpus(input(a.corpus)));
  if (!a.index.empty()) human = by_label(read_corpus(input(a.index))).first;
  require(!synthetic.empty(), ErrorKind::empty_input, "no synthetic documents to use as queries");
  const auto index = bm25::build_index(human, {a.k1, a.b});
  const auto table = bm25::hit_rate(index, synthetic, mode, jobs());
  json j;
  j["hit_rate"] = bm25::to_json(table);
  j["events"] = table.events;
  j["beyond"] = table.beyond;
  j["mode"] = a.mode;
  json config = globals_json();
  config["k1"] = a.k1;
  config["b"] = a.b;
  config["indexed"] = index.size();
  j["config"] = std::move(config);
  const auto text_report = bm25::format_table(table);
  if (!a.output.empty()) {
    write_text(output(a.output + ".txt"), text_report);
    write_text(output(a.output + ".json"), j.dump(2) + "\n");
  }
  std::cout << (g.json ? j.dump(2) + "\n" : text_report);
}

// --- validate --------------------------------------------------------------------------

std::string detect_kind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::is_blank(line)) continue;
    if (line.rfind(knn::kSpaceHeader, 0) == 0) return "space";
    if (line.rfind(ngram::kHeader, 0) == 0) return "model";
    if (line[0] == '#' || (line.find('=') != std::string::npos && line[0] != '{')) return "rules";
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) break;
      if (j.contains("rater")) return "annotations";
      if (j.contains("tokens")) return "tokenprobs";
      if (j.contains("feature")) return "features";
      if (j.contains("dim")) return "embeddings";
      if (j.contains("text")) return "corpus";
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path, 1, e.what());
    }
    break;
  }
  fail(ErrorKind::format, "cannot tell the format of " + path + "; pass --kind");
}

void run_validate(const std::string& file, std::string kind) {
  const auto path = input(file);
  if (kind.empty()) kind = detect_kind(path);
  std::size_t records = 0;
  if (kind == "corpus") {
    const auto docs = read_corpus(path);
    validate_corpus(docs);
    records = docs.size();
  } else if (kind == "tokenprobs") {
    records = read_token_logprobs(path).size();
  } else if (kind == "embeddings") {
    records = embed::load_embeddings(path).size();
  } else if (kind == "features") {
    std::set<std::string> names;
    for_each_record(path, [&](std::string_view line, std::size_t number) {
      try {
        names.insert(nlohmann::json::parse(line).at("feature").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(path, number, e.what());
      }
    });
    for (const auto& n : names) records += load_feature_table(path, n).rows.size();
  } else if (kind == "annotations") {
    records = eval::read_annotations(path).size();
  } else if (kind == "space") {
    records = knn::load_space(path).points.size();
  } else if (kind == "model") {
    records = ngram::load(path).vocab().size();
  } else if (kind == "rules") {
    records = curation::load_rules(path).drop_line_patterns.size();
  } else {
    fail(ErrorKind::config, "unknown kind \"" + kind + "\"");
  }
  if (g.json) {
    json j;
    j["file"] = path;
    j["kind"] = kind;
    j["records"] = records;
    j["valid"] = true;
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << path << ": valid " << kind << " (" << records << " records)\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lyricforge: detect machine-generated song lyrics and audit lyric corpora"};
  app.set_config("--config", "", "INI or TOML file with option values");
  app.add_option("--seed", g.seed, "Seed for every sampling step")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads (0 = available parallelism)")->capture_default_str();
  app.add_flag("--json", g.json, "Machine-readable output on stdout");
  app.add_option("--data-dir", g.data_dir, "Directory that relative input paths resolve against (env LYRICFORGE_DATA)");
  app.add_option("--out-dir", g.out_dir, "Directory that relative output paths resolve against")->capture_default_str();
  app.require_subcommand(1);
  app.fallthrough();

  std::function<void()> action;

  FixtureArgs fx;
  auto* fixture_cmd = app.add_subcommand("fixture", "Write the synthetic demo corpus");
  fixture_cmd->add_option("--corpus", fx.corpus, "Corpus output")->capture_default_str();
  fixture_cmd->add_option("--reference", fx.reference, "Reference human lyrics output")->capture_default_str();
  fixture_cmd->callback([&] { action = [&] { run_fixture(fx); }; });

  CurateArgs ca;
  auto* curate = app.add_subcommand("curate", "Normalize and filter generated lyrics");
  curate->require_subcommand(1);
  auto curate_common = [&](CLI::App* c) {
    c->add_option("--input", ca.input, "Corpus JSONL")->required();
    c->add_option("--output", ca.output, "Filtered corpus JSONL")->required();
    c->add_option("--log", ca.log, "Rejection log JSONL");
  };
  auto* normalize = curate->add_subcommand("normalize", "Apply normalization rules to synthetic lyrics");
  curate_common(normalize);
  normalize->add_option("--rules", ca.rules, "Rules config file (defaults built in)");
  normalize->add_flag("--all", ca.all, "Normalize human lyrics too");
  normalize->callback([&] { action = [&] { run_normalize(ca); }; });
  auto* iqr = curate->add_subcommand("iqr", "Keep synthetic lyrics inside the human interquartile ranges");
  curate_common(iqr);
  iqr->add_option("--reference", ca.reference, "Human lyrics to fit bounds on (default: humans in --input)");
  iqr->add_option("--group", ca.group, "artist or language_genre")->capture_default_str();
  iqr->callback([&] { action = [&] { run_iqr(ca); }; });
  auto* semantic = curate->add_subcommand("semantic", "Keep the synthetic lyrics most similar to their human group");
  curate_common(semantic);
  semantic->add_option("--embeddings", ca.embeddings, "Embedding JSONL covering all documents")->required();
  semantic->add_option("--reference", ca.reference, "Human lyrics of each group (default: humans in --input)");
  semantic->add_option("--group", ca.group, "artist or language_genre")->capture_default_str();
  semantic->add_option("--cap", ca.cap, "Documents kept per (generator, group)")->capture_default_str();
  semantic->add_option("--aggregation", ca.aggregation, "mean or max cosine to the group")->capture_default_str();
  semantic->callback([&] { action = [&] { run_semantic(ca); }; });

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "Character n-gram scoring model");
  oracle->require_subcommand(1);
  auto* otrain = oracle->add_subcommand("train", "Train on the human lyrics of a corpus");
  otrain->add_option("--corpus", oa.corpus, "Corpus JSONL")->required();
  otrain->add_option("--output", oa.output, "Model file")->required();
  otrain->add_option("--order", oa.order, "n-gram order")->capture_default_str()->check(CLI::Range(1, 12));
  otrain->add_option("--alpha", oa.alpha, "Additive smoothing")->capture_default_str()->check(CLI::PositiveNumber);
  otrain->callback([&] { action = [&] { run_oracle_train(oa); }; });
  auto* oscore = oracle->add_subcommand("score", "Emit per-token log-probabilities");
  oscore->add_option("--model", oa.model, "Model file")->required();
  oscore->add_option("--corpus", oa.corpus, "Corpus JSONL")->required();
  oscore->add_option("--output", oa.output, "TokenLogProbs JSONL")->required();
  oscore->add_option("--name", oa.name, "Model name recorded in the output")->capture_default_str();
  oscore->callback([&] { action = [&] { run_oracle_score(oa); }; });

  FeatureArgs fa;
  auto* feats = app.add_subcommand("features", "Feature extraction and embedding checks");
  feats->require_subcommand(1);
  auto* ftp = feats->add_subcommand("tokenprob", "Probability features from token log-probabilities");
  ftp->add_option("--input", fa.input, "TokenLogProbs JSONL")->required();
  ftp->add_option("--output", fa.output, "Feature JSONL")->required();
  ftp->add_option("--corpus", fa.corpus, "Corpus to check verse alignment against");
  ftp->add_option("--min-k", fa.min_k, "Percent of lowest-probability tokens for Min-K")->capture_default_str();
  ftp->callback([&] { action = [&] { run_features_tokenprob(fa); }; });
  auto* fve = feats->add_subcommand("validate-embeddings", "Check an embedding file");
  fve->add_option("--input", fa.input, "Embedding JSONL")->required();
  fve->add_option("--corpus", fa.corpus, "Corpus whose documents must all be covered");
  fve->add_option("--output", fa.output, "Also write the embeddings as a feature file");
  fve->callback([&] { action = [&] { run_validate_embeddings(fa); }; });

  auto add_knn = [](CLI::App* c, KnnArgs& k) {
    c->add_option("--k", k.k, "Neighbors")->capture_default_str();
    c->add_option("--p", k.p, "Minkowski order")->capture_default_str();
    c->add_option("--standardize", k.standardize, "off, on or auto")->capture_default_str();
  };

  SpaceArgs sa;
  auto* space = app.add_subcommand("space", "Vector spaces");
  space->require_subcommand(1);
  auto* sbuild = space->add_subcommand("build", "Build a labeled vector space");
  sbuild->add_option("--corpus", sa.corpus, "Corpus JSONL")->required();
  sbuild->add_option("--features", sa.features, "Feature JSONL")->required();
  sbuild->add_option("--feature", sa.feature, "Feature name; repeat to concatenate")->required();
  sbuild->add_option("--output", sa.output, "Space file")->required();
  sbuild->add_option("--per-cell", sa.per_cell, "Seeded train sample per (language, genre, class); 0 = all")
      ->capture_default_str();
  add_knn(sbuild, sa.knn);
  sbuild->callback([&] { action = [&] { run_space_build(sa); }; });

  DetectArgs da;
  auto* detect = app.add_subcommand("detect", "Classify documents");
  detect->require_subcommand(1);
  auto* drun = detect->add_subcommand("run", "Classify against one or more spaces (several spaces vote)");
  drun->add_option("--space", da.spaces, "Space file; repeat for a majority vote, first has priority")->required();
  drun->add_option("--corpus", da.corpus, "Corpus JSONL")->required();
  drun->add_option("--features", da.features, "Feature JSONL")->required();
  drun->add_option("--output", da.output, "Detections JSONL");
  drun->add_option("--method", da.method, "knn or mlp")->capture_default_str();
  drun->add_flag("--include-space-points", da.include_space_points, "Also classify documents that are in a space");
  drun->add_option("--hidden", da.hidden, "MLP hidden units")->capture_default_str();
  drun->add_option("--learning-rate", da.lr, "MLP learning rate")->capture_default_str();
  drun->add_option("--epochs", da.epochs, "MLP epochs")->capture_default_str();
  add_knn(drun, da.knn);
  drun->callback([&] { action = [&] { run_detect(da); }; });

  ScenarioArgs sca;
  AgreementArgs aga;
  auto* ev = app.add_subcommand("eval", "Evaluation scenarios and annotation agreement");
  ev->require_subcommand(1);
  auto* escen = ev->add_subcommand("scenario", "Run an evaluation scenario");
  escen->add_option("--name", sca.name,
                    "baseline, scalability, cross_lingual, robustness, genre_novelty, billboard or k_sweep")
      ->capture_default_str();
  escen->add_option("--corpus", sca.corpus, "Corpus JSONL")->required();
  escen->add_option("--features", sca.features, "Feature JSONL")->required();
  escen->add_option("--feature", sca.feature, "Feature name; repeat to concatenate")->required();
  escen->add_option("--output", sca.output, "Report path prefix (.txt and .json are appended)");
  escen->add_option("--plot-data", sca.plot_data, "CSV of every reported cell");
  escen->add_option("--per-cell", sca.per_cell, "Train docs per (language, genre, class)")->capture_default_str();
  escen->add_option("--language-order", sca.language_order, "Robustness language order");
  escen->add_option("--source-language", sca.source_language, "Genre-novelty source language")->capture_default_str();
  escen->add_option("--holdout-artist", sca.holdout_artists, "Artist kept out of every space");
  escen->add_option("--k-values", sca.k_values, "k values of the k sweep");
  add_knn(escen, sca.knn);
  escen->callback([&] { action = [&] { run_eval_scenario(sca); }; });
  auto* eagree = ev->add_subcommand("agreement", "Inter-annotator agreement");
  eagree->add_option("--annotations", aga.annotations, "Annotation JSONL")->required();
  eagree->add_option("--corpus", aga.corpus, "Corpus with the true labels")->required();
  eagree->add_option("--output", aga.output, "Report path prefix (.txt and .json are appended)");
  eagree->callback([&] { action = [&] { run_eval_agreement(aga); }; });

  AuditArgs aa;
  auto* audit = app.add_subcommand("audit", "Regurgitation audits");
  audit->require_subcommand(1);
  auto* abm = audit->add_subcommand("bm25", "Rank each synthetic lyric's seeds among the human lyrics");
  abm->add_option("--corpus", aa.corpus, "Corpus JSONL (synthetic queries, human index)")->required();
  abm->add_option("--index", aa.index, "Separate human corpus to index");
  abm->add_option("--mode", aa.mode, "pairs or queries")->capture_default_str();
  abm->add_option("--k1", aa.k1, "BM25 k1")->capture_default_str();
  abm->add_option("--b", aa.b, "BM25 b")->capture_default_str();
  abm->add_option("--output", aa.output, "Report path prefix (.txt and .json are appended)");
  abm->callback([&] { action = [&] { run_audit(aa); }; });

  std::string validate_file, validate_kind;
  auto* validate = app.add_subcommand("validate", "Validate an interchange file");
  validate->add_option("file", validate_file, "File to check")->required();
  validate->add_option("--kind", validate_kind,
                       "corpus, tokenprobs, embeddings, features, annotations, space, model or rules (auto-detected)");
  validate->callback([&] { action = [&] { run_validate(validate_file, validate_kind); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (action) action();
    return 0;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::numeric ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}

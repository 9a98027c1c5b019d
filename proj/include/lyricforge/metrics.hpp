#pragma once

// Detection metrics (per-class recall, macro/micro recall, AUROC) and
// inter-annotator agreement statistics.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lyricforge/error.hpp"
#include "lyricforge/lyrics.hpp"

namespace lyricforge::eval {

struct RecallMetrics {
  double recall_human = 0.0;
  double recall_synthetic = 0.0;
  double macro = 0.0;
  double micro = 0.0;
};

inline RecallMetrics recall_metrics(const std::vector<Label>& predictions, const std::vector<Label>& truths) {
  require(predictions.size() == truths.size(), ErrorKind::invariant, "predictions and truths differ in length");
  std::size_t n_h = 0, n_s = 0, tp_h = 0, tp_s = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] == Label::human) {
      ++n_h;
      tp_h += predictions[i] == Label::human;
    } else {
      ++n_s;
      tp_s += predictions[i] == Label::synthetic;
    }
  }
  if (n_h == 0 || n_s == 0) fail(ErrorKind::invariant, "recall needs both classes in the ground truth");
  RecallMetrics m;
  m.recall_human = static_cast<double>(tp_h) / static_cast<double>(n_h);
  m.recall_synthetic = static_cast<double>(tp_s) / static_cast<double>(n_s);
  m.macro = (m.recall_human + m.recall_synthetic) / 2.0;
  m.micro = static_cast<double>(tp_h + tp_s) / static_cast<double>(truths.size());
  return m;
}

/// Mann-Whitney AUROC: probability that a synthetic document outscores a
/// human one, ties counted as one half. Uses mid-ranks.
inline double auroc(const std::vector<double>& scores, const std::vector<Label>& truths) {
  require(scores.size() == truths.size(), ErrorKind::invariant, "scores and truths differ in length");
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (truths[order[t]] == Label::synthetic) {
        rank_sum += mid_rank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorKind::invariant, "AUROC needs both classes");
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

// --- agreement -----------------------------------------------------------------

struct PairCounts {
  double observed = 0.0;  // p_o
  double positive_a = 0.0;
  double positive_b = 0.0;
};

inline PairCounts pair_counts(const std::vector<Label>& a, const std::vector<Label>& b) {
  require(a.size() == b.size(), ErrorKind::invariant, "rater label lists differ in length");
  require(!a.empty(), ErrorKind::empty_input, "no jointly annotated items");
  std::size_t agree = 0, pa = 0, pb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i];
    pa += a[i] == Label::synthetic;
    pb += b[i] == Label::synthetic;
  }
  const auto n = static_cast<double>(a.size());
  return {static_cast<double>(agree) / n, static_cast<double>(pa) / n, static_cast<double>(pb) / n};
}

inline double raw_agreement(const std::vector<Label>& a, const std::vector<Label>& b) {
  return 100.0 * pair_counts(a, b).observed;
}

inline double cohen_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
  const auto c = pair_counts(a, b);
  const double pe = c.positive_a * c.positive_b + (1.0 - c.positive_a) * (1.0 - c.positive_b);
  if (pe == 1.0) {
    if (c.observed == 1.0) return 1.0;
    fail(ErrorKind::invariant, "Cohen's kappa undefined: chance agreement is 1");
  }
  return (c.observed - pe) / (1.0 - pe);
}

inline double gwet_ac1(const std::vector<Label>& a, const std::vector<Label>& b) {
  const auto c = pair_counts(a, b);
  const double pi = (c.positive_a + c.positive_b) / 2.0;
  const double pg = 2.0 * pi * (1.0 - pi);
  return (c.observed - pg) / (1.0 - pg);
}

struct Annotation {
  std::string rater;
  std::string doc_id;
  Label label = Label::human;
  int confidence = 0;  // 1..4
};

struct ConfidenceSummary {
  std::optional<double> mean_correct;
  std::optional<double> mean_incorrect;
};

inline std::map<std::string, ConfidenceSummary> confidence_summary(const std::vector<Annotation>& annotations,
                                                                   const std::map<std::string, Label>& truth) {
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> buckets;
  for (const auto& a : annotations) {
    if (a.confidence < 1 || a.confidence > 4)
      fail(ErrorKind::invariant, "confidence of rater " + a.rater + " on " + a.doc_id + " must be in 1..4");
    auto it = truth.find(a.doc_id);
    if (it == truth.end()) fail(ErrorKind::not_found, "annotated document " + a.doc_id + " has no ground truth");
    auto& slot = buckets[a.rater];
    (a.label == it->second ? slot.first : slot.second).push_back(a.confidence);
  }
  auto mean = [](const std::vector<int>& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    double s = 0.0;
    for (int x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  std::map<std::string, ConfidenceSummary> out;
  for (const auto& [rater, slot] : buckets) out[rater] = {mean(slot.first), mean(slot.second)};
  return out;
}

struct PairAgreement {
  std::string rater_a;
  std::string rater_b;
  std::size_t items = 0;
  double kappa = 0.0;
  double ac1 = 0.0;
  double agreement = 0.0;  // percent
};

struct RaterRecall {
  std::string rater;
  RecallMetrics recall;
};

struct AgreementReport {
  std::vector<PairAgreement> pairs;
  std::map<std::string, ConfidenceSummary> confidence;
  std::vector<RaterRecall> recalls;
  double full_agreement = 0.0;  // percent of documents on which every rater agrees
};

inline AgreementReport agreement_report(const std::vector<Annotation>& annotations,
                                        const std::map<std::string, Label>& truth) {
  std::map<std::string, std::map<std::string, Label>> by_rater;
  for (const auto& a : annotations) {
    if (!by_rater[a.rater].emplace(a.doc_id, a.label).second)
      fail(ErrorKind::invariant, "rater " + a.rater + " annotated " + a.doc_id + " twice");
  }
  AgreementReport report;
  report.confidence = confidence_summary(annotations, truth);
  for (auto ia = by_rater.begin(); ia != by_rater.end(); ++ia) {
    for (auto ib = std::next(ia); ib != by_rater.end(); ++ib) {
      std::vector<Label> la, lb;
      for (const auto& [doc, label] : ia->second) {
        auto it = ib->second.find(doc);
        if (it == ib->second.end()) continue;
        la.push_back(label);
        lb.push_back(it->second);
      }
      if (la.empty()) continue;
      report.pairs.push_back({ia->first, ib->first, la.size(), cohen_kappa(la, lb), gwet_ac1(la, lb), raw_agreement(la, lb)});
    }
    std::vector<Label> pred, gold;
    for (const auto& [doc, label] : ia->second) {
      pred.push_back(label);
      gold.push_back(truth.at(doc));
    }
    bool both = std::count(gold.begin(), gold.end(), Label::human) > 0 &&
                std::count(gold.begin(), gold.end(), Label::synthetic) > 0;
    if (both) report.recalls.push_back({ia->first, recall_metrics(pred, gold)});
  }
  std::set<std::string> docs;
  for (const auto& a : annotations) docs.insert(a.doc_id);
  std::size_t full = 0, counted = 0;
  for (const auto& doc : docs) {
    std::set<Label> labels;
    std::size_t raters = 0;
    for (const auto& [_, m] : by_rater)
      if (auto it = m.find(doc); it != m.end()) {
        labels.insert(it->second);
        ++raters;
      }
    if (raters < 2) continue;
    ++counted;
    full += labels.size() == 1;
  }
  if (counted > 0) report.full_agreement = 100.0 * static_cast<double>(full) / static_cast<double>(counted);
  return report;
}

inline std::vector<Annotation> read_annotations(const std::string& path) {
  std::vector<Annotation> out;
  for_each_record(path, [&](std::string_view line, std::size_t number) {
    try {
      auto j = nlohmann::json::parse(line);
      for (const char* key : {"rater", "doc_id", "label", "confidence"})
        if (!j.contains(key)) throw FormatError(path, number, std::string("missing field \"") + key + "\"");
      Annotation a;
      a.rater = j["rater"].is_string() ? j["rater"].get<std::string>() : j["rater"].dump();
      a.doc_id = j["doc_id"].get<std::string>();
      a.label = parse_label(j["label"].get<std::string>());
      a.confidence = j["confidence"].get<int>();
      out.push_back(std::move(a));
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(path, number, e.what());
    }
  });
  return out;
}

}  // namespace lyricforge::eval

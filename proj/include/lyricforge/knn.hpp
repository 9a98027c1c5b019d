#pragma once

// Labeled vector spaces and k-nearest-neighbor detection under a Minkowski
// distance, plus the majority-vote ensemble over several detectors.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lyricforge/error.hpp"
#include "lyricforge/feature_table.hpp"
#include "lyricforge/lyrics.hpp"
#include "lyricforge/parallel.hpp"
#include "lyricforge/text.hpp"

namespace lyricforge::knn {

inline constexpr const char* kSpaceHeader = "lyricforge-space\tv1";

enum class Standardize { off, on, automatic };

inline Standardize parse_standardize(std::string_view s) {
  if (s == "off") return Standardize::off;
  if (s == "on") return Standardize::on;
  if (s == "auto") return Standardize::automatic;
  fail(ErrorKind::config, "standardize must be on, off or auto");
}

inline const char* to_string(Standardize s) {
  switch (s) {
    case Standardize::off: return "off";
    case Standardize::on: return "on";
    case Standardize::automatic: return "auto";
  }
  return "auto";
}

struct KnnConfig {
  std::size_t k = 3;
  double p = 2.0;
  // automatic: on for concatenated (multi-source) spaces, off otherwise.
  Standardize standardize = Standardize::automatic;

  void check() const {
    require(k >= 1, ErrorKind::config, "k must be >= 1");
    require(p >= 1.0 && std::isfinite(p), ErrorKind::config, "Minkowski order p must be >= 1");
  }

  bool resolve_standardize(std::size_t sources) const {
    if (standardize == Standardize::automatic) return sources > 1;
    return standardize == Standardize::on;
  }
};

struct PointMeta {
  std::string id;
  std::string language;
  std::string genre;
  std::string artist;
  std::string generator;  // empty for human documents
};

struct Point {
  PointMeta meta;
  Label label = Label::human;
  std::vector<double> vector;
};

struct Scaling {
  std::vector<double> mean;
  std::vector<double> std;
};

struct VectorSpace {
  std::string feature_name;
  std::size_t dim = 0;
  std::vector<Point> points;  // standardized when scaling is set
  std::optional<Scaling> scaling;

  std::vector<double> transform(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    if (scaling)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - scaling->mean[i]) / scaling->std[i];
    return out;
  }
};

struct Neighbor {
  std::string id;
  Label label = Label::human;
  double distance = 0.0;
};

struct Detection {
  std::string doc_id;
  Label predicted = Label::human;
  double score_synthetic = 0.0;
  std::vector<Neighbor> neighbors;
};

inline PointMeta meta_of(const LyricsDoc& doc) {
  return {doc.id, doc.language, doc.genre, doc.artist, doc.generator.value_or("")};
}

/// Builds a space from raw points. Standardization uses the population
/// standard deviation of each dimension.
inline VectorSpace build_space(std::string feature_name, std::vector<Point> points, bool standardize) {
  require(!points.empty(), ErrorKind::empty_input, "vector space needs points");
  VectorSpace space;
  space.feature_name = std::move(feature_name);
  space.dim = points.front().vector.size();
  require(space.dim > 0, ErrorKind::invariant, "zero-dimensional feature");
  bool has_human = false, has_synthetic = false;
  for (const auto& p : points) {
    if (p.vector.size() != space.dim)
      fail(ErrorKind::invariant, "point " + p.meta.id + " has dim " + std::to_string(p.vector.size()) +
                                     ", expected " + std::to_string(space.dim));
    (p.label == Label::human ? has_human : has_synthetic) = true;
  }
  if (!has_human || !has_synthetic)
    fail(ErrorKind::invariant, "vector space needs at least one point of each class");

  if (standardize) {
    Scaling s{std::vector<double>(space.dim, 0.0), std::vector<double>(space.dim, 0.0)};
    const auto n = static_cast<double>(points.size());
    for (const auto& p : points)
      for (std::size_t i = 0; i < space.dim; ++i) s.mean[i] += p.vector[i];
    for (auto& m : s.mean) m /= n;
    for (const auto& p : points)
      for (std::size_t i = 0; i < space.dim; ++i) s.std[i] += (p.vector[i] - s.mean[i]) * (p.vector[i] - s.mean[i]);
    for (std::size_t i = 0; i < space.dim; ++i) {
      s.std[i] = std::sqrt(s.std[i] / n);
      if (!(s.std[i] > 0.0))
        fail(ErrorKind::invariant, "cannot standardize constant dimension " + std::to_string(i));
    }
    space.scaling = std::move(s);
    for (auto& p : points) p.vector = space.transform(p.vector);
  }
  space.points = std::move(points);
  return space;
}

/// Builds a space for the given documents from a feature table.
inline VectorSpace build_space(const FeatureTable& table, const std::vector<LyricsDoc>& docs, const KnnConfig& cfg) {
  std::vector<Point> points;
  for (const auto& doc : docs) {
    auto it = table.rows.find(doc.id);
    if (it == table.rows.end()) fail(ErrorKind::not_found, "no " + table.name + " features for " + doc.id);
    points.push_back({meta_of(doc), doc.label, it->second});
  }
  return build_space(table.name, std::move(points), cfg.resolve_standardize(table.sources));
}

inline double minkowski(std::span<const double> a, std::span<const double> b, double p) {
  double sum = 0.0;
  if (p == 2.0) {
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sum);
  }
  if (p == 1.0) {
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum;
  }
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::pow(std::abs(a[i] - b[i]), p);
  return std::pow(sum, 1.0 / p);
}

/// Classifies a raw (unstandardized) query vector. Neighbors are ordered by
/// distance, then point id; an even split of votes goes to the nearest
/// neighbor's label.
inline Detection classify(const VectorSpace& space, std::span<const double> query, const KnnConfig& cfg,
                          std::string doc_id = {}) {
  cfg.check();
  if (query.size() != space.dim)
    fail(ErrorKind::invariant, "query dim " + std::to_string(query.size()) + " does not match space dim " +
                                   std::to_string(space.dim));
  if (cfg.k > space.points.size())
    fail(ErrorKind::config, "k = " + std::to_string(cfg.k) + " exceeds the " +
                                std::to_string(space.points.size()) + " points in the space");
  const auto x = space.transform(query);
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(space.points.size());
  for (std::size_t i = 0; i < space.points.size(); ++i)
    order.emplace_back(minkowski(x, space.points[i].vector, cfg.p), i);
  auto closer = [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return space.points[a.second].meta.id < space.points[b.second].meta.id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.k), order.end(), closer);

  Detection d;
  d.doc_id = std::move(doc_id);
  std::size_t synthetic = 0;
  for (std::size_t i = 0; i < cfg.k; ++i) {
    const auto& pt = space.points[order[i].second];
    d.neighbors.push_back({pt.meta.id, pt.label, order[i].first});
    if (pt.label == Label::synthetic) ++synthetic;
  }
  const std::size_t human = cfg.k - synthetic;
  if (synthetic > human)
    d.predicted = Label::synthetic;
  else if (human > synthetic)
    d.predicted = Label::human;
  else
    d.predicted = d.neighbors.front().label;
  d.score_synthetic = static_cast<double>(synthetic) / static_cast<double>(cfg.k);
  return d;
}

struct Query {
  std::string doc_id;
  std::vector<double> vector;
};

inline std::vector<Detection> classify_all(const VectorSpace& space, const std::vector<Query>& queries,
                                           const KnnConfig& cfg, std::size_t jobs = 1) {
  std::vector<Detection> out(queries.size());
  parallel_for(queries.size(), jobs, [&](std::size_t i) {
    out[i] = classify(space, queries[i].vector, cfg, queries[i].doc_id);
  });
  return out;
}

struct Vote {
  std::string detector;
  Label label = Label::human;
};

/// Modal label over detectors; an exact tie goes to the vote of the first
/// detector in `priority` that took part.
inline Label majority_vote(const std::vector<Vote>& votes, const std::vector<std::string>& priority) {
  require(!votes.empty(), ErrorKind::empty_input, "majority vote over no detectors");
  std::size_t synthetic = 0;
  for (const auto& v : votes) synthetic += v.label == Label::synthetic;
  const std::size_t human = votes.size() - synthetic;
  if (synthetic != human) return synthetic > human ? Label::synthetic : Label::human;
  for (const auto& name : priority)
    for (const auto& v : votes)
      if (v.detector == name) return v.label;
  return votes.front().label;
}

// --- space file --------------------------------------------------------------

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string serialize(const VectorSpace& space) {
  std::ostringstream out;
  auto row = [&](const char* key, const std::vector<double>& v) {
    out << key;
    for (double x : v) out << '\t' << format_double(x);
    out << '\n';
  };
  out << kSpaceHeader << '\n';
  out << "feature_name\t" << text::escape_field(space.feature_name) << '\n';
  out << "dim\t" << space.dim << '\n';
  if (space.scaling) {
    out << "scaling\tstandard\n";
    row("mean", space.scaling->mean);
    row("std", space.scaling->std);
  } else {
    out << "scaling\tnone\n";
  }
  out << "points\t" << space.points.size() << '\n';
  for (const auto& p : space.points) {
    out << text::escape_field(p.meta.id) << '\t' << to_string(p.label) << '\t' << text::escape_field(p.meta.language)
        << '\t' << text::escape_field(p.meta.genre) << '\t' << text::escape_field(p.meta.artist) << '\t'
        << text::escape_field(p.meta.generator);
    for (double x : p.vector) out << '\t' << format_double(x);
    out << '\n';
  }
  return out.str();
}

inline VectorSpace deserialize(const std::string& content, const std::string& source = "<space>") {
  std::istringstream in(content);
  std::string line;
  std::size_t number = 0;
  auto expect = [&](std::string_view key) -> std::vector<std::string_view> {
    if (!std::getline(in, line)) throw FormatError(source, number + 1, "unexpected end of file");
    ++number;
    auto fields = text::split_char(line, '\t');
    if (fields[0] != key) throw FormatError(source, number, "expected \"" + std::string(key) + "\"");
    return fields;
  };
  auto doubles = [&](const std::vector<std::string_view>& fields, std::size_t from) {
    std::vector<double> v;
    for (std::size_t i = from; i < fields.size(); ++i) {
      try {
        v.push_back(std::stod(std::string(fields[i])));
      } catch (const std::exception&) {
        throw FormatError(source, number, "bad number \"" + std::string(fields[i]) + "\"");
      }
    }
    return v;
  };

  if (!std::getline(in, line) || line != kSpaceHeader) throw FormatError(source, 1, "missing space header");
  ++number;
  VectorSpace space;
  space.feature_name = text::unescape_field(expect("feature_name").at(1));
  space.dim = std::stoul(std::string(expect("dim").at(1)));
  auto scaling = expect("scaling");
  if (scaling.at(1) == "standard") {
    Scaling s;
    s.mean = doubles(expect("mean"), 1);
    s.std = doubles(expect("std"), 1);
    if (s.mean.size() != space.dim || s.std.size() != space.dim)
      throw FormatError(source, number, "scaling rows must have dim entries");
    for (double sd : s.std)
      if (!(sd > 0.0)) throw FormatError(source, number, "scaling std must be positive");
    space.scaling = std::move(s);
  } else if (scaling.at(1) != "none") {
    throw FormatError(source, number, "scaling must be none or standard");
  }
  const auto count = std::stoul(std::string(expect("points").at(1)));
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw FormatError(source, number + 1, "fewer points than declared");
    ++number;
    auto fields = text::split_char(line, '\t');
    if (fields.size() != 6 + space.dim) throw FormatError(source, number, "point row has wrong field count");
    Point p;
    p.meta = {text::unescape_field(fields[0]), text::unescape_field(fields[2]), text::unescape_field(fields[3]),
              text::unescape_field(fields[4]), text::unescape_field(fields[5])};
    try {
      p.label = parse_label(fields[1]);
    } catch (const Error& e) {
      throw FormatError(source, number, e.what());
    }
    p.vector = doubles(fields, 6);
    space.points.push_back(std::move(p));
  }
  return space;
}

inline void save_space(const VectorSpace& space, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::not_found, "cannot write " + path);
  out << serialize(space);
}

inline VectorSpace load_space(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::not_found, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str(), path);
}

}  // namespace lyricforge::knn

#pragma once

// Per-document feature tables: the input side of vector-space construction.
// Tables come from a probabilistic feature file or from an embedding file and
// may be concatenated column-wise.

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lyricforge/embedding.hpp"
#include "lyricforge/error.hpp"
#include "lyricforge/lyrics.hpp"
#include "lyricforge/tokenprob.hpp"

namespace lyricforge {

struct FeatureTable {
  std::string name;
  std::size_t dim = 0;
  std::size_t sources = 1;  // how many feature families were concatenated
  std::map<std::string, std::vector<double>> rows;
};

struct DocFeatures {
  std::string doc_id;
  std::vector<FeatureVector> features;
};

// Feature file: one JSON object per (document, feature):
// {"doc_id": ..., "feature": ..., "vector": [...]}
inline void write_feature_file(const std::string& path, const std::vector<DocFeatures>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::not_found, "cannot write " + path);
  for (const auto& d : docs) {
    for (const auto& f : d.features) {
      nlohmann::ordered_json j;
      j["doc_id"] = d.doc_id;
      j["feature"] = f.name;
      j["vector"] = f.values;
      out << j.dump() << '\n';
    }
  }
}

inline FeatureTable load_feature_table(const std::string& path, const std::string& feature) {
  FeatureTable table;
  table.name = feature;
  for_each_record(path, [&](std::string_view line, std::size_t number) {
    try {
      auto j = nlohmann::json::parse(line);
      if (!j.contains("doc_id") || !j.contains("feature") || !j.contains("vector"))
        throw FormatError(path, number, "feature record needs doc_id, feature and vector");
      if (j["feature"].get<std::string>() != feature) return;
      auto id = j["doc_id"].get<std::string>();
      auto values = j["vector"].get<std::vector<double>>();
      if (table.rows.empty()) table.dim = values.size();
      if (values.size() != table.dim || values.empty())
        throw FormatError(path, number, "dimension mismatch for feature " + feature);
      for (double v : values)
        if (!std::isfinite(v)) throw FormatError(path, number, "non-finite feature value");
      if (!table.rows.emplace(id, std::move(values)).second)
        throw FormatError(path, number, "duplicate doc_id " + id + " for feature " + feature);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path, number, e.what());
    }
  });
  if (table.rows.empty()) fail(ErrorKind::not_found, "feature " + feature + " not present in " + path);
  return table;
}

inline FeatureTable table_from_embeddings(const EmbeddingMap& embeddings) {
  require(!embeddings.empty(), ErrorKind::empty_input, "no embeddings");
  FeatureTable table;
  table.name = embeddings.begin()->second.model;
  table.dim = embeddings.begin()->second.dim;
  for (const auto& [id, e] : embeddings) table.rows.emplace(id, e.vector);
  return table;
}

/// Column-wise concatenation over the documents present in every table.
inline FeatureTable concat(const std::vector<FeatureTable>& tables) {
  require(!tables.empty(), ErrorKind::empty_input, "nothing to concatenate");
  if (tables.size() == 1) return tables.front();
  FeatureTable out;
  out.sources = 0;
  for (const auto& t : tables) {
    out.name += (out.name.empty() ? "" : "+") + t.name;
    out.dim += t.dim;
    out.sources += t.sources;
  }
  for (const auto& [id, first] : tables.front().rows) {
    std::vector<double> row;
    bool complete = true;
    for (const auto& t : tables) {
      auto it = t.rows.find(id);
      if (it == t.rows.end()) {
        complete = false;
        break;
      }
      row.insert(row.end(), it->second.begin(), it->second.end());
    }
    if (complete) out.rows.emplace(id, std::move(row));
  }
  return out;
}

}  // namespace lyricforge

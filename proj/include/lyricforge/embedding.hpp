#pragma once

// Ingestion of externally computed document embeddings.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lyricforge/error.hpp"
#include "lyricforge/lyrics.hpp"

namespace lyricforge {

struct DocEmbedding {
  std::string doc_id;
  std::string model;
  std::size_t dim = 0;
  std::vector<double> vector;
};

using EmbeddingMap = std::map<std::string, DocEmbedding>;

namespace embed {

inline DocEmbedding from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::format, "record is not a JSON object");
  for (const char* key : {"doc_id", "model", "dim", "vector"})
    if (!j.contains(key)) fail(ErrorKind::format, std::string("missing field \"") + key + "\"");
  if (!j["doc_id"].is_string() || !j["model"].is_string())
    fail(ErrorKind::format, "doc_id and model must be strings");
  if (!j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() == 0)
    fail(ErrorKind::format, "dim must be a positive integer");
  DocEmbedding e;
  e.doc_id = j["doc_id"].get<std::string>();
  e.model = j["model"].get<std::string>();
  e.dim = j["dim"].get<std::size_t>();
  if (!j["vector"].is_array()) fail(ErrorKind::format, "vector must be an array");
  for (const auto& x : j["vector"]) {
    // nlohmann parses NaN/Infinity literals as errors, so non-finite values
    // arrive either as null or as strings from lenient writers.
    if (!x.is_number()) fail(ErrorKind::invariant, "non-finite or non-numeric entry in vector of " + e.doc_id);
    const double v = x.get<double>();
    if (!std::isfinite(v)) fail(ErrorKind::invariant, "non-finite entry in vector of " + e.doc_id);
    e.vector.push_back(v);
  }
  if (e.vector.size() != e.dim)
    fail(ErrorKind::invariant, "vector of " + e.doc_id + " has " + std::to_string(e.vector.size()) +
                                   " entries, dim says " + std::to_string(e.dim));
  return e;
}

inline nlohmann::ordered_json to_json(const DocEmbedding& e) {
  nlohmann::ordered_json j;
  j["doc_id"] = e.doc_id;
  j["model"] = e.model;
  j["dim"] = e.dim;
  j["vector"] = e.vector;
  return j;
}

/// Loads and validates an embedding file: one (model, dim) pair per file,
/// finite entries, unique doc ids.
inline EmbeddingMap load_embeddings(const std::string& path) {
  EmbeddingMap out;
  std::optional<std::pair<std::string, std::size_t>> signature;
  for_each_record(path, [&](std::string_view line, std::size_t number) {
    DocEmbedding e;
    try {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& err) {
        // Bare NaN/Infinity tokens are the usual cause here.
        const std::string s(line);
        if (s.find("NaN") != std::string::npos || s.find("Infinity") != std::string::npos)
          fail(ErrorKind::invariant, "non-finite entry");
        fail(ErrorKind::format, err.what());
      }
      e = from_json(j);
      if (!signature) signature = {e.model, e.dim};
      if (signature->second != e.dim)
        fail(ErrorKind::invariant, "dim mismatch: " + std::to_string(e.dim) + " vs " + std::to_string(signature->second));
      if (signature->first != e.model)
        fail(ErrorKind::invariant, "model mismatch: " + e.model + " vs " + signature->first);
      if (out.count(e.doc_id)) fail(ErrorKind::invariant, "duplicate doc_id " + e.doc_id);
    } catch (const Error& err) {
      throw FormatError(path, number, err.what());
    }
    out.emplace(e.doc_id, std::move(e));
  });
  return out;
}

inline void write_embeddings(const std::string& path, const std::vector<DocEmbedding>& embeddings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::not_found, "cannot write " + path);
  for (const auto& e : embeddings) out << to_json(e).dump() << '\n';
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    fail(ErrorKind::invariant, "cosine of vectors with dims " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) fail(ErrorKind::invariant, "cosine of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline double cosine(const DocEmbedding& a, const DocEmbedding& b) { return cosine(a.vector, b.vector); }

}  // namespace embed
}  // namespace lyricforge

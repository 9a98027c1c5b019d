#include <gtest/gtest.h>

#include <random>

#include "lyricforge/embedding.hpp"
#include "lyricforge/feature_table.hpp"
#include "test_util.hpp"

using namespace lyricforge;

namespace {

std::string rec(const std::string& id, const std::string& vec, int dim, const std::string& model = "m") {
  return R"({"doc_id":")" + id + R"(","model":")" + model + R"(","dim":)" + std::to_string(dim) + R"(,"vector":)" + vec +
         "}\n";
}

DocEmbedding emb(std::vector<double> v) { return {"x", "m", v.size(), std::move(v)}; }

}  // namespace

TEST(LoadEmbeddings, ValidFile) {
  testutil::TempDir dir;
  testutil::write_file(dir.file("e.jsonl"), rec("a", "[1,2,3]", 3) + rec("b", "[0,0.5,-1]", 3) + rec("c", "[1e-3,2,3]", 3));
  const auto m = embed::load_embeddings(dir.file("e.jsonl"));
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at("b").vector, (std::vector<double>{0, 0.5, -1}));
}

TEST(LoadEmbeddings, MixedDimensionsRejected) {
  testutil::TempDir dir;
  testutil::write_file(dir.file("e.jsonl"), rec("a", "[1,2,3,4]", 4) + rec("b", "[1,2,3,4,5]", 5));
  try {
    embed::load_embeddings(dir.file("e.jsonl"));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadEmbeddings, NonFiniteRejected) {
  testutil::TempDir dir;
  for (const std::string v : {"[1,NaN,3]", "[1,Infinity,3]", "[1,null,3]", "[1,\"nan\",3]", "[1,1e999,3]"}) {
    testutil::write_file(dir.file("e.jsonl"), rec("a", v, 3));
    EXPECT_THROW(embed::load_embeddings(dir.file("e.jsonl")), FormatError) << v;
  }
}

TEST(LoadEmbeddings, OtherViolations) {
  testutil::TempDir dir;
  auto bad = [&](const std::string& content) {
    testutil::write_file(dir.file("e.jsonl"), content);
    EXPECT_THROW(embed::load_embeddings(dir.file("e.jsonl")), FormatError) << content;
  };
  bad(rec("a", "[1,2]", 2) + rec("a", "[1,3]", 2));              // duplicate id
  bad(rec("a", "[1,2]", 2) + rec("b", "[1,3]", 2, "other"));     // second model
  bad(rec("a", "[1,2,3]", 2));                                   // length vs dim
  bad(R"({"doc_id":"a","model":"m","vector":[1]})" "\n");        // no dim
  bad(rec("a", "[1]", 0));
}

TEST(Cosine, HandValues) {
  EXPECT_NEAR(embed::cosine(emb({1, 2, 3}), emb({4, 5, 6})), 0.974632, 1e-6);
  EXPECT_DOUBLE_EQ(embed::cosine(emb({1, 0}), emb({0, 1})), 0.0);
  EXPECT_DOUBLE_EQ(embed::cosine(emb({3, -4, 1}), emb({3, -4, 1})), 1.0);
}

TEST(Cosine, Errors) {
  EXPECT_THROW(embed::cosine(emb({0, 0}), emb({1, 1})), Error);
  EXPECT_THROW(embed::cosine(emb({1, 0}), emb({1, 1, 1})), Error);
}

TEST(Cosine, SymmetricAndScaleInvariant) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> a(8), b(8);
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    const double c = embed::cosine(a, b);
    EXPECT_DOUBLE_EQ(c, embed::cosine(b, a));
    EXPECT_NEAR(c, oracle::cosine(a, b), 1e-12);
    auto a2 = a;
    const double k = scale(rng);
    for (auto& x : a2) x *= k;
    EXPECT_NEAR(c, embed::cosine(a2, b), 1e-12);
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
  }
}

TEST(FeatureTable, RoundTripAndConcat) {
  testutil::TempDir dir;
  std::vector<DocFeatures> docs = {{"a", {{"f", {1.0}}, {"g", {2.0, 3.0}}}}, {"b", {{"f", {4.0}}, {"g", {5.0, 6.0}}}}};
  write_feature_file(dir.file("f.jsonl"), docs);
  const auto f = load_feature_table(dir.file("f.jsonl"), "f");
  const auto g = load_feature_table(dir.file("f.jsonl"), "g");
  EXPECT_EQ(f.dim, 1u);
  EXPECT_EQ(g.dim, 2u);
  const auto fg = concat({f, g});
  EXPECT_EQ(fg.name, "f+g");
  EXPECT_EQ(fg.dim, 3u);
  EXPECT_EQ(fg.sources, 2u);
  EXPECT_EQ(fg.rows.at("b"), (std::vector<double>{4, 5, 6}));
  EXPECT_THROW(load_feature_table(dir.file("f.jsonl"), "missing"), Error);
}

TEST(FeatureTable, FromEmbeddings) {
  EmbeddingMap m;
  m["a"] = {"a", "enc", 2, {1, 2}};
  m["b"] = {"b", "enc", 2, {3, 4}};
  const auto t = table_from_embeddings(m);
  EXPECT_EQ(t.name, "enc");
  EXPECT_EQ(t.dim, 2u);
  EXPECT_EQ(t.rows.size(), 2u);
}

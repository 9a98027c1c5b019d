#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lyricforge/fixture.hpp"
#include "lyricforge/ngram.hpp"
#include "lyricforge/tokenprob.hpp"
#include "test_util.hpp"

using namespace lyricforge;
using testutil::stream;

TEST(Perplexity, UniformTwoWay) {
  EXPECT_DOUBLE_EQ(features::perplexity(stream({-std::log(2.0), -std::log(2.0), -std::log(2.0)})), 2.0);
}

TEST(Perplexity, Certainty) { EXPECT_DOUBLE_EQ(features::perplexity(stream({0.0, 0.0})), 1.0); }

TEST(Perplexity, HandEvaluated) {
  EXPECT_NEAR(features::perplexity(stream({-1.0, -3.0})), 7.389056, 1e-6);
}

TEST(Perplexity, Errors) {
  try {
    features::perplexity(stream({}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_input);
  }
  try {
    features::perplexity(stream({-1.0, 0.5}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invariant);
  }
}

TEST(MaxNll, SingleVerseMean) { EXPECT_DOUBLE_EQ(features::max_neg_log_likelihood(stream({-1, -2, -3})), 2.0); }

TEST(MaxNll, MaxPooling) {
  EXPECT_DOUBLE_EQ(features::max_neg_log_likelihood(stream({-0.5, -2.0, -3.0, -1.0}, {0, 1, 3})), 2.5);
}

TEST(MaxNll, EmptyVerseRejected) {
  EXPECT_THROW(features::max_neg_log_likelihood(stream({-1, -2}, {0, 2})), Error);
  EXPECT_THROW(features::max_neg_log_likelihood(stream({-1, -2}, {0, 1, 1})), Error);
  EXPECT_THROW(features::max_neg_log_likelihood(stream({-1, -2}, {1})), Error);
}

TEST(Entropy, Certainty) {
  auto t = stream({0, 0, 0}, {0, 2});
  EXPECT_EQ(features::shannon_entropy(t, EntropyPooling::max), std::vector<double>{0.0});
}

TEST(Entropy, InverseE) {
  auto h = features::shannon_entropy(stream({-1.0, -1.0, -1.0}), EntropyPooling::max);
  EXPECT_NEAR(h[0], 0.367879, 1e-6);
  EXPECT_NEAR(h[0], 1.0 / std::exp(1.0), 1e-15);
}

TEST(Entropy, Pooling) {
  // Verse entropies {0.1, 0.3} built from single tokens with -p ln p = h.
  auto solve = [](double h) {
    // p in (0, 1/e): bisection on -p ln p = h
    double lo = 1e-12, hi = 1.0 / std::exp(1.0);
    for (int i = 0; i < 200; ++i) {
      double mid = (lo + hi) / 2;
      (-mid * std::log(mid) < h ? lo : hi) = mid;
    }
    return std::log(lo);
  };
  auto t = stream({solve(0.1), solve(0.3)}, {0, 1});
  auto mx = features::shannon_entropy(t, EntropyPooling::max);
  auto mm = features::shannon_entropy(t, EntropyPooling::max_plus_min);
  ASSERT_EQ(mx.size(), 1u);
  ASSERT_EQ(mm.size(), 2u);
  EXPECT_NEAR(mx[0], 0.3, 1e-9);
  EXPECT_NEAR(mm[0], 0.3, 1e-9);
  EXPECT_NEAR(mm[1], 0.1, 1e-9);
}

TEST(MinK, FullSelectionIsLogPerplexity) {
  auto t = stream({-0.1, -2.3, -0.5});
  EXPECT_NEAR(features::min_k_prob(t, 100), std::log(features::perplexity(t)), 1e-12);
}

TEST(MinK, SingleLowestToken) { EXPECT_DOUBLE_EQ(features::min_k_prob(stream({-0.1, -2.3, -0.5}), 33), 2.3); }

TEST(MinK, IgnoresVerseBoundaries) {
  EXPECT_DOUBLE_EQ(features::min_k_prob(stream({-0.1, -2.3, -0.5, -4.0}, {0, 2}), 50), (2.3 + 4.0) / 2);
}

TEST(MinK, OutOfRangeK) {
  for (double k : {0.0, -5.0, 100.5, std::nan("")}) {
    try {
      features::min_k_prob(stream({-1}), k);
      FAIL() << k;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config);
    }
  }
}

TEST(MinK, RandomThousandTokensMatchSortOracle) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    auto t = testutil::random_stream(rng, 1, 1);
    t.tokens.clear();
    std::exponential_distribution<double> nll(0.5);
    for (int i = 0; i < 1000; ++i) t.tokens.push_back({"x", -nll(rng)});
    EXPECT_NEAR(features::min_k_prob(t, 10), oracle::min_k(testutil::to_oracle(t), 10), 1e-12);
  }
}

TEST(ExtractAll, CertaintyCase) {
  auto f = features::extract_all(stream({0, 0, 0, 0}, {0, 2}), {});
  ASSERT_EQ(f.size(), 5u);
  EXPECT_EQ(f[0].values, std::vector<double>{1.0});
  EXPECT_EQ(f[1].values, std::vector<double>{0.0});
  EXPECT_EQ(f[2].values, std::vector<double>{0.0});
  EXPECT_EQ(f[3].values, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(f[4].values, std::vector<double>{0.0});
}

TEST(ExtractAll, DimensionsMatchDeclared) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    auto f = features::extract_all(testutil::random_stream(rng, 1 + i % 4), {});
    ASSERT_EQ(f.size(), features::feature_dims().size());
    for (std::size_t j = 0; j < f.size(); ++j) {
      EXPECT_EQ(f[j].name, features::feature_dims()[j].first);
      EXPECT_EQ(f[j].dim(), features::feature_dims()[j].second);
    }
  }
}

TEST(ExtractAll, FixtureCorpusMatchesOracle) {
  const auto fx = fixture::build();
  const auto model = ngram::train(fx.reference);
  for (const auto& d : fx.corpus) {
    const auto t = ngram::score(model, d);
    const auto s = testutil::to_oracle(t);
    const auto f = features::extract_all(t, {});
    EXPECT_NEAR(f[0].values[0], oracle::perplexity(s), 1e-9);
    EXPECT_NEAR(f[1].values[0], oracle::max_nll(s), 1e-9);
    auto [hmax, hmin] = oracle::entropy_max_min(s);
    EXPECT_NEAR(f[2].values[0], hmax, 1e-9);
    EXPECT_NEAR(f[3].values[0], hmax, 1e-9);
    EXPECT_NEAR(f[3].values[1], hmin, 1e-9);
    EXPECT_NEAR(f[4].values[0], oracle::min_k(s, 10), 1e-9);
  }
}

TEST(Properties, MonotoneInEachLogprob) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> delta(0.01, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    auto t = testutil::random_stream(rng, 3);
    const auto before = features::extract_all(t, {});
    auto u = t;
    std::uniform_int_distribution<std::size_t> pick(0, u.tokens.size() - 1);
    u.tokens[pick(rng)].logprob -= delta(rng);
    const auto after = features::extract_all(u, {});
    EXPECT_GE(after[0].values[0], before[0].values[0]);
    EXPECT_GE(after[1].values[0], before[1].values[0]);
    EXPECT_GE(after[4].values[0], before[4].values[0]);
  }
}

TEST(Properties, MinKAtTenAtLeastFullMean) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    auto t = testutil::random_stream(rng, 2);
    EXPECT_GE(features::min_k_prob(t, 10), features::min_k_prob(t, 100) - 1e-12);
  }
}

TEST(Properties, EntropyBoundedByInverseE) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    auto t = testutil::random_stream(rng, 4);
    for (double h : features::verse_entropy(t)) {
      EXPECT_GE(h, 0.0);
      EXPECT_LE(h, 1.0 / std::exp(1.0) + 1e-15);
    }
  }
}

TEST(Properties, IndependentOfTokenText) {
  std::mt19937_64 rng(8);
  auto t = testutil::random_stream(rng, 3);
  auto u = t;
  for (auto& tok : u.tokens) tok.text = "something else";
  const auto a = features::extract_all(t, {});
  const auto b = features::extract_all(u, {});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
}

TEST(TokenLogProbsFile, RoundTripAndValidation) {
  testutil::TempDir dir;
  std::mt19937_64 rng(9);
  std::vector<TokenLogProbs> streams;
  for (int i = 0; i < 5; ++i) {
    streams.push_back(testutil::random_stream(rng, 2));
    streams.back().doc_id = "d" + std::to_string(i);
  }
  write_token_logprobs(dir.file("t.jsonl"), streams);
  EXPECT_EQ(read_token_logprobs(dir.file("t.jsonl")), streams);

  testutil::write_file(dir.file("bad.jsonl"),
                       R"({"doc_id":"a","model":"m","tokens":[["x",-1.0]],"verse_breaks":[0]})"
                       "\n"
                       R"({"doc_id":"b","model":"m","tokens":[["x",0.2]],"verse_breaks":[0]})"
                       "\n");
  try {
    read_token_logprobs(dir.file("bad.jsonl"));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  testutil::write_file(dir.file("bad2.jsonl"), R"({"doc_id":"a","model":"m","tokens":[["x",-1.0]],"verse_breaks":[1]})");
  EXPECT_THROW(read_token_logprobs(dir.file("bad2.jsonl")), FormatError);
}

TEST(TokenLogProbsFile, AlignmentWithDocument) {
  auto d = testutil::doc("d", "a\n\nb\n\nc");
  EXPECT_NO_THROW(check_alignment(stream({-1, -1, -1}, {0, 1, 2}), d));
  EXPECT_THROW(check_alignment(stream({-1, -1, -1}, {0, 1}), d), Error);
}

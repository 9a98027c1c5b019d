#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lyricforge/fixture.hpp"
#include "lyricforge/ngram.hpp"
#include "lyricforge/tokenprob.hpp"
#include "test_util.hpp"

using namespace lyricforge;
using testutil::doc;

TEST(Ngram, UnigramFrequencyInSmallAlphaLimit) {
  const auto m = ngram::train({doc("x", "ab")}, 1, 1e-9);
  EXPECT_NEAR(m.probability({}, "a"), 0.5, 1e-8);
  EXPECT_NEAR(m.probability({}, "b"), 0.5, 1e-8);
}

TEST(Ngram, TrainingIsDeterministic) {
  const auto fx = fixture::build();
  EXPECT_EQ(ngram::serialize(ngram::train(fx.reference)), ngram::serialize(ngram::train(fx.reference)));
}

TEST(Ngram, ContextDistributionsSumToOne) {
  const auto fx = fixture::build();
  for (int order : {1, 2, 3}) {
    const auto m = ngram::train(fx.reference, order, 0.5);
    std::size_t checked = 0;
    for (const auto& [ctx, _] : m.counts()) {
      double sum = 0.0;
      for (const auto& s : m.vocab()) sum += m.probability(ctx, s);
      EXPECT_NEAR(sum, 1.0, 1e-9);
      if (++checked > 300) break;
    }
    // an unseen context is uniform
    double sum = 0.0;
    ngram::NgramModel::Context unseen(static_cast<std::size_t>(order - 1), "never");
    for (const auto& s : m.vocab()) sum += m.probability(unseen, s);
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Ngram, SingleSymbolLanguageIsCertain) {
  const auto m = ngram::train({doc("x", "aaaaaaaaaaaaaaaaaaaa")}, 2, 1e-12);
  const auto t = ngram::score(m, doc("y", "aaaaaaaaaa"));
  EXPECT_NEAR(features::perplexity(t), 1.0, 1e-6);
}

TEST(Ngram, ZeroCountsGiveUniformPerplexity) {
  ngram::NgramModel m(3, 0.5, {"a", "b", "c", "\n"});
  const auto t = ngram::score(m, doc("y", "abc\ncab\n\nzz"));
  EXPECT_NEAR(features::perplexity(t), static_cast<double>(m.vocab().size()), 1e-9);
}

TEST(Ngram, OneTokenPerCodePointWithAlignedVerses) {
  const auto fx = fixture::build();
  const auto m = ngram::train(fx.reference);
  for (const auto& d : fx.corpus) {
    const auto t = ngram::score(m, d);
    EXPECT_NO_THROW(validate(t));
    EXPECT_NO_THROW(check_alignment(t, d));
    std::size_t expected = 0;
    for (const auto& v : d.verses) {
      for (const auto& l : v.lines) expected += text::code_points(l).size();
      expected += v.lines.size() - 1;
    }
    EXPECT_EQ(t.tokens.size(), expected);
  }
}

TEST(Ngram, ScoresMatchRecomputationFromSerializedCounts) {
  const auto fx = fixture::build();
  const auto m = ngram::train(fx.reference, 3, 0.5);
  // Parse the serialized file by hand and recompute probabilities.
  std::map<std::pair<std::string, std::string>, double> count;
  std::map<std::string, double> total;
  std::size_t vocab = 0;
  std::istringstream in(ngram::serialize(m));
  std::string line;
  while (std::getline(in, line)) {
    auto f = text::split_char(line, '\t');
    if (f[0] == "vocab") ++vocab;
    if (f[0] != "count") continue;
    std::string ctx(f[1]), sym = text::unescape_field(f[2]);
    const double n = std::stod(std::string(f[3]));
    count[{ctx, sym}] += n;
    total[ctx] += n;
  }
  ASSERT_EQ(vocab, m.vocab().size());
  for (std::size_t i = 0; i < fx.corpus.size(); i += 17) {
    const auto& d = fx.corpus[i];
    const auto t = ngram::score(m, d);
    const auto stream = ngram::symbol_stream(d);
    std::vector<std::string> hist = {"<s>", "<s>"};
    std::size_t next_break = 0;
    for (std::size_t k = 0; k < stream.symbols.size(); ++k) {
      if (next_break < stream.verse_breaks.size() && stream.verse_breaks[next_break] == k) {
        if (k > 0) hist = {hist[1], "<v>"};
        ++next_break;
      }
      std::string sym = m.in_vocab(stream.symbols[k]) ? stream.symbols[k] : "<unk>";
      const std::string ctx = text::escape_field(hist[0]) + " " + text::escape_field(hist[1]);
      const double c = count.count({ctx, sym}) ? count[{ctx, sym}] : 0.0;
      const double tot = total.count(ctx) ? total[ctx] : 0.0;
      EXPECT_NEAR(t.tokens[k].logprob, std::log((c + 0.5) / (tot + 0.5 * static_cast<double>(vocab))), 1e-12);
      hist = {hist[1], sym};
    }
  }
}

TEST(Ngram, SerializationRoundTrip) {
  const auto fx = fixture::build();
  const auto m = ngram::train(fx.reference, 4, 0.25);
  const auto text = ngram::serialize(m);
  const auto back = ngram::deserialize(text);
  EXPECT_TRUE(back == m);
  EXPECT_EQ(ngram::serialize(back), text);
}

TEST(Ngram, CorruptModelFileRejectedWithLine) {
  try {
    ngram::deserialize("lyricforge-ngram\tv1\norder\t3\nalpha\tzero\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(ngram::deserialize("something else\n"), FormatError);
}

TEST(Ngram, Errors) {
  EXPECT_THROW(ngram::train({}), Error);
  EXPECT_THROW(ngram::train({doc("x", "a")}, 0), Error);
  EXPECT_THROW(ngram::train({doc("x", "a")}, 2, 0.0), Error);
}

TEST(Ngram, TrainingDocsBeatRandomStrings) {
  // Sign test: training lyrics get a lower mean NLL than random strings of the same length.
  const auto fx = fixture::build();
  std::vector<LyricsDoc> train;
  for (const auto& d : fx.corpus)
    if (d.label == Label::human && d.language == "en") train.push_back(d);
  const auto m = ngram::train(train);
  std::vector<std::string> alphabet;
  for (const auto& s : m.vocab())
    if (s[0] != '<' && s != "\n") alphabet.push_back(s);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  int wins = 0, n = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& d = train[i % train.size()];
    std::string random;
    for (std::size_t k = 0; k < text::code_points(d.verses[0].lines[0]).size(); ++k) random += alphabet[pick(rng)];
    auto line_doc = doc("l", d.verses[0].lines[0]);
    auto rand_doc = doc("r", random);
    wins += features::perplexity(ngram::score(m, line_doc)) < features::perplexity(ngram::score(m, rand_doc));
    ++n;
  }
  // P(>= 63 of 100 | p = 0.5) < 0.01
  EXPECT_GE(wins, 63) << wins << " of " << n;
}

TEST(Ngram, SamplingIsSeededAndBounded) {
  const auto fx = fixture::build();
  const auto m = ngram::train(fx.reference, 3, 0.1);
  Rng a(5), b(5);
  const auto va = ngram::sample_verses(m, a, {3, 4}, 30);
  const auto vb = ngram::sample_verses(m, b, {3, 4}, 30);
  EXPECT_EQ(va, vb);
  for (const auto& v : va)
    for (const auto& l : v.lines) {
      EXPECT_LE(text::code_points(l).size(), 30u);
      EXPECT_EQ(l.find('<'), std::string::npos);
    }
}

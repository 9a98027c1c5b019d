#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lyricforge/curation.hpp"
#include "lyricforge/fixture.hpp"
#include "test_util.hpp"

using namespace lyricforge;
using testutil::doc;

namespace {

std::string normalized_text(const std::string& raw) {
  return curation::normalize(doc("x", raw, Label::synthetic), curation::default_rules()).text;
}

}  // namespace

TEST(Normalize, EndPunctuation) { EXPECT_EQ(normalized_text("Hello world."), "Hello world"); }

TEST(Normalize, MetaLineDropped) {
  EXPECT_EQ(normalized_text("Here's an example of a song:\nla la la\nsing it"), "la la la\nsing it");
  EXPECT_EQ(normalized_text("Sure! Here is a song about rain:\n\nrain falls"), "rain falls");
  EXPECT_EQ(normalized_text("rain falls\n\nI hope you enjoy these lyrics!"), "rain falls");
}

TEST(Normalize, ApostrophesKept) { EXPECT_EQ(normalized_text("rockin'\nwe're fine!"), "rockin'\nwe're fine"); }

TEST(Normalize, WrappingQuotes) {
  EXPECT_EQ(normalized_text("\"a line\"\nnext"), "a line\nnext");
  EXPECT_EQ(normalized_text("\"first\nsecond\nthird\""), "first\nsecond\nthird");
  EXPECT_EQ(normalized_text("“first”\nsecond"), "first\nsecond");
}

TEST(Normalize, DroppedLinesCollapseOrSplit) {
  auto rules = curation::default_rules();
  const auto d = doc("x", "one\nNote: generated\ntwo", Label::synthetic);
  EXPECT_EQ(curation::normalize(d, rules).text, "one\ntwo");
  rules.collapse_blank_lines = false;
  EXPECT_EQ(curation::normalize(d, rules).text, "one\n\ntwo");
}

TEST(Normalize, EverythingDroppedIsAnError) {
  try {
    normalized_text("Sure!\nAs an AI language model, I cannot");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_input);
  }
}

TEST(Normalize, IdempotentOnFixture) {
  const auto fx = fixture::build();
  const auto rules = curation::default_rules();
  for (const auto& d : fx.corpus) {
    const auto once = curation::normalize(d, rules);
    EXPECT_EQ(curation::normalize(once, rules), once) << d.id;
  }
}

TEST(Normalize, IdempotentOnAdversarialLines) {
  const auto rules = curation::default_rules();
  for (const std::string raw : {"\"\"x.\"\"", "'quoted!'", "a .\n\n\"b\" ,", "(x)", "«voilà»."}) {
    const auto once = curation::normalize(doc("x", raw, Label::synthetic), rules);
    EXPECT_EQ(curation::normalize(once, rules), once) << raw;
  }
}

TEST(Rules, ShippedConfigEqualsDefaults) {
  const auto shipped = curation::load_rules(std::string(LYRICFORGE_SOURCE_DIR) + "/config/normalization_rules.conf");
  const auto defaults = curation::default_rules();
  EXPECT_EQ(shipped.strip_line_end_punct, defaults.strip_line_end_punct);
  EXPECT_EQ(shipped.strip_wrapping_quotes, defaults.strip_wrapping_quotes);
  EXPECT_EQ(shipped.collapse_blank_lines, defaults.collapse_blank_lines);
  ASSERT_EQ(shipped.drop_line_patterns.size(), defaults.drop_line_patterns.size());
  for (std::size_t i = 0; i < shipped.drop_line_patterns.size(); ++i)
    EXPECT_EQ(shipped.drop_line_patterns[i].source(), defaults.drop_line_patterns[i].source());
}

TEST(Rules, ParseErrors) {
  EXPECT_THROW(curation::parse_rules("strip_wrapping_quotes = true\n"), FormatError);  // no version
  EXPECT_THROW(curation::parse_rules("version = 2\n"), FormatError);
  try {
    curation::parse_rules("version = 1\n# comment\nnonsense = 3\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(curation::parse_rules("version = 1\ndrop_line_pattern = (unclosed\n"), FormatError);
  EXPECT_THROW(curation::parse_rules("version = 1\ncollapse_blank_lines = maybe\n"), FormatError);
}

TEST(Rules, PunctuationSetExcludesApostrophes) {
  const auto r = curation::parse_rules("version = 1\nstrip_line_end_punct = .'!\n");
  EXPECT_EQ(r.strip_line_end_punct, U".!");
}

TEST(Quantile, HandEvaluated) {
  EXPECT_DOUBLE_EQ(curation::quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(curation::quantile({1, 2, 3, 4, 5}, 0.75), 4.0);
  EXPECT_DOUBLE_EQ(curation::quantile({7, 7, 7, 7}, 0.25), 7.0);
  EXPECT_DOUBLE_EQ(curation::quantile({7, 7, 7, 7}, 0.75), 7.0);
}

TEST(Quantile, RandomSamplesMatchOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v(4 + rep % 37);
    for (auto& x : v) x = u(rng);
    for (double q : {0.25, 0.5, 0.75}) EXPECT_NEAR(curation::quantile(v, q), oracle::quantile7(v, q), 1e-12);
  }
}

TEST(Iqr, FixtureBoundsMatchOracle) {
  const auto fx = fixture::build();
  const auto table = curation::fit_iqr(fx.corpus, curation::GroupKey::language_genre);
  std::map<std::string, std::array<std::vector<double>, 4>> values;
  for (const auto& d : fx.corpus) {
    if (d.label != Label::human) continue;
    const auto s = compute_stats(d);
    auto& v = values[d.language + "/" + d.genre];
    v[0].push_back(s.avg_line_len_words);
    v[1].push_back(static_cast<double>(s.num_verses));
    v[2].push_back(s.avg_verse_size_lines);
    v[3].push_back(static_cast<double>(s.word_count));
  }
  ASSERT_EQ(table.size(), values.size());
  for (const auto& [group, v] : values)
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(table.at(group).metrics[i].q1, oracle::quantile7(v[i], 0.25), 1e-12);
      EXPECT_NEAR(table.at(group).metrics[i].q3, oracle::quantile7(v[i], 0.75), 1e-12);
    }
}

TEST(Iqr, SmallGroupRejected) {
  std::vector<LyricsDoc> docs = {doc("a", "x"), doc("b", "y"), doc("c", "z")};
  try {
    curation::fit_iqr(docs, curation::GroupKey::artist);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("\"a\""), std::string::npos);
  }
}

namespace {

// Five human songs with 2..6 words on a single line, one verse each.
std::vector<LyricsDoc> ladder() {
  return {doc("h1", "w w"), doc("h2", "w w w"), doc("h3", "w w w w"), doc("h4", "w w w w w"),
          doc("h5", "w w w w w w")};
}

}  // namespace

TEST(Iqr, MedianKeptAndLongRejected) {
  const auto bounds = curation::fit_iqr(ladder(), curation::GroupKey::artist);
  const auto r = curation::iqr_filter({doc("s1", "a b c d", Label::synthetic), doc("s2", "a b c d e f g h i", Label::synthetic)},
                                      bounds, curation::GroupKey::artist);
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].id, "s1");
  ASSERT_EQ(r.rejected.size(), 1u);
  // a one-line song's line length equals its word count, and line length is checked first
  EXPECT_EQ(r.rejected[0].reason, "avg_line_len_words");
  EXPECT_EQ(r.rejected[0].stage, "iqr");
}

TEST(Iqr, WordCountReason) {
  auto bounds = curation::fit_iqr(ladder(), curation::GroupKey::artist);
  bounds.at("a").metrics[0] = {0.0, 100.0};
  const auto r = curation::iqr_filter({doc("s", "a b c d e f g h i", Label::synthetic)}, bounds, curation::GroupKey::artist);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].reason, "word_count");
}

TEST(Iqr, MissingGroupIsAnError) {
  const auto bounds = curation::fit_iqr(ladder(), curation::GroupKey::artist);
  EXPECT_THROW(curation::iqr_filter({doc("s", "a", Label::synthetic, "en", "pop", "other")}, bounds,
                                    curation::GroupKey::artist),
               Error);
}

TEST(Iqr, FixtureKeepSetMatchesPredicateAndIsMonotone) {
  const auto fx = fixture::build();
  const auto key = curation::GroupKey::language_genre;
  const auto bounds = curation::fit_iqr(fx.corpus, key);
  std::vector<LyricsDoc> synthetic;
  for (const auto& d : fx.corpus)
    if (d.label == Label::synthetic) synthetic.push_back(d);
  const auto r = curation::iqr_filter(synthetic, bounds, key);
  EXPECT_EQ(r.kept.size() + r.rejected.size(), synthetic.size());
  std::set<std::string> kept;
  for (const auto& d : r.kept) kept.insert(d.id);
  for (const auto& d : synthetic) {
    const auto s = compute_stats(d);
    const auto& b = bounds.at(d.language + "/" + d.genre).metrics;
    const double m[4] = {s.avg_line_len_words, static_cast<double>(s.num_verses), s.avg_verse_size_lines,
                         static_cast<double>(s.word_count)};
    bool inside = true;
    for (int i = 0; i < 4; ++i) inside = inside && m[i] >= b[i].q1 && m[i] <= b[i].q3;
    EXPECT_EQ(kept.count(d.id) == 1, inside) << d.id;
  }
  auto wider = bounds;
  for (auto& [_, g] : wider)
    for (auto& iv : g.metrics) {
      iv.q1 -= 0.5;
      iv.q3 += 0.5;
    }
  const auto r2 = curation::iqr_filter(synthetic, wider, key);
  std::set<std::string> kept2;
  for (const auto& d : r2.kept) kept2.insert(d.id);
  EXPECT_TRUE(std::includes(kept2.begin(), kept2.end(), kept.begin(), kept.end()));
}

namespace {

EmbeddingMap random_embeddings(const std::vector<LyricsDoc>& docs, std::mt19937_64& rng, std::size_t dim = 8) {
  std::normal_distribution<double> g;
  EmbeddingMap m;
  for (const auto& d : docs) {
    std::vector<double> v(dim);
    for (auto& x : v) x = g(rng);
    m[d.id] = {d.id, "enc", dim, v};
  }
  return m;
}

}  // namespace

TEST(Semantic, UnderCapKeepsAll) {
  std::vector<LyricsDoc> humans = {doc("h1", "a"), doc("h2", "b")};
  std::vector<LyricsDoc> cands = {doc("s1", "x", Label::synthetic), doc("s2", "y", Label::synthetic),
                                  doc("s3", "z", Label::synthetic)};
  std::mt19937_64 rng(1);
  auto all = humans;
  all.insert(all.end(), cands.begin(), cands.end());
  const auto kept = curation::semantic_filter(cands, humans, random_embeddings(all, rng), curation::GroupKey::artist);
  EXPECT_EQ(kept.size(), 3u);
  for (std::size_t i = 1; i < kept.size(); ++i) EXPECT_GE(kept[i - 1].similarity, kept[i].similarity);
}

TEST(Semantic, IdenticalBeatsOrthogonal) {
  std::vector<LyricsDoc> humans = {doc("h", "a")};
  std::vector<LyricsDoc> cands = {doc("orth", "x", Label::synthetic), doc("same", "y", Label::synthetic)};
  EmbeddingMap m;
  m["h"] = {"h", "enc", 2, {1, 0}};
  m["same"] = {"same", "enc", 2, {1, 0}};
  m["orth"] = {"orth", "enc", 2, {0, 1}};
  const auto kept = curation::semantic_filter(cands, humans, m, curation::GroupKey::artist);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].doc.id, "same");
  EXPECT_GT(kept[0].similarity, kept[1].similarity);
}

TEST(Semantic, TopCapEqualsBruteForceSort) {
  std::mt19937_64 rng(7);
  std::vector<LyricsDoc> humans, cands;
  for (int i = 0; i < 12; ++i) humans.push_back(doc("h" + std::to_string(i), "a"));
  for (int i = 0; i < 200; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "s%03d", i);
    cands.push_back(doc(id, "x", Label::synthetic));
  }
  auto all = humans;
  all.insert(all.end(), cands.begin(), cands.end());
  const auto emb = random_embeddings(all, rng);
  for (auto agg : {curation::SimilarityAggregation::mean, curation::SimilarityAggregation::max}) {
    const auto kept = curation::semantic_filter(cands, humans, emb, curation::GroupKey::artist, 150, agg);
    std::vector<std::pair<double, std::string>> brute;
    for (const auto& c : cands) {
      double sum = 0, best = -2;
      for (const auto& h : humans) {
        const double s = oracle::cosine(emb.at(c.id).vector, emb.at(h.id).vector);
        sum += s;
        best = std::max(best, s);
      }
      brute.push_back({agg == curation::SimilarityAggregation::mean ? sum / 12.0 : best, c.id});
    }
    std::sort(brute.begin(), brute.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    ASSERT_EQ(kept.size(), 150u);
    for (std::size_t i = 0; i < 150; ++i) {
      EXPECT_EQ(kept[i].doc.id, brute[i].second);
      EXPECT_NEAR(kept[i].similarity, brute[i].first, 1e-12);
    }
  }
}

TEST(Semantic, BucketsByGeneratorAndGroup) {
  std::vector<LyricsDoc> humans = {doc("h", "a")};
  std::vector<LyricsDoc> cands;
  for (int i = 0; i < 4; ++i) {
    auto c = doc("s" + std::to_string(i), "x", Label::synthetic);
    c.generator = i % 2 ? "g1" : "g2";
    cands.push_back(c);
  }
  std::mt19937_64 rng(9);
  auto all = humans;
  all.insert(all.end(), cands.begin(), cands.end());
  const auto kept = curation::semantic_filter(cands, humans, random_embeddings(all, rng), curation::GroupKey::artist, 1);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_NE(kept[0].doc.generator, kept[1].doc.generator);
}

TEST(Semantic, MissingEmbeddingNamesDocument) {
  std::vector<LyricsDoc> humans = {doc("h", "a")};
  EmbeddingMap m;
  m["h"] = {"h", "enc", 2, {1, 0}};
  try {
    curation::semantic_filter({doc("lost", "x", Label::synthetic)}, humans, m, curation::GroupKey::artist);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("lost"), std::string::npos);
  }
}

TEST(Pipeline, NeverIncreasesCount) {
  const auto fx = fixture::build();
  const auto rules = curation::default_rules();
  std::vector<LyricsDoc> synthetic, humans;
  for (const auto& d : fx.corpus) (d.label == Label::synthetic ? synthetic : humans).push_back(d);
  std::vector<LyricsDoc> normalized;
  for (const auto& d : synthetic) normalized.push_back(curation::normalize(d, rules));
  const auto key = curation::GroupKey::language_genre;
  const auto r = curation::iqr_filter(normalized, curation::fit_iqr(humans, key), key);
  std::mt19937_64 rng(11);
  const auto kept = curation::semantic_filter(r.kept, humans, random_embeddings(fx.corpus, rng), key, 3);
  EXPECT_LE(r.kept.size(), normalized.size());
  EXPECT_LE(kept.size(), r.kept.size());
  const auto bounds = curation::fit_iqr(humans, key);
  for (const auto& k : kept)
    EXPECT_EQ(curation::first_violation(compute_stats(k.doc), bounds.at(k.doc.language + "/" + k.doc.genre)), nullptr);
}

#pragma once

// Deterministic synthetic corpus for tests, demos and the end-to-end check.
// Human-side lyrics come from per-language pseudo-lexicons with genre-specific
// line lengths and a repeated chorus; synthetic lyrics are sampled from
// character n-gram models (of orders other than the scoring model's) trained
// on the human lyrics of the same language.

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "lyricforge/lyrics.hpp"
#include "lyricforge/ngram.hpp"
#include "lyricforge/random.hpp"

namespace lyricforge::fixture {

struct FixtureSpec {
  std::uint64_t seed = 42;
  std::vector<std::string> languages = {"en", "de", "fr"};
  std::vector<std::string> genres = {"pop", "rock", "hip-hop"};
  std::size_t human_per_cell = 11;
  std::size_t synthetic_per_cell = 11;
  std::size_t artists_per_cell = 3;
  // Each generator is a character model of the given order.
  std::vector<std::pair<std::string, int>> generators = {{"char-bigram", 2}, {"char-4gram", 4}};
};

struct Fixture {
  std::vector<LyricsDoc> corpus;     // human + synthetic, sorted by id
  std::vector<LyricsDoc> reference;  // extra human lyrics for training a scorer
};

namespace detail {

struct Phonology {
  std::vector<std::string> onsets;
  std::vector<std::string> vowels;
  std::vector<std::string> codas;
};

inline Phonology phonology_for(const std::string& language) {
  if (language == "de")
    return {{"b", "d", "f", "g", "h", "k", "l", "m", "n", "r", "s", "sch", "t", "w", "z", "st"},
            {"a", "e", "i", "o", "u", "ei", "au", "ie", "ü", "ä"},
            {"", "n", "r", "t", "ch", "s", "ng", "nd"}};
  if (language == "fr")
    return {{"b", "d", "f", "j", "l", "m", "n", "p", "r", "s", "t", "v", "ch", "qu"},
            {"a", "e", "i", "o", "ou", "on", "an", "é", "è", "eu", "oi"},
            {"", "", "", "r", "s", "l", "t"}};
  return {{"b", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s", "t", "w", "y", "th", "sh"},
          {"a", "e", "i", "o", "u", "ee", "ay", "oo", "ow"},
          {"", "", "n", "t", "s", "ll", "ng", "ck", "d"}};
}

inline std::vector<std::string> make_lexicon(const Phonology& ph, Rng& rng, std::size_t size) {
  std::vector<std::string> words;
  while (words.size() < size) {
    const std::size_t syllables = 1 + rng.below(3);
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
      w += ph.onsets[rng.below(ph.onsets.size())];
      w += ph.vowels[rng.below(ph.vowels.size())];
      if (s + 1 == syllables || rng.uniform() < 0.3) w += ph.codas[rng.below(ph.codas.size())];
    }
    if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(std::move(w));
  }
  return words;
}

// Zipf-like draw: index i has weight 1 / (i + 1).
inline std::size_t zipf(Rng& rng, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += 1.0 / static_cast<double>(i + 1);
  double t = rng.uniform() * total;
  for (std::size_t i = 0; i < n; ++i) {
    t -= 1.0 / static_cast<double>(i + 1);
    if (t < 0.0) return i;
  }
  return n - 1;
}

inline std::pair<std::size_t, std::size_t> line_words_for(const std::string& genre) {
  if (genre == "hip-hop") return {7, 11};
  if (genre == "rock") return {5, 8};
  return {3, 6};
}

inline std::string make_line(const std::vector<std::string>& lexicon, Rng& rng, std::pair<std::size_t, std::size_t> words) {
  const std::size_t n = words.first + rng.below(words.second - words.first + 1);
  std::string line;
  for (std::size_t i = 0; i < n; ++i) {
    std::string w = lexicon[zipf(rng, lexicon.size())];
    if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    if (i > 0) line += ' ';
    line += w;
  }
  return line;
}

inline std::vector<Verse> make_human_verses(const std::vector<std::string>& lexicon, Rng& rng, const std::string& genre) {
  const auto words = line_words_for(genre);
  const std::size_t verse_count = 3 + rng.below(3);
  Verse chorus;
  for (std::size_t l = 0; l < 4; ++l) chorus.lines.push_back(make_line(lexicon, rng, words));
  std::vector<Verse> verses;
  for (std::size_t v = 0; v < verse_count; ++v) {
    if (v % 2 == 1) {
      verses.push_back(chorus);
      continue;
    }
    Verse verse;
    const std::size_t lines = 3 + rng.below(4);
    for (std::size_t l = 0; l < lines; ++l) verse.lines.push_back(make_line(lexicon, rng, words));
    verses.push_back(std::move(verse));
  }
  return verses;
}

inline std::string two_digits(std::size_t i) {
  return (i < 10 ? "0" : "") + std::to_string(i);
}

}  // namespace detail

inline Fixture build(const FixtureSpec& spec = {}) {
  Rng rng(spec.seed);
  Fixture fx;
  std::map<std::string, std::vector<std::string>> lexicons;
  for (const auto& lang : spec.languages)
    lexicons[lang] = detail::make_lexicon(detail::phonology_for(lang), rng, 90);

  std::map<std::string, std::vector<LyricsDoc>> human_by_lang;
  for (const auto& lang : spec.languages) {
    for (const auto& genre : spec.genres) {
      for (std::size_t i = 0; i < spec.human_per_cell; ++i) {
        LyricsDoc d;
        d.id = lang + "-" + genre + "-h" + detail::two_digits(i);
        d.language = lang;
        d.genre = genre;
        d.artist = lang + "-" + genre + "-artist" + std::to_string(i % spec.artists_per_cell);
        d.label = Label::human;
        d = with_verses(std::move(d), detail::make_human_verses(lexicons[lang], rng, genre));
        human_by_lang[lang].push_back(d);
        fx.corpus.push_back(std::move(d));
      }
      for (std::size_t i = 0; i < 4; ++i) {
        LyricsDoc d;
        d.id = "ref-" + lang + "-" + genre + "-" + detail::two_digits(i);
        d.language = lang;
        d.genre = genre;
        d.artist = "reference";
        d = with_verses(std::move(d), detail::make_human_verses(lexicons[lang], rng, genre));
        fx.reference.push_back(std::move(d));
      }
    }
  }

  for (const auto& lang : spec.languages) {
    std::vector<std::pair<std::string, ngram::NgramModel>> generators;
    for (const auto& [name, order] : spec.generators)
      generators.emplace_back(name, ngram::train(human_by_lang[lang], order, 0.01));
    for (const auto& genre : spec.genres) {
      std::vector<const LyricsDoc*> seeds;
      for (const auto& h : human_by_lang[lang])
        if (h.genre == genre) seeds.push_back(&h);
      for (std::size_t i = 0; i < spec.synthetic_per_cell; ++i) {
        const auto& [gen_name, model] = generators[i % generators.size()];
        LyricsDoc d;
        d.id = lang + "-" + genre + "-s" + detail::two_digits(i);
        d.language = lang;
        d.genre = genre;
        d.artist = lang + "-" + genre + "-artist" + std::to_string(i % spec.artists_per_cell);
        d.label = Label::synthetic;
        d.generator = gen_name;
        std::vector<std::string> seed_ids;
        for (std::size_t s = 0; s < 3 && s < seeds.size(); ++s) {
          const auto* pick = seeds[rng.below(seeds.size())];
          if (std::find(seed_ids.begin(), seed_ids.end(), pick->id) == seed_ids.end()) seed_ids.push_back(pick->id);
        }
        d.seed_ids = std::move(seed_ids);
        std::vector<std::size_t> shape;
        const std::size_t verse_count = 3 + rng.below(3);
        for (std::size_t v = 0; v < verse_count; ++v) shape.push_back(3 + rng.below(4));
        const auto max_chars = detail::line_words_for(genre).second * 7;
        auto verses = ngram::sample_verses(model, rng, shape, max_chars);
        if (verses.empty()) verses.push_back(Verse{{"la la la"}});
        d = with_verses(std::move(d), std::move(verses));
        fx.corpus.push_back(std::move(d));
      }
    }
  }
  std::sort(fx.corpus.begin(), fx.corpus.end(), [](const LyricsDoc& a, const LyricsDoc& b) { return a.id < b.id; });
  return fx;
}

}  // namespace lyricforge::fixture

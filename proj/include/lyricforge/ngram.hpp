#pragma once

// Character-level n-gram language model with additive smoothing. It stands
// in for an external probability provider: score() yields a TokenLogProbs
// stream with one token per code point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lyricforge/error.hpp"
#include "lyricforge/lyrics.hpp"
#include "lyricforge/random.hpp"
#include "lyricforge/text.hpp"
#include "lyricforge/tokenprob.hpp"

namespace lyricforge::ngram {

inline const std::string kUnknown = "<unk>";
inline const std::string kVerseBoundary = "<v>";
inline const std::string kStart = "<s>";
inline constexpr const char* kHeader = "lyricforge-ngram\tv1";

class NgramModel {
 public:
  using Context = std::vector<std::string>;

  NgramModel(int order, double alpha, std::set<std::string> symbols) : order_(order), alpha_(alpha) {
    require(order >= 1, ErrorKind::config, "n-gram order must be >= 1");
    require(alpha > 0.0 && std::isfinite(alpha), ErrorKind::config, "smoothing alpha must be > 0");
    symbols.insert(kUnknown);
    symbols.insert(kVerseBoundary);
    vocab_.assign(symbols.begin(), symbols.end());
  }

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::map<Context, std::map<std::string, std::uint64_t>>& counts() const { return counts_; }

  bool in_vocab(const std::string& symbol) const {
    return std::binary_search(vocab_.begin(), vocab_.end(), symbol);
  }

  std::string map_symbol(const std::string& symbol) const {
    return in_vocab(symbol) ? symbol : kUnknown;
  }

  void add_count(const Context& context, const std::string& symbol, std::uint64_t n = 1) {
    require(in_vocab(symbol), ErrorKind::invariant, "count for symbol outside vocabulary");
    require(static_cast<int>(context.size()) == order_ - 1, ErrorKind::invariant, "context length mismatch");
    counts_[context][symbol] += n;
    totals_[context] += n;
  }

  /// p(symbol | context) = (count + alpha) / (total + alpha * |vocab|).
  double probability(const Context& context, const std::string& symbol) const {
    const std::string mapped = map_symbol(symbol);
    std::uint64_t count = 0;
    std::uint64_t total = 0;
    if (auto it = counts_.find(context); it != counts_.end()) {
      total = totals_.at(context);
      if (auto jt = it->second.find(mapped); jt != it->second.end()) count = jt->second;
    }
    const double v = static_cast<double>(vocab_.size());
    return (static_cast<double>(count) + alpha_) / (static_cast<double>(total) + alpha_ * v);
  }

  double log_probability(const Context& context, const std::string& symbol) const {
    return std::log(probability(context, symbol));
  }

  bool operator==(const NgramModel& other) const {
    return order_ == other.order_ && alpha_ == other.alpha_ && vocab_ == other.vocab_ &&
           counts_ == other.counts_;
  }

 private:
  int order_;
  double alpha_;
  std::vector<std::string> vocab_;
  std::map<Context, std::map<std::string, std::uint64_t>> counts_;
  std::map<Context, std::uint64_t> totals_;
};

/// Symbol events of a document: each verse is its lines joined by '\n';
/// verses after the first are preceded by a verse-boundary marker that only
/// enters the context.
struct SymbolStream {
  std::vector<std::string> symbols;
  std::vector<std::size_t> verse_breaks;
};

inline SymbolStream symbol_stream(const LyricsDoc& doc) {
  SymbolStream s;
  for (const auto& verse : doc.verses) {
    s.verse_breaks.push_back(s.symbols.size());
    std::string joined;
    for (std::size_t l = 0; l < verse.lines.size(); ++l) {
      if (l > 0) joined += '\n';
      joined += verse.lines[l];
    }
    for (auto& cp : text::code_points(joined)) s.symbols.push_back(std::move(cp));
  }
  return s;
}

namespace detail {

class History {
 public:
  explicit History(int order) : context_(static_cast<std::size_t>(order - 1), kStart) {}

  void push(const std::string& symbol) {
    if (context_.empty()) return;
    context_.erase(context_.begin());
    context_.push_back(symbol);
  }

  const NgramModel::Context& context() const { return context_; }

 private:
  NgramModel::Context context_;
};

// Walks a document, calling fn(context, symbol_index) for every predicted symbol.
template <typename Fn>
void walk(const SymbolStream& s, int order, const NgramModel* model, Fn&& fn) {
  History history(order);
  std::size_t next_break = 0;
  for (std::size_t i = 0; i < s.symbols.size(); ++i) {
    if (next_break < s.verse_breaks.size() && s.verse_breaks[next_break] == i) {
      if (i > 0) history.push(kVerseBoundary);
      ++next_break;
    }
    fn(history.context(), i);
    history.push(model ? model->map_symbol(s.symbols[i]) : s.symbols[i]);
  }
}

}  // namespace detail

inline NgramModel train(const std::vector<LyricsDoc>& corpus, int order = 3, double alpha = 0.5) {
  require(!corpus.empty(), ErrorKind::empty_input, "cannot train an n-gram model on an empty corpus");
  std::vector<SymbolStream> streams;
  std::set<std::string> symbols;
  for (const auto& doc : corpus) {
    streams.push_back(symbol_stream(doc));
    symbols.insert(streams.back().symbols.begin(), streams.back().symbols.end());
  }
  NgramModel model(order, alpha, symbols);
  for (const auto& s : streams)
    detail::walk(s, order, nullptr, [&](const NgramModel::Context& ctx, std::size_t i) {
      model.add_count(ctx, s.symbols[i]);
    });
  return model;
}

inline TokenLogProbs score(const NgramModel& model, const LyricsDoc& doc, const std::string& model_name = "char-ngram") {
  require(!doc.verses.empty(), ErrorKind::empty_input, "document " + doc.id + " is empty");
  const SymbolStream s = symbol_stream(doc);
  TokenLogProbs tlp;
  tlp.doc_id = doc.id;
  tlp.model = model_name;
  tlp.verse_breaks = s.verse_breaks;
  tlp.tokens.reserve(s.symbols.size());
  detail::walk(s, model.order(), &model, [&](const NgramModel::Context& ctx, std::size_t i) {
    tlp.tokens.push_back({s.symbols[i], model.log_probability(ctx, s.symbols[i])});
  });
  return tlp;
}

/// Samples verses of text from the model. Special symbols are excluded from
/// sampling; a line is closed on '\n' or after `max_line_chars` symbols.
inline std::vector<Verse> sample_verses(const NgramModel& model, Rng& rng, const std::vector<std::size_t>& lines_per_verse,
                                        std::size_t max_line_chars = 60) {
  std::vector<std::string> candidates;
  for (const auto& s : model.vocab())
    if (s != kUnknown && s != kVerseBoundary) candidates.push_back(s);
  require(!candidates.empty(), ErrorKind::empty_input, "model has no symbols to sample");

  detail::History history(model.order());
  std::vector<Verse> verses;
  for (std::size_t v = 0; v < lines_per_verse.size(); ++v) {
    if (v > 0) history.push(kVerseBoundary);
    Verse verse;
    std::string line;
    std::size_t line_chars = 0;
    // Bound total draws so a model that rarely emits '\n' still terminates.
    const std::size_t budget = lines_per_verse[v] * (max_line_chars + 1) * 4;
    for (std::size_t draw = 0; verse.lines.size() < lines_per_verse[v] && draw < budget; ++draw) {
      double total = 0.0;
      std::vector<double> weights;
      weights.reserve(candidates.size());
      for (const auto& c : candidates) {
        weights.push_back(model.probability(history.context(), c));
        total += weights.back();
      }
      double target = rng.uniform() * total;
      std::size_t pick = candidates.size() - 1;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (target < weights[c]) {
          pick = c;
          break;
        }
        target -= weights[c];
      }
      std::string symbol = candidates[pick];
      const bool force_break = line_chars >= max_line_chars;
      if (force_break) symbol = "\n";
      if (symbol == "\n") {
        std::string trimmed = text::trim(line);
        if (!trimmed.empty()) verse.lines.push_back(std::move(trimmed));
        line.clear();
        line_chars = 0;
      } else {
        line += symbol;
        ++line_chars;
      }
      history.push(symbol);
    }
    if (verse.lines.size() < lines_per_verse[v]) {
      std::string trimmed = text::trim(line);
      if (!trimmed.empty()) verse.lines.push_back(std::move(trimmed));
    }
    if (!verse.lines.empty()) verses.push_back(std::move(verse));
  }
  return verses;
}

// --- serialization -----------------------------------------------------------

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string encode_context(const NgramModel::Context& ctx) {
  std::string out;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (i > 0) out += ' ';
    out += text::escape_field(ctx[i]);
  }
  return out;
}

inline std::string serialize(const NgramModel& model) {
  std::ostringstream out;
  out << kHeader << '\n';
  out << "order\t" << model.order() << '\n';
  out << "alpha\t" << format_double(model.alpha()) << '\n';
  std::vector<std::string> lines;
  for (const auto& s : model.vocab()) lines.push_back("vocab\t" + text::escape_field(s));
  std::sort(lines.begin(), lines.end());
  std::vector<std::string> count_lines;
  for (const auto& [ctx, row] : model.counts())
    for (const auto& [sym, n] : row)
      count_lines.push_back("count\t" + encode_context(ctx) + "\t" + text::escape_field(sym) + "\t" + std::to_string(n));
  std::sort(count_lines.begin(), count_lines.end());
  for (const auto& l : lines) out << l << '\n';
  for (const auto& l : count_lines) out << l << '\n';
  return out.str();
}

inline NgramModel deserialize(const std::string& content, const std::string& source = "<model>") {
  std::istringstream in(content);
  std::string line;
  std::size_t number = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++number;
    return true;
  };
  if (!next() || line != kHeader) throw FormatError(source, 1, "missing n-gram model header");
  int order = 0;
  double alpha = 0.0;
  std::set<std::string> symbols;
  std::vector<std::tuple<NgramModel::Context, std::string, std::uint64_t>> counts;
  try {
    while (next()) {
      if (line.empty()) continue;
      auto fields = text::split_char(line, '\t');
      const std::string_view kind = fields[0];
      if (kind == "order" && fields.size() == 2) {
        order = std::stoi(std::string(fields[1]));
      } else if (kind == "alpha" && fields.size() == 2) {
        alpha = std::stod(std::string(fields[1]));
      } else if (kind == "vocab" && fields.size() == 2) {
        symbols.insert(text::unescape_field(fields[1]));
      } else if (kind == "count" && fields.size() == 4) {
        NgramModel::Context ctx;
        if (!fields[1].empty())
          for (auto part : text::split_char(fields[1], ' ')) ctx.push_back(text::unescape_field(part));
        counts.emplace_back(std::move(ctx), text::unescape_field(fields[2]), std::stoull(std::string(fields[3])));
      } else {
        throw FormatError(source, number, "unrecognized line");
      }
    }
    NgramModel model(order, alpha, symbols);
    for (const auto& [ctx, sym, n] : counts) model.add_count(ctx, sym, n);
    return model;
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(source, number, e.what());
  }
}

inline void save(const NgramModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::not_found, "cannot write " + path);
  out << serialize(model);
}

inline NgramModel load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::not_found, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str(), path);
}

}  // namespace lyricforge::ngram

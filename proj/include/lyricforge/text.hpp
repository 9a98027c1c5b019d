#pragma once

// Unicode text utilities backed by ICU: NFC normalization, whitespace
// classification, code point iteration and word segmentation.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "lyricforge/error.hpp"

namespace lyricforge::text {

inline bool is_valid_utf8(std::string_view s) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) return false;
  }
  return true;
}

/// Decodes UTF-8 into code points. Throws on invalid sequences.
inline std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) fail(ErrorKind::format, "invalid UTF-8 sequence");
    out.push_back(static_cast<char32_t>(c));
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t c) {
  uint8_t buf[4];
  int32_t n = 0;
  UBool error = false;
  U8_APPEND(buf, n, 4, static_cast<UChar32>(c), error);
  if (error) fail(ErrorKind::format, "code point not encodable as UTF-8");
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

inline std::string encode(char32_t c) {
  std::string out;
  append_utf8(out, c);
  return out;
}

/// Splits a string into its code points, each returned as a UTF-8 string.
inline std::vector<std::string> code_points(std::string_view s) {
  std::vector<std::string> out;
  for (char32_t c : decode(s)) out.push_back(encode(c));
  return out;
}

inline bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0; }

inline std::string to_nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) fail(ErrorKind::config, "ICU NFC normalizer unavailable");
  auto input = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  if (nfc->isNormalized(input, status) && U_SUCCESS(status)) return std::string(s);
  status = U_ZERO_ERROR;
  icu::UnicodeString normalized = nfc->normalize(input, status);
  if (U_FAILURE(status)) fail(ErrorKind::format, "NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

inline std::string rtrim(std::string_view s) {
  auto cps = decode(s);
  std::size_t end = cps.size();
  while (end > 0 && is_space(cps[end - 1])) --end;
  std::string out;
  for (std::size_t i = 0; i < end; ++i) append_utf8(out, cps[i]);
  return out;
}

inline std::string trim(std::string_view s) {
  auto cps = decode(s);
  std::size_t begin = 0;
  std::size_t end = cps.size();
  while (begin < end && is_space(cps[begin])) ++begin;
  while (end > begin && is_space(cps[end - 1])) --end;
  std::string out;
  for (std::size_t i = begin; i < end; ++i) append_utf8(out, cps[i]);
  return out;
}

inline bool is_blank(std::string_view s) {
  for (char32_t c : decode(s))
    if (!is_space(c)) return false;
  return true;
}

/// Splits on runs of Unicode whitespace; no punctuation handling.
inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> words;
  std::string current;
  for (char32_t c : decode(s)) {
    if (is_space(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      append_utf8(current, c);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

inline std::string to_lower(std::string_view s) {
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

/// Lowercased word tokens using ICU word-boundary analysis. Segments made
/// only of spaces or punctuation are dropped.
inline std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<icu::BreakIterator> it(
      icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
  if (U_FAILURE(status)) fail(ErrorKind::config, "ICU word break iterator unavailable");
  it->setText(u);
  int32_t start = it->first();
  for (int32_t end = it->next(); end != icu::BreakIterator::DONE; start = end, end = it->next()) {
    if (it->getRuleStatus() == UBRK_WORD_NONE) continue;
    icu::UnicodeString piece = u.tempSubStringBetween(start, end);
    bool has_word_char = false;
    for (int32_t i = 0; i < piece.length();) {
      UChar32 c = piece.char32At(i);
      if (u_isalnum(c) || u_hasBinaryProperty(c, UCHAR_IDEOGRAPHIC) || u_isalpha(c)) {
        has_word_char = true;
        break;
      }
      i += U16_LENGTH(c);
    }
    if (!has_word_char) continue;
    std::string token;
    piece.toUTF8String(token);
    out.push_back(std::move(token));
  }
  return out;
}

/// Escapes tab, newline, carriage return and backslash for tab-separated files.
inline std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case ' ': out += "\\s"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size()) fail(ErrorKind::format, "dangling escape");
    switch (s[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 's': out += ' '; break;
      default: fail(ErrorKind::format, std::string("unknown escape \\") + s[i]);
    }
  }
  return out;
}

inline std::vector<std::string_view> split_char(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace lyricforge::text

#pragma once

// Text samples, labeled instances, tokenization and the whitespace
// normalization canon shared by every other module.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_set>
#include <vector>

#include "lingad/error.hpp"
#include "lingad/jsonl.hpp"
#include "lingad/utf8.hpp"

namespace lingad {

enum class TokenKind { word, number, punctuation, linebreak };

inline const char* to_string(TokenKind k) {
  switch (k) {
    case TokenKind::word: return "word";
    case TokenKind::number: return "number";
    case TokenKind::punctuation: return "punctuation";
    case TokenKind::linebreak: return "linebreak";
  }
  return "?";
}

struct Token {
  std::string surface;
  TokenKind kind;
  std::size_t start;  // byte offset into the source text
  std::size_t end;    // one past the last byte

  bool operator==(const Token&) const = default;
};

/// Splits text into words, numbers, single-character punctuation and
/// linebreaks. A word is a run of letters; a hyphen or apostrophe stays
/// inside it only when letters sit on both sides. Letter/digit boundaries
/// always split. Whitespace other than '\n' is skipped.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::vector<char32_t> cps;
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < text.size();) {
    const auto d = utf8::decode_at(text, i);
    cps.push_back(d.cp);
    offsets.push_back(i);
    i += d.length;
  }
  offsets.push_back(text.size());

  const std::size_t n = cps.size();
  auto emit = [&](std::size_t from, std::size_t to, TokenKind kind) {
    const std::size_t b = offsets[from];
    const std::size_t e = offsets[to];
    tokens.push_back(Token{std::string(text.substr(b, e - b)), kind, b, e});
  };

  std::size_t i = 0;
  while (i < n) {
    const char32_t c = cps[i];
    if (utf8::is_newline(c)) {
      emit(i, i + 1, TokenKind::linebreak);
      ++i;
    } else if (utf8::is_space(c)) {
      ++i;
    } else if (utf8::is_letter(c)) {
      std::size_t j = i + 1;
      while (j < n) {
        if (utf8::is_letter(cps[j])) {
          ++j;
        } else if ((utf8::is_hyphen(cps[j]) || utf8::is_apostrophe(cps[j])) && j + 1 < n &&
                   utf8::is_letter(cps[j + 1])) {
          j += 2;
        } else {
          break;
        }
      }
      emit(i, j, TokenKind::word);
      i = j;
    } else if (utf8::is_digit(c)) {
      std::size_t j = i + 1;
      while (j < n && utf8::is_digit(cps[j])) ++j;
      emit(i, j, TokenKind::number);
      i = j;
    } else {
      emit(i, i + 1, TokenKind::punctuation);
      ++i;
    }
  }
  return tokens;
}

/// Kind of a standalone token surface, judged by its first code point.
inline TokenKind kind_of(std::string_view surface) {
  if (surface.empty()) return TokenKind::punctuation;
  const char32_t c = utf8::decode_at(surface, 0).cp;
  if (utf8::is_newline(c)) return TokenKind::linebreak;
  if (utf8::is_letter(c)) return TokenKind::word;
  if (utf8::is_digit(c)) return TokenKind::number;
  return TokenKind::punctuation;
}

inline bool is_closing_punct(std::string_view s) {
  static const std::unordered_set<std::string_view> kClosing = {
      ",", ".", "!", "?", ";", ":", ")", "]", "}", "»", "…", "”", "%"};
  return kClosing.contains(s);
}

inline bool is_opening_punct(std::string_view s) {
  static const std::unordered_set<std::string_view> kOpening = {"(", "[", "{", "«", "„", "“"};
  return kOpening.contains(s);
}

/// Joins token surfaces using the canonical spacing: one space between
/// tokens, none before closing punctuation or after opening punctuation,
/// none around linebreaks.
template <class Surfaces>
std::string render(const Surfaces& surfaces) {
  std::string out;
  bool first = true;
  std::string_view prev;
  for (const auto& item : surfaces) {
    std::string_view s;
    if constexpr (std::is_same_v<std::decay_t<decltype(item)>, Token>) {
      s = item.surface;
    } else {
      s = item;
    }
    if (!first) {
      const bool glue = kind_of(prev) == TokenKind::linebreak || kind_of(s) == TokenKind::linebreak ||
                        is_closing_punct(s) || is_opening_punct(prev);
      if (!glue) out.push_back(' ');
    }
    out.append(s);
    prev = s;
    first = false;
  }
  return out;
}

inline std::string normalize(std::string_view text) { return render(tokenize(text)); }

/// Tokens that carry content for scoring and counting (linebreaks dropped).
inline std::vector<Token> without_linebreaks(std::vector<Token> tokens) {
  std::erase_if(tokens, [](const Token& t) { return t.kind == TokenKind::linebreak; });
  return tokens;
}

struct TextSample {
  std::string id;
  std::string domain;
  std::optional<std::string> text_corrupted;
  std::optional<std::string> text_fixed;

  bool operator==(const TextSample&) const = default;
};

struct LabeledInstance {
  std::string id;
  std::string domain;
  std::string text;
  int label = 0;  // 0 = correct, 1 = corrupted
  std::string sample_id;
};

inline constexpr std::string_view kCorruptedSuffix = "#corrupted";
inline constexpr std::string_view kFixedSuffix = "#fixed";

inline TextSample sample_from_json(const json& record) {
  TextSample s;
  s.id = required_string(record, "id");
  s.domain = optional_string(record, "domain").value_or("default");
  s.text_corrupted = optional_string(record, "text_corrupted");
  s.text_fixed = optional_string(record, "text_fixed");
  if (!s.text_corrupted && !s.text_fixed) throw DataError("sample has no text");
  return s;
}

inline ordered_json to_json(const TextSample& s) {
  ordered_json j;
  j["id"] = s.id;
  j["domain"] = s.domain;
  j["text_corrupted"] = s.text_corrupted ? ordered_json(*s.text_corrupted) : ordered_json(nullptr);
  j["text_fixed"] = s.text_fixed ? ordered_json(*s.text_fixed) : ordered_json(nullptr);
  return j;
}

inline std::vector<TextSample> read_samples(const std::filesystem::path& path) {
  std::vector<TextSample> samples;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](const json& record, std::size_t) {
    TextSample s = sample_from_json(record);
    if (!seen.insert(s.id).second) throw DataError("duplicate id '" + s.id + "'");
    samples.push_back(std::move(s));
  });
  return samples;
}

inline void write_samples(const std::filesystem::path& path, const std::vector<TextSample>& samples) {
  JsonlWriter out(path);
  for (const auto& s : samples) out.write(to_json(s));
  out.close();
}

/// One instance per available text: corrupted texts get label 1, fixed
/// texts label 0. Instance ids carry a side suffix.
inline std::vector<LabeledInstance> expand_pairs(const std::vector<TextSample>& samples) {
  std::vector<LabeledInstance> out;
  out.reserve(samples.size() * 2);
  for (const auto& s : samples) {
    if (s.text_corrupted) {
      out.push_back({s.id + std::string(kCorruptedSuffix), s.domain, *s.text_corrupted, 1, s.id});
    }
    if (s.text_fixed) {
      out.push_back({s.id + std::string(kFixedSuffix), s.domain, *s.text_fixed, 0, s.id});
    }
  }
  return out;
}

}  // namespace lingad

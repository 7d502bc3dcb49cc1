#pragma once

// Seeded rule-based corruption of correct texts into (corrupted, correct)
// pairs. Every rule edits the source string in place, so untouched text
// keeps its original formatting.
//
// Rules take a `Choices` source providing `std::size_t index(std::size_t n)`
// and `double uniform()`; `Rng` satisfies it, and tests may script choices.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lingad/corpus.hpp"
#include "lingad/error.hpp"
#include "lingad/parallel.hpp"
#include "lingad/rng.hpp"
#include "lingad/utf8.hpp"

namespace lingad {

template <class C>
concept Choices = requires(C c, std::size_t n) {
  { c.index(n) } -> std::convertible_to<std::size_t>;
  { c.uniform() } -> std::convertible_to<double>;
};

/// Lexical resources for the rules. Keys are lowercased.
struct CorruptionResources {
  std::unordered_map<std::string, std::vector<std::string>> morphology;  // word -> other inflections
  std::unordered_map<std::string, std::vector<std::string>> confusions;  // word -> misspellings
  std::vector<std::string> prepositions;

  bool is_preposition(std::string_view lower) const {
    return std::find(prepositions.begin(), prepositions.end(), lower) != prepositions.end();
  }

  /// word<TAB>variant<TAB>variant... per line; blank lines and '#' comments skipped.
  static std::unordered_map<std::string, std::vector<std::string>> read_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::unordered_map<std::string, std::vector<std::string>> table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, '\t')) {
        if (!field.empty()) fields.push_back(field);
      }
      if (fields.size() < 2) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected word and at least one variant");
      }
      auto& variants = table[utf8::to_lower(fields[0])];
      variants.insert(variants.end(), fields.begin() + 1, fields.end());
    }
    return table;
  }

  static std::vector<std::string> read_list(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::string> items;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto lower = utf8::to_lower(line);
      if (std::find(items.begin(), items.end(), lower) == items.end()) items.push_back(std::move(lower));
    }
    return items;
  }

  static CorruptionResources load(const std::filesystem::path& morphology_tsv,
                                  const std::filesystem::path& confusions_tsv,
                                  const std::filesystem::path& prepositions_txt) {
    CorruptionResources r;
    r.morphology = read_table(morphology_tsv);
    r.confusions = read_table(confusions_tsv);
    r.prepositions = read_list(prepositions_txt);
    return r;
  }

  /// Loads morphology.tsv, confusions.tsv and prepositions.txt from one directory.
  static CorruptionResources load_dir(const std::filesystem::path& dir) {
    return load(dir / "morphology.tsv", dir / "confusions.tsv", dir / "prepositions.txt");
  }
};

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

/// Result of one rule: the new text and the affected byte range of the input.
struct RuleEdit {
  std::string text;
  Span span;
};

enum class Rule { grammar_form, preposition, misspelling, split_merge, punctuation };

inline constexpr std::array<Rule, 5> kRules = {Rule::grammar_form, Rule::preposition, Rule::misspelling,
                                               Rule::split_merge, Rule::punctuation};

inline const char* rule_name(Rule r) {
  switch (r) {
    case Rule::grammar_form: return "grammar_form";
    case Rule::preposition: return "preposition";
    case Rule::misspelling: return "misspelling";
    case Rule::split_merge: return "split_merge";
    case Rule::punctuation: return "punctuation";
  }
  return "?";
}

inline std::optional<Rule> rule_from_name(std::string_view name) {
  for (Rule r : kRules) {
    if (name == rule_name(r)) return r;
  }
  return std::nullopt;
}

namespace detail {

inline std::string splice(std::string_view text, std::size_t start, std::size_t end, std::string_view with) {
  std::string out;
  out.reserve(text.size() + with.size());
  out.append(text.substr(0, start));
  out.append(with);
  out.append(text.substr(end));
  return out;
}

inline bool is_inline_space(char c) { return c == ' ' || c == '\t'; }

inline bool all_letters(const std::vector<char32_t>& cps) {
  return std::all_of(cps.begin(), cps.end(), [](char32_t c) { return utf8::is_letter(c); });
}

inline std::vector<std::size_t> word_indices(const std::vector<Token>& tokens) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind == TokenKind::word) out.push_back(i);
  }
  return out;
}

}  // namespace detail

/// Replaces one word found in the morphology table by another inflection.
template <Choices C>
std::optional<RuleEdit> distort_grammar_form(std::string_view text, const CorruptionResources& res, C& rng) {
  const auto tokens = tokenize(text);
  struct Candidate {
    const Token* token;
    std::vector<std::string> alternatives;
  };
  std::vector<Candidate> candidates;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::word) continue;
    const auto lower = utf8::to_lower(t.surface);
    const auto it = res.morphology.find(lower);
    if (it == res.morphology.end()) continue;
    std::vector<std::string> alts;
    for (const auto& a : it->second) {
      if (utf8::to_lower(a) != lower) alts.push_back(a);
    }
    if (!alts.empty()) candidates.push_back({&t, std::move(alts)});
  }
  if (candidates.empty()) return std::nullopt;
  const auto& c = candidates[rng.index(candidates.size())];
  const auto& alt = c.alternatives[rng.index(c.alternatives.size())];
  const auto replacement = utf8::match_initial_case(c.token->surface, alt);
  return RuleEdit{detail::splice(text, c.token->start, c.token->end, replacement), {c.token->start, c.token->end}};
}

/// Deletes a preposition, or replaces it by another listed preposition.
template <Choices C>
std::optional<RuleEdit> distort_preposition(std::string_view text, const CorruptionResources& res, C& rng,
                                            bool deletions_only = false) {
  const auto tokens = tokenize(text);
  std::vector<const Token*> candidates;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::word && res.is_preposition(utf8::to_lower(t.surface))) candidates.push_back(&t);
  }
  if (candidates.empty()) return std::nullopt;
  const Token& t = *candidates[rng.index(candidates.size())];
  const bool remove = deletions_only || rng.uniform() < 0.5;
  const auto lower = utf8::to_lower(t.surface);
  std::vector<std::string> others;
  for (const auto& p : res.prepositions) {
    if (p != lower) others.push_back(p);
  }
  if (!remove && !others.empty()) {
    const auto replacement = utf8::match_initial_case(t.surface, others[rng.index(others.size())]);
    return RuleEdit{detail::splice(text, t.start, t.end, replacement), {t.start, t.end}};
  }
  std::size_t start = t.start;
  std::size_t end = t.end;
  if (end < text.size() && detail::is_inline_space(text[end])) {
    while (end < text.size() && detail::is_inline_space(text[end])) ++end;
  } else {
    while (start > 0 && detail::is_inline_space(text[start - 1])) --start;
  }
  return RuleEdit{detail::splice(text, start, end, ""), {t.start, t.end}};
}

/// Misspells one word: a confusion-table variant when any table word occurs,
/// otherwise a letter swap, deletion or duplication inside a word of at
/// least four letters. The first letter and its case are never touched.
template <Choices C>
std::optional<RuleEdit> inject_misspelling(std::string_view text, const CorruptionResources& res, C& rng) {
  const auto tokens = tokenize(text);
  struct TableHit {
    const Token* token;
    std::vector<std::string> variants;
  };
  std::vector<TableHit> hits;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::word) continue;
    const auto lower = utf8::to_lower(t.surface);
    const auto it = res.confusions.find(lower);
    if (it == res.confusions.end()) continue;
    std::vector<std::string> variants;
    for (const auto& v : it->second) {
      if (utf8::to_lower(v) != lower) variants.push_back(v);
    }
    if (!variants.empty()) hits.push_back({&t, std::move(variants)});
  }
  if (!hits.empty()) {
    const auto& h = hits[rng.index(hits.size())];
    const auto replacement = utf8::match_initial_case(h.token->surface, h.variants[rng.index(h.variants.size())]);
    return RuleEdit{detail::splice(text, h.token->start, h.token->end, replacement),
                    {h.token->start, h.token->end}};
  }

  std::vector<const Token*> long_words;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::word) continue;
    const auto cps = utf8::decode(t.surface);
    if (cps.size() >= 4 && detail::all_letters(cps)) long_words.push_back(&t);
  }
  if (long_words.empty()) return std::nullopt;
  const Token& t = *long_words[rng.index(long_words.size())];
  auto cps = utf8::decode(t.surface);
  std::size_t op = rng.index(3);
  std::vector<std::size_t> swaps;
  for (std::size_t i = 1; i + 1 < cps.size(); ++i) {
    if (cps[i] != cps[i + 1]) swaps.push_back(i);
  }
  if (op == 0 && swaps.empty()) op = 1;
  if (op == 0) {
    const std::size_t i = swaps[rng.index(swaps.size())];
    std::swap(cps[i], cps[i + 1]);
  } else if (op == 1) {
    const std::size_t i = 1 + rng.index(cps.size() - 1);
    cps.erase(cps.begin() + static_cast<std::ptrdiff_t>(i));
  } else {
    const std::size_t i = 1 + rng.index(cps.size() - 1);
    cps.insert(cps.begin() + static_cast<std::ptrdiff_t>(i), cps[i]);
  }
  return RuleEdit{detail::splice(text, t.start, t.end, utf8::encode(cps)), {t.start, t.end}};
}

/// Merges two adjacent words by dropping the space between them, or splits a
/// word of at least four letters with a space at least two letters from each end.
template <Choices C>
std::optional<RuleEdit> split_or_merge_words(std::string_view text, C& rng) {
  const auto tokens = tokenize(text);
  std::vector<std::size_t> merges;  // index of the left word
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i].kind != TokenKind::word || tokens[i + 1].kind != TokenKind::word) continue;
    const auto gap = text.substr(tokens[i].end, tokens[i + 1].start - tokens[i].end);
    if (!gap.empty() && std::all_of(gap.begin(), gap.end(), detail::is_inline_space)) merges.push_back(i);
  }
  std::vector<const Token*> splits;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::word) continue;
    const auto cps = utf8::decode(t.surface);
    if (cps.size() >= 4 && detail::all_letters(cps)) splits.push_back(&t);
  }
  if (merges.empty() && splits.empty()) return std::nullopt;
  bool merge = !merges.empty();
  if (!merges.empty() && !splits.empty()) merge = rng.uniform() < 0.5;
  if (merge) {
    const std::size_t i = merges[rng.index(merges.size())];
    const auto& left = tokens[i];
    const auto& right = tokens[i + 1];
    return RuleEdit{detail::splice(text, left.end, right.start, ""), {left.start, right.end}};
  }
  const Token& t = *splits[rng.index(splits.size())];
  auto cps = utf8::decode(t.surface);
  const std::size_t at = 2 + rng.index(cps.size() - 3);
  std::vector<char32_t> joined(cps.begin(), cps.begin() + static_cast<std::ptrdiff_t>(at));
  joined.push_back(U' ');
  joined.insert(joined.end(), cps.begin() + static_cast<std::ptrdiff_t>(at), cps.end());
  return RuleEdit{detail::splice(text, t.start, t.end, utf8::encode(joined)), {t.start, t.end}};
}

/// Removes a comma (when present and a coin flip says so) or inserts one
/// after a word that is followed by another word or number.
template <Choices C>
std::optional<RuleEdit> perturb_punctuation(std::string_view text, C& rng, bool deletions_only = false) {
  const auto tokens = tokenize(text);
  std::vector<const Token*> commas;
  std::vector<const Token*> slots;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind == TokenKind::punctuation && tokens[i].surface == ",") commas.push_back(&tokens[i]);
    if (tokens[i].kind == TokenKind::word && i + 1 < tokens.size() &&
        (tokens[i + 1].kind == TokenKind::word || tokens[i + 1].kind == TokenKind::number)) {
      slots.push_back(&tokens[i]);
    }
  }
  if (deletions_only) slots.clear();
  if (commas.empty() && slots.empty()) return std::nullopt;
  bool remove = !commas.empty();
  if (!commas.empty() && !slots.empty()) remove = rng.uniform() < 0.5;
  if (remove) {
    const Token& c = *commas[rng.index(commas.size())];
    return RuleEdit{detail::splice(text, c.start, c.end, ""), {c.start, c.end}};
  }
  const Token& w = *slots[rng.index(slots.size())];
  return RuleEdit{detail::splice(text, w.end, w.end, ","), {w.start, w.end}};
}

namespace detail {

template <class NextLength>
std::string reshape_lines(std::string_view prose, NextLength&& next_length) {
  std::vector<std::string> words;
  std::string current;
  for (std::size_t i = 0; i < prose.size();) {
    const auto d = utf8::decode_at(prose, i);
    if (utf8::is_space(d.cp)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.append(prose.substr(i, d.length));
    }
    i += d.length;
  }
  if (!current.empty()) words.push_back(std::move(current));
  if (words.size() < 4) throw ArgumentError("quasipoetry_reshape: need at least 4 words");

  auto capitalize = [](const std::string& w) {
    std::string out;
    bool done = false;
    for (std::size_t i = 0; i < w.size();) {
      const auto d = utf8::decode_at(w, i);
      if (!done && utf8::is_letter(d.cp)) {
        utf8::append(out, utf8::to_upper(d.cp));
        done = true;
      } else {
        out.append(w, i, d.length);
      }
      i += d.length;
    }
    return out;
  };

  std::string out;
  std::size_t pos = 0;
  while (pos < words.size()) {
    const std::size_t remaining = words.size() - pos;
    std::size_t len = std::min<std::size_t>(next_length(), remaining);
    // Never leave a tail shorter than four words.
    if (remaining - len > 0 && remaining - len < 4) len = remaining <= 10 ? remaining : remaining - 4;
    if (!out.empty()) out.push_back('\n');
    for (std::size_t i = 0; i < len; ++i) {
      if (i > 0) out.push_back(' ');
      out.append(i == 0 ? capitalize(words[pos + i]) : words[pos + i]);
    }
    pos += len;
  }
  return out;
}

}  // namespace detail

/// Reformats prose as verse lines of 4 to 10 words, each line starting with
/// a capital letter. Produces correct text.
template <Choices C>
std::string quasipoetry_reshape(std::string_view prose, C& rng) {
  return detail::reshape_lines(prose, [&] { return static_cast<std::size_t>(4 + rng.index(7)); });
}

/// Reshape with a fixed line length (clamped to 4..10).
inline std::string quasipoetry_reshape_fixed(std::string_view prose, std::size_t line_length) {
  line_length = std::clamp<std::size_t>(line_length, 4, 10);
  return detail::reshape_lines(prose, [&] { return line_length; });
}

struct CorruptionConfig {
  std::uint64_t seed = 0;
  std::map<std::string, double> rule_weights = {{"grammar_form", 1.0},
                                                {"preposition", 1.0},
                                                {"misspelling", 1.0},
                                                {"split_merge", 1.0},
                                                {"punctuation", 1.0}};
  int max_edits_per_text = 1;
  /// Restricts preposition and punctuation rules to their deleting branch
  /// and disables the others.
  bool deletions_only = false;

  void validate() const {
    double total = 0.0;
    for (const auto& [name, w] : rule_weights) {
      if (!rule_from_name(name)) throw ArgumentError("unknown corruption rule '" + name + "'");
      if (!(w >= 0.0)) throw ArgumentError("rule weight for '" + name + "' must be non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw ArgumentError("rule weights must not all be zero");
    if (max_edits_per_text < 1) throw ArgumentError("max_edits_per_text must be at least 1");
  }

  double weight(Rule r) const {
    const auto it = rule_weights.find(rule_name(r));
    if (it == rule_weights.end()) return 0.0;
    if (deletions_only && r != Rule::preposition && r != Rule::punctuation) return 0.0;
    return it->second;
  }
};

struct AppliedRule {
  std::string rule;
  Span span;  // byte range affected, in the text the rule was applied to
};

struct CorruptionRecord {
  std::string id;
  std::string domain;
  std::string original;
  std::string corrupted;
  std::vector<AppliedRule> applied;
};

template <Choices C>
std::optional<RuleEdit> apply_rule(Rule rule, std::string_view text, const CorruptionResources& res, C& rng,
                                   bool deletions_only) {
  switch (rule) {
    case Rule::grammar_form: return distort_grammar_form(text, res, rng);
    case Rule::preposition: return distort_preposition(text, res, rng, deletions_only);
    case Rule::misspelling: return inject_misspelling(text, res, rng);
    case Rule::split_merge: return split_or_merge_words(text, rng);
    case Rule::punctuation: return perturb_punctuation(text, rng, deletions_only);
  }
  return std::nullopt;
}

/// Corrupts `text` using the stream (config.seed, stream). Draws an edit
/// count in 1..max_edits_per_text; for each edit, rules are drawn by weight
/// without replacement until one applies.
inline CorruptionRecord corrupt_stream(std::string id, std::string domain, std::string_view text,
                                       const CorruptionConfig& config, const CorruptionResources& res,
                                       std::uint64_t stream) {
  config.validate();
  Rng rng(derive_seed(config.seed, stream));
  const auto original_norm = normalize(text);
  constexpr int kAttempts = 8;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const auto edits = static_cast<int>(rng.between(1, config.max_edits_per_text));
    std::string current(text);
    std::vector<AppliedRule> applied;
    for (int e = 0; e < edits; ++e) {
      std::vector<Rule> pool;
      for (Rule r : kRules) {
        if (config.weight(r) > 0.0) pool.push_back(r);
      }
      bool done = false;
      while (!pool.empty() && !done) {
        double total = 0.0;
        for (Rule r : pool) total += config.weight(r);
        double u = rng.uniform() * total;
        std::size_t pick = pool.size() - 1;
        for (std::size_t i = 0; i < pool.size(); ++i) {
          u -= config.weight(pool[i]);
          if (u < 0.0) {
            pick = i;
            break;
          }
        }
        const Rule rule = pool[pick];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        if (auto edit = apply_rule(rule, current, res, rng, config.deletions_only)) {
          applied.push_back({rule_name(rule), edit->span});
          current = std::move(edit->text);
          done = true;
        }
      }
      if (!done) break;
    }
    if (applied.empty()) throw DataError("no applicable rule for text '" + id + "'");
    if (normalize(current) != original_norm) {
      return {std::move(id), std::move(domain), std::string(text), std::move(current), std::move(applied)};
    }
  }
  throw DataError("corruption of '" + id + "' kept cancelling out");
}

/// Deterministic in (config.seed, id, text).
inline CorruptionRecord corrupt(std::string id, std::string domain, std::string_view text,
                                const CorruptionConfig& config, const CorruptionResources& res) {
  const auto stream = fnv1a(id);
  return corrupt_stream(std::move(id), std::move(domain), text, config, res, stream);
}

struct SourceText {
  std::string id;
  std::string domain;
  std::string text;
};

/// n records cycling through the corpus. Record i draws from stream i, so a
/// record does not depend on n. A source text that admits no rule is skipped
/// in favor of the next one in the cycle.
inline std::vector<CorruptionRecord> generate_dataset(const std::vector<SourceText>& corpus,
                                                      const CorruptionConfig& config,
                                                      const CorruptionResources& res, std::size_t n,
                                                      unsigned jobs = 1) {
  if (n == 0) return {};
  if (corpus.empty()) throw ArgumentError("generate_dataset: empty corpus");
  config.validate();
  std::vector<CorruptionRecord> out(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    for (std::size_t t = 0; t < corpus.size(); ++t) {
      const auto& src = corpus[(i + t) % corpus.size()];
      try {
        out[i] = corrupt_stream(src.id + "-" + std::to_string(i), src.domain, src.text, config, res, i);
        return;
      } catch (const DataError&) {
      }
    }
    throw DataError("no corpus text admits any corruption rule");
  });
  return out;
}

inline ordered_json to_json(const CorruptionRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["domain"] = r.domain;
  j["text_fixed"] = r.original;
  j["text_corrupted"] = r.corrupted;
  ordered_json rules = ordered_json::array();
  for (const auto& a : r.applied) rules.push_back(a.rule);
  j["rules"] = rules;
  return j;
}

}  // namespace lingad

#pragma once

// Word-level edits between a defective text and its correction, edit
// categories, edit-frequency profiles and their KL divergence, plus
// vocabulary and n-gram statistics of corpora.

#include <algorithm>
#include <cmath>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lingad/corpus.hpp"
#include "lingad/error.hpp"
#include "lingad/utf8.hpp"

namespace lingad {

enum class EditKind { insert, remove, replace };
enum class EditCategory { spelling, tokenization, punctuation, other };

inline const char* to_string(EditKind k) {
  switch (k) {
    case EditKind::insert: return "insert";
    case EditKind::remove: return "delete";
    case EditKind::replace: return "replace";
  }
  return "?";
}

inline const char* to_string(EditCategory c) {
  switch (c) {
    case EditCategory::spelling: return "spelling";
    case EditCategory::tokenization: return "tokenization";
    case EditCategory::punctuation: return "punctuation";
    case EditCategory::other: return "other";
  }
  return "?";
}

inline constexpr std::array<EditCategory, 4> kEditCategories = {
    EditCategory::spelling, EditCategory::tokenization, EditCategory::punctuation, EditCategory::other};

struct EditOp {
  EditKind kind = EditKind::replace;
  std::vector<std::string> src_tokens;
  std::vector<std::string> dst_tokens;
  std::size_t src_position = 0;  // token index in the source text
  EditCategory category = EditCategory::other;

  bool operator==(const EditOp&) const = default;
};

/// Known-word list for telling misspellings from grammar fixes: a replaced
/// word that is itself in the lexicon is not a spelling error.
using Lexicon = std::unordered_set<std::string>;

/// Levenshtein distance over code points.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto x = utf8::decode(a);
  const auto y = utf8::decode(b);
  std::vector<std::size_t> prev(y.size() + 1);
  std::vector<std::size_t> cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

/// First matching rule wins: punctuation, tokenization (pure split/merge),
/// spelling (one alphabetic word for another within Levenshtein 2), other.
inline EditCategory categorize(const EditOp& e, const Lexicon* lexicon = nullptr) {
  const bool any = !e.src_tokens.empty() || !e.dst_tokens.empty();
  auto is_punct = [](const std::string& s) { return kind_of(s) == TokenKind::punctuation; };
  if (any && std::all_of(e.src_tokens.begin(), e.src_tokens.end(), is_punct) &&
      std::all_of(e.dst_tokens.begin(), e.dst_tokens.end(), is_punct)) {
    return EditCategory::punctuation;
  }
  if (e.kind == EditKind::replace) {
    std::string src;
    std::string dst;
    for (const auto& s : e.src_tokens) src += s;
    for (const auto& s : e.dst_tokens) dst += s;
    if (utf8::to_lower(src) == utf8::to_lower(dst)) return EditCategory::tokenization;
    if (e.src_tokens.size() == 1 && e.dst_tokens.size() == 1) {
      auto alphabetic = [](const std::string& s) {
        const auto cps = utf8::decode(s);
        return !cps.empty() && std::all_of(cps.begin(), cps.end(), [](char32_t c) { return utf8::is_letter(c); });
      };
      const auto a = utf8::to_lower(e.src_tokens[0]);
      const auto b = utf8::to_lower(e.dst_tokens[0]);
      if (alphabetic(a) && alphabetic(b) && levenshtein(a, b) <= 2 && !(lexicon && lexicon->contains(a))) {
        return EditCategory::spelling;
      }
    }
  }
  return EditCategory::other;
}

/// Aligns the tokens of a and b by longest common subsequence and turns each
/// maximal run of unmatched tokens into one edit that rewrites a toward b.
inline std::vector<EditOp> word_level_diff(std::string_view a, std::string_view b,
                                           const Lexicon* lexicon = nullptr) {
  const auto ta = tokenize(a);
  const auto tb = tokenize(b);
  const std::size_t n = ta.size();
  const std::size_t m = tb.size();

  std::size_t prefix = 0;
  while (prefix < n && prefix < m && ta[prefix].surface == tb[prefix].surface) ++prefix;
  std::size_t suffix = 0;
  while (suffix < n - prefix && suffix < m - prefix &&
         ta[n - 1 - suffix].surface == tb[m - 1 - suffix].surface) {
    ++suffix;
  }
  const std::size_t rn = n - prefix - suffix;
  const std::size_t rm = m - prefix - suffix;

  // lcs[i][j] = LCS length of the middle sections from (i, j) onward.
  std::vector<std::vector<std::uint32_t>> lcs(rn + 1, std::vector<std::uint32_t>(rm + 1, 0));
  for (std::size_t i = rn; i-- > 0;) {
    for (std::size_t j = rm; j-- > 0;) {
      lcs[i][j] = ta[prefix + i].surface == tb[prefix + j].surface ? lcs[i + 1][j + 1] + 1
                                                                     : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }

  std::vector<EditOp> ops;
  auto flush = [&](std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1) {
    if (i0 == i1 && j0 == j1) return;
    EditOp e;
    for (std::size_t i = i0; i < i1; ++i) e.src_tokens.push_back(ta[i].surface);
    for (std::size_t j = j0; j < j1; ++j) e.dst_tokens.push_back(tb[j].surface);
    e.kind = e.src_tokens.empty() ? EditKind::insert : (e.dst_tokens.empty() ? EditKind::remove : EditKind::replace);
    e.src_position = i0;
    e.category = categorize(e, lexicon);
    ops.push_back(std::move(e));
  };

  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t gap_i = 0;
  std::size_t gap_j = 0;
  while (i < rn && j < rm) {
    if (ta[prefix + i].surface == tb[prefix + j].surface && lcs[i][j] == lcs[i + 1][j + 1] + 1) {
      flush(prefix + gap_i, prefix + i, prefix + gap_j, prefix + j);
      ++i;
      ++j;
      gap_i = i;
      gap_j = j;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      ++i;
    } else {
      ++j;
    }
  }
  flush(prefix + gap_i, prefix + rn, prefix + gap_j, prefix + rm);
  return ops;
}

/// Applies edits produced by word_level_diff(a, b) to a and renders the
/// result in canonical spacing, which equals normalize(b).
inline std::string apply_edits(std::string_view a, const std::vector<EditOp>& edits) {
  const auto tokens = tokenize(a);
  std::vector<const EditOp*> ordered;
  for (const auto& e : edits) ordered.push_back(&e);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const EditOp* x, const EditOp* y) { return x->src_position < y->src_position; });
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (const EditOp* e : ordered) {
    if (e->src_position < pos || e->src_position + e->src_tokens.size() > tokens.size()) {
      throw DataError("edit position " + std::to_string(e->src_position) + " out of range");
    }
    for (; pos < e->src_position; ++pos) out.push_back(tokens[pos].surface);
    for (std::size_t k = 0; k < e->src_tokens.size(); ++k) {
      if (tokens[pos + k].surface != e->src_tokens[k]) {
        throw DataError("edit at position " + std::to_string(e->src_position) + " does not match the text");
      }
    }
    pos += e->src_tokens.size();
    out.insert(out.end(), e->dst_tokens.begin(), e->dst_tokens.end());
  }
  for (; pos < tokens.size(); ++pos) out.push_back(tokens[pos].surface);
  return render(out);
}

/// Insertion or deletion of spaces around a hyphen: the words themselves are
/// unchanged, so it does not count as an edit.
inline bool is_hyphen_spacing_only(const EditOp& e) {
  if (e.kind != EditKind::replace) return false;
  std::string src;
  std::string dst;
  for (const auto& s : e.src_tokens) src += s;
  for (const auto& s : e.dst_tokens) dst += s;
  return src == dst && src.find('-') != std::string::npos;
}

struct TextPair {
  std::string corrupted;
  std::string fixed;
};

inline std::size_t counted_edits(const std::vector<EditOp>& edits) {
  return static_cast<std::size_t>(
      std::count_if(edits.begin(), edits.end(), [](const EditOp& e) { return !is_hyphen_spacing_only(e); }));
}

/// Number of pairs per edit count.
inline std::map<std::size_t, std::size_t> edit_count_histogram(const std::vector<TextPair>& pairs) {
  std::map<std::size_t, std::size_t> hist;
  for (const auto& p : pairs) ++hist[counted_edits(word_level_diff(p.corrupted, p.fixed))];
  return hist;
}

struct EditProfile {
  std::map<std::string, std::size_t> category_counts;
  std::map<std::size_t, std::size_t> edits_per_pair_histogram;
  std::map<std::string, double> signature_frequencies;
  std::size_t total_edits = 0;
};

/// Canonical key (kind, category, lowercased source words, lowercased target words).
inline std::string edit_signature(const EditOp& e) {
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ' ';
      s += v[i] == "\n" ? std::string("\\n") : utf8::to_lower(v[i]);
    }
    return s;
  };
  return std::string(to_string(e.kind)) + '\t' + to_string(e.category) + '\t' + join(e.src_tokens) + '\t' +
         join(e.dst_tokens);
}

inline EditProfile edit_frequency_profile(const std::vector<TextPair>& pairs, const Lexicon* lexicon = nullptr) {
  EditProfile p;
  for (EditCategory c : kEditCategories) p.category_counts[to_string(c)] = 0;
  std::map<std::string, std::size_t> counts;
  for (const auto& pair : pairs) {
    const auto edits = word_level_diff(pair.corrupted, pair.fixed, lexicon);
    ++p.edits_per_pair_histogram[counted_edits(edits)];
    for (const auto& e : edits) {
      ++p.category_counts[to_string(e.category)];
      ++counts[edit_signature(e)];
      ++p.total_edits;
    }
  }
  for (const auto& [sig, c] : counts) {
    p.signature_frequencies[sig] = static_cast<double>(c) / static_cast<double>(p.total_edits);
  }
  return p;
}

/// D(P || Q) = sum p log(p / q) over the union of signatures, after adding
/// epsilon to every entry on both sides and renormalizing.
inline double kl_divergence(const std::map<std::string, double>& p_freq, const std::map<std::string, double>& q_freq,
                            double epsilon = 1e-9) {
  if (p_freq.empty()) throw ArgumentError("kl_divergence: P is empty");
  if (epsilon < 0.0) throw ArgumentError("kl_divergence: epsilon must be non-negative");
  std::set<std::string> support;
  for (const auto& [k, v] : p_freq) support.insert(k);
  for (const auto& [k, v] : q_freq) support.insert(k);
  auto smoothed = [&](const std::map<std::string, double>& f) {
    std::vector<double> v;
    v.reserve(support.size());
    double total = 0.0;
    for (const auto& k : support) {
      const auto it = f.find(k);
      const double x = (it == f.end() ? 0.0 : it->second) + epsilon;
      v.push_back(x);
      total += x;
    }
    if (total > 0.0) {
      for (auto& x : v) x /= total;
    }
    return v;
  };
  const auto p = smoothed(p_freq);
  const auto q = smoothed(q_freq);
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw ArgumentError("kl_divergence: Q has zero mass where P does not; use epsilon > 0");
    d += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(d, 0.0);
}

inline double kl_divergence(const EditProfile& p, const EditProfile& q, double epsilon = 1e-9) {
  return kl_divergence(p.signature_frequencies, q.signature_frequencies, epsilon);
}

/// Word counts with punctuation and numbers excluded. unique_ngrams[n - 1]
/// counts distinct lowercased n-grams that do not cross a linebreak or a
/// text boundary.
struct VocabStats {
  std::size_t total_words = 0;
  std::size_t unique_words = 0;
  std::vector<std::size_t> unique_ngrams;
};

/// Lowercased word runs of a text, split at linebreaks.
inline std::vector<std::vector<std::string>> word_segments(std::string_view text) {
  std::vector<std::vector<std::string>> segments(1);
  for (const auto& t : tokenize(text)) {
    if (t.kind == TokenKind::linebreak) {
      if (!segments.back().empty()) segments.emplace_back();
    } else if (t.kind == TokenKind::word) {
      segments.back().push_back(utf8::to_lower(t.surface));
    }
  }
  if (segments.back().empty()) segments.pop_back();
  return segments;
}

inline VocabStats vocab_stats(const std::vector<std::string>& corpus, std::size_t max_n = 3) {
  VocabStats s;
  std::vector<std::set<std::vector<std::string>>> grams(max_n);
  for (const auto& text : corpus) {
    for (const auto& seg : word_segments(text)) {
      s.total_words += seg.size();
      for (std::size_t n = 1; n <= max_n; ++n) {
        for (std::size_t i = 0; i + n <= seg.size(); ++i) {
          grams[n - 1].emplace(seg.begin() + static_cast<std::ptrdiff_t>(i),
                               seg.begin() + static_cast<std::ptrdiff_t>(i + n));
        }
      }
    }
  }
  for (const auto& g : grams) s.unique_ngrams.push_back(g.size());
  s.unique_words = max_n >= 1 ? s.unique_ngrams[0] : 0;
  return s;
}

inline std::set<std::string> vocabulary_of(const std::vector<std::string>& corpus) {
  std::set<std::string> v;
  for (const auto& text : corpus) {
    for (const auto& seg : word_segments(text)) v.insert(seg.begin(), seg.end());
  }
  return v;
}

struct VocabOverlap {
  std::size_t new_words = 0;  // |vocab(A) \ vocab(B)|
  double jaccard = 0.0;       // |A ∩ B| / |A ∪ B|
  double containment = 0.0;   // |A ∩ B| / |B|
};

inline VocabOverlap vocab_overlap_and_novelty(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t common = 0;
  for (const auto& w : a) common += b.contains(w) ? 1 : 0;
  VocabOverlap o;
  o.new_words = a.size() - common;
  const std::size_t uni = a.size() + b.size() - common;
  o.jaccard = uni == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(uni);
  o.containment = b.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(b.size());
  return o;
}

inline VocabOverlap vocab_overlap_and_novelty(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return vocab_overlap_and_novelty(vocabulary_of(a), vocabulary_of(b));
}

/// Number of poems per count of non-blank lines.
inline std::map<std::size_t, std::size_t> poem_line_stats(const std::vector<std::string>& poems) {
  std::map<std::size_t, std::size_t> hist;
  for (const auto& poem : poems) {
    std::size_t lines = 0;
    std::size_t start = 0;
    while (start <= poem.size()) {
      auto end = poem.find('\n', start);
      if (end == std::string::npos) end = poem.size();
      const auto line = std::string_view(poem).substr(start, end - start);
      if (line.find_first_not_of(" \t\r") != std::string_view::npos) ++lines;
      start = end + 1;
    }
    ++hist[lines];
  }
  return hist;
}

}  // namespace lingad

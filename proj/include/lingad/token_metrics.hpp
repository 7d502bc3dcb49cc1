#pragma once

// Token-level indicators computed from a next-token distribution (token
// probability, rank, entropy, entropy delta, possible states, cumulative
// probability of the possible states, oddballness), their text-level
// min/max/median aggregates, perplexity, and paired perplexity diagnostics.
// All logarithms are natural.

#include <algorithm>
#include <array>
#include <functional>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lingad/error.hpp"
#include "lingad/hypothesis.hpp"
#include "lingad/ngram_lm.hpp"
#include "lingad/stats.hpp"

namespace lingad {

inline constexpr double kMinProbability = 1e-12;

/// Number of zero probabilities replaced by kMinProbability so far.
inline std::atomic<std::size_t>& probability_clamp_count() {
  static std::atomic<std::size_t> count{0};
  return count;
}

inline double clamp_probability(double p) {
  if (p <= 0.0) {
    probability_clamp_count().fetch_add(1, std::memory_order_relaxed);
    return kMinProbability;
  }
  return p;
}

inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

inline double entropy(const DistributionView& p) { return entropy(p.probabilities()); }

/// Observed surprisal minus entropy. A literal zero probability is an error.
inline double entropy_delta(double p_t, double h) {
  if (!(p_t > 0.0) || p_t > 1.0) throw ArgumentError("entropy_delta: p_t must be in (0, 1]");
  return -std::log(p_t) - h;
}

/// Integer part of e^H, never below 1.
inline std::uint64_t possible_states(double h) {
  if (!(h >= 0.0)) throw ArgumentError("possible_states: entropy must be non-negative");
  const double e = std::floor(std::exp(h));
  return e < 1.0 ? 1 : static_cast<std::uint64_t>(e);
}

/// Sum of the eta largest probabilities.
inline double cumulative_prob(const DistributionView& p, std::uint64_t eta) {
  if (eta < 1 || eta > p.size()) throw ArgumentError("cumulative_prob: eta out of range");
  double s = 0.0;
  for (std::uint64_t j = 0; j < eta; ++j) s += p[p.sorted_desc()[j]];
  return s;
}

/// 1-based rank of an outcome in descending probability order; equal
/// probabilities are ordered by ascending index.
inline std::uint64_t token_rank(const DistributionView& p, std::size_t index) {
  if (index >= p.size()) throw ArgumentError("token_rank: index out of range");
  const double pt = p[index];
  std::uint64_t rank = 1;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] > pt || (p[j] == pt && j < index)) ++rank;
  }
  return rank;
}

struct Oddballness {
  double xi = 0.0;
  bool exact = true;
};

/// Total probability mass in excess of the observed token's probability.
inline Oddballness oddballness(const DistributionView& p, std::size_t index) {
  if (index >= p.size()) throw ArgumentError("oddballness: index out of range");
  const double pt = p[index];
  double xi = 0.0;
  for (double pj : p.probabilities()) {
    if (pj > pt) xi += pj - pt;
  }
  return {xi, true};
}

/// Oddballness from a truncated top-k list. Exact when the observed token is
/// inside the list (every more probable token is listed); otherwise a lower bound.
inline Oddballness oddballness_from_topk(std::span<const double> topk, double tail_mass, double p_t,
                                         std::uint64_t r_t) {
  for (std::size_t i = 1; i < topk.size(); ++i) {
    if (topk[i] > topk[i - 1]) throw ArgumentError("oddballness_from_topk: top-k list is not sorted descending");
  }
  double total = tail_mass;
  for (double v : topk) total += v;
  if (std::fabs(total - 1.0) > 1e-3) {
    throw ArgumentError("oddballness_from_topk: top-k mass plus tail is not 1");
  }
  double xi = 0.0;
  for (double pj : topk) {
    if (pj > p_t) xi += pj - p_t;
  }
  return {xi, r_t >= 1 && r_t <= topk.size()};
}

struct TokenScoreRecord {
  std::string token;
  double p_t = 1.0;
  std::uint64_t r_t = 1;
  double H = 0.0;
  double dH = 0.0;
  std::uint64_t eta = 1;
  double pi = 1.0;
  double xi = 0.0;
  bool exact_xi = true;
};

/// All indicators for the outcome `index` under a full distribution.
inline TokenScoreRecord score_token(std::string token, const DistributionView& p, std::size_t index) {
  TokenScoreRecord r;
  r.token = std::move(token);
  r.p_t = clamp_probability(p[index]);
  r.r_t = token_rank(p, index);
  r.H = entropy(p);
  r.dH = entropy_delta(r.p_t, r.H);
  r.eta = std::min<std::uint64_t>(possible_states(r.H), p.size());
  r.pi = cumulative_prob(p, r.eta);
  const auto odd = oddballness(p, index);
  r.xi = odd.xi;
  r.exact_xi = odd.exact;
  return r;
}

inline std::vector<TokenScoreRecord> score_positions(const std::vector<ScoredPosition>& positions) {
  std::vector<TokenScoreRecord> out;
  out.reserve(positions.size());
  for (const auto& pos : positions) out.push_back(score_token(pos.token.surface, pos.distribution, pos.observed));
  return out;
}

/// exp of the mean negative log-probability.
inline double perplexity(std::span<const TokenScoreRecord> records) {
  if (records.empty()) throw ArgumentError("perplexity of an empty record list");
  double nll = 0.0;
  for (const auto& r : records) nll -= std::log(clamp_probability(r.p_t));
  return std::exp(nll / static_cast<double>(records.size()));
}

enum class Metric { p, r, H, dH, eta, pi, xi };
inline constexpr std::array<Metric, 7> kMetrics = {Metric::p, Metric::r,  Metric::H, Metric::dH,
                                                    Metric::eta, Metric::pi, Metric::xi};

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::p: return "p";
    case Metric::r: return "r";
    case Metric::H: return "H";
    case Metric::dH: return "dH";
    case Metric::eta: return "eta";
    case Metric::pi: return "pi";
    case Metric::xi: return "xi";
  }
  return "?";
}

inline double metric_value(const TokenScoreRecord& r, Metric m) {
  switch (m) {
    case Metric::p: return r.p_t;
    case Metric::r: return static_cast<double>(r.r_t);
    case Metric::H: return r.H;
    case Metric::dH: return r.dH;
    case Metric::eta: return static_cast<double>(r.eta);
    case Metric::pi: return r.pi;
    case Metric::xi: return r.xi;
  }
  return 0.0;
}

struct Aggregate {
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
};

struct TextFeatureVector {
  std::array<Aggregate, kMetrics.size()> aggregates{};
  double perplexity = 1.0;
  std::size_t num_tokens = 0;

  const Aggregate& operator[](Metric m) const { return aggregates[static_cast<std::size_t>(m)]; }

  /// Values in the order of feature_names().
  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(23);
    v.push_back(perplexity);
    v.push_back(static_cast<double>(num_tokens));
    for (const auto& a : aggregates) {
      v.push_back(a.min);
      v.push_back(a.max);
      v.push_back(a.median);
    }
    return v;
  }
};

/// The 23 numeric feature keys: ppl, num_tokens, then min/max/median per metric.
inline const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"ppl", "num_tokens"};
    for (Metric m : kMetrics) {
      for (const char* agg : {"min_", "max_", "median_"}) n.push_back(std::string(agg) + metric_name(m));
    }
    return n;
  }();
  return names;
}

inline bool is_feature_name(std::string_view name) {
  const auto& names = feature_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

inline TextFeatureVector aggregate_features(std::span<const TokenScoreRecord> records) {
  if (records.empty()) throw ArgumentError("aggregate_features: no token records");
  TextFeatureVector f;
  for (Metric m : kMetrics) {
    std::vector<double> v;
    v.reserve(records.size());
    for (const auto& r : records) v.push_back(metric_value(r, m));
    auto& a = f.aggregates[static_cast<std::size_t>(m)];
    a.min = *std::min_element(v.begin(), v.end());
    a.max = *std::max_element(v.begin(), v.end());
    a.median = stats::median(std::move(v));
  }
  f.perplexity = perplexity(records);
  f.num_tokens = records.size();
  return f;
}

/// Perplexity and token count of one scored text.
struct TextScoreSummary {
  double perplexity = 1.0;
  std::size_t num_tokens = 0;
};

struct PplPairDiagnostics {
  std::size_t pairs = 0;
  double mean_ppl_corrupted = 0.0;
  double sd_ppl_corrupted = 0.0;
  double mean_ppl_fixed = 0.0;
  double sd_ppl_fixed = 0.0;
  double share_increase = 0.0;  // share of pairs with ppl_corrupted - ppl_fixed > 0
  double share_decrease = 0.0;  // ... < 0
  double share_equal = 0.0;
  double ks_statistic = 0.0;
  double ks_p_value = 1.0;
  // Rows: numtokens(fixed) - numtokens(corrupted) = 0, > 0, < 0.
  // Columns: delta ppl > 0, delta ppl < 0. Entries are shares of all pairs.
  std::array<std::array<double, 2>, 3> by_length{};
  double pearson_rho = 0.0;
  double pearson_p_value = 1.0;
  bool pearson_defined = false;
};

inline PplPairDiagnostics ppl_pair_diagnostics(
    std::span<const std::pair<TextScoreSummary, TextScoreSummary>> pairs) {
  if (pairs.size() < 2) throw ArgumentError("ppl_pair_diagnostics: need at least 2 pairs");
  PplPairDiagnostics d;
  d.pairs = pairs.size();
  std::vector<double> corrupted;
  std::vector<double> fixed;
  std::vector<double> pooled_ppl;
  std::vector<double> pooled_len;
  std::size_t inc = 0;
  std::size_t dec = 0;
  std::array<std::array<std::size_t, 2>, 3> cells{};
  for (const auto& [c, f] : pairs) {
    corrupted.push_back(c.perplexity);
    fixed.push_back(f.perplexity);
    pooled_ppl.push_back(c.perplexity);
    pooled_ppl.push_back(f.perplexity);
    pooled_len.push_back(static_cast<double>(c.num_tokens));
    pooled_len.push_back(static_cast<double>(f.num_tokens));
    const double delta = c.perplexity - f.perplexity;
    const auto len_delta = static_cast<long long>(f.num_tokens) - static_cast<long long>(c.num_tokens);
    const std::size_t row = len_delta == 0 ? 0 : (len_delta > 0 ? 1 : 2);
    if (delta > 0) {
      ++inc;
      ++cells[row][0];
    } else if (delta < 0) {
      ++dec;
      ++cells[row][1];
    }
  }
  const double n = static_cast<double>(pairs.size());
  d.mean_ppl_corrupted = stats::mean(corrupted);
  d.sd_ppl_corrupted = stats::sample_sd(corrupted);
  d.mean_ppl_fixed = stats::mean(fixed);
  d.sd_ppl_fixed = stats::sample_sd(fixed);
  d.share_increase = static_cast<double>(inc) / n;
  d.share_decrease = static_cast<double>(dec) / n;
  d.share_equal = static_cast<double>(pairs.size() - inc - dec) / n;
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 2; ++c) d.by_length[r][c] = static_cast<double>(cells[r][c]) / n;
  }
  const auto ks = ks_2sample(corrupted, fixed);
  d.ks_statistic = ks.statistic;
  d.ks_p_value = ks.p_value;
  auto varies = [](const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) != v.end();
  };
  if (varies(pooled_ppl) && varies(pooled_len)) {
    const auto pr = pearson(pooled_ppl, pooled_len);
    d.pearson_rho = pr.rho;
    d.pearson_p_value = pr.p_value;
    d.pearson_defined = true;
  }
  return d;
}

}  // namespace lingad

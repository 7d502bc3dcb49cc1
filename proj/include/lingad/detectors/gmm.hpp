#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "lingad/detectors/vectors.hpp"
#include "lingad/jsonl.hpp"
#include "lingad/rng.hpp"
#include "lingad/stats.hpp"

namespace lingad {

inline constexpr double kGmmVarianceFloor = 1e-8;

struct GmmModel {
  std::vector<double> weights;
  Matrix means;
  Matrix variances;  // diagonal
  std::vector<double> log_likelihood_history;  // mean per-sample log-likelihood after each E-step
  std::size_t iterations = 0;
  bool converged = false;

  std::size_t k() const { return weights.size(); }
  std::size_t dimension() const { return means.empty() ? 0 : means.front().size(); }

  double component_log_density(std::size_t c, std::span<const double> x) const {
    double s = std::log(weights[c]);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double var = variances[c][j];
      const double z = x[j] - means[c][j];
      s -= 0.5 * (std::log(2.0 * std::numbers::pi * var) + z * z / var);
    }
    return s;
  }

  double log_density(std::span<const double> x) const {
    if (x.size() != dimension()) throw ArgumentError("gmm: dimension mismatch");
    std::vector<double> terms(k());
    for (std::size_t c = 0; c < k(); ++c) terms[c] = component_log_density(c, x);
    return stats::log_sum_exp(terms);
  }
};

namespace detail {

/// k-means++ seeding: first center uniform, then proportional to squared distance.
inline std::vector<std::size_t> kmeans_pp_seeds(const Matrix& x, std::size_t k, Rng& rng) {
  std::vector<std::size_t> seeds{rng.index(x.size())};
  std::vector<double> d2(x.size(), std::numeric_limits<double>::infinity());
  while (seeds.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(x[i], x[seeds.back()]));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.index(x.size());
    } else {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = x.size() - 1;
      for (std::size_t i = 0; i < x.size(); ++i) {
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    }
    seeds.push_back(pick);
  }
  return seeds;
}

}  // namespace detail

/// EM for a diagonal-covariance mixture. Stops when the mean per-sample
/// log-likelihood improves by less than `tol`, or after `max_iter` iterations.
inline GmmModel gmm_fit(const Matrix& x, std::size_t k, std::uint64_t seed = 0, std::size_t max_iter = 200,
                        double tol = 1e-6) {
  if (k < 1) throw ArgumentError("gmm_fit: k must be >= 1");
  const std::size_t d = checked_dimension(x, 1, "gmm_fit");
  if (x.size() < k) throw ArgumentError("gmm_fit: fewer vectors than components");
  const std::size_t n = x.size();
  Rng rng(seed);

  // Initialization: k-means++ centers, hard assignment for weights and variances.
  GmmModel m;
  const auto seeds = detail::kmeans_pp_seeds(x, k, rng);
  for (std::size_t s : seeds) m.means.push_back(x[s]);
  Vector global_var(d, 0.0);
  {
    Vector mu(d, 0.0);
    for (const auto& row : x)
      for (std::size_t j = 0; j < d; ++j) mu[j] += row[j] / static_cast<double>(n);
    for (const auto& row : x)
      for (std::size_t j = 0; j < d; ++j) global_var[j] += (row[j] - mu[j]) * (row[j] - mu[j]) / static_cast<double>(n);
    for (double& v : global_var) v = std::max(v, kGmmVarianceFloor);
  }
  {
    std::vector<std::size_t> count(k, 0);
    Matrix sq(k, Vector(d, 0.0));
    for (const auto& row : x) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = squared_distance(row, m.means[c]);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      ++count[best];
      for (std::size_t j = 0; j < d; ++j) sq[best][j] += (row[j] - m.means[best][j]) * (row[j] - m.means[best][j]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      m.weights.push_back(std::max<double>(count[c], 1.0) / static_cast<double>(n));
      Vector var(d);
      for (std::size_t j = 0; j < d; ++j) {
        var[j] = count[c] >= 2 ? std::max(sq[c][j] / static_cast<double>(count[c]), kGmmVarianceFloor) : global_var[j];
      }
      m.variances.push_back(std::move(var));
    }
    double wsum = 0.0;
    for (double w : m.weights) wsum += w;
    for (double& w : m.weights) w /= wsum;
  }

  Matrix resp(n, Vector(k));
  std::vector<double> terms(k);
  double previous = -std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // E-step.
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) terms[c] = m.component_log_density(c, x[i]);
      const double lse = stats::log_sum_exp(terms);
      ll += lse;
      for (std::size_t c = 0; c < k; ++c) resp[i][c] = std::exp(terms[c] - lse);
    }
    ll /= static_cast<double>(n);
    m.log_likelihood_history.push_back(ll);
    if (ll - previous < tol && iter > 0) {
      m.converged = true;
      break;
    }
    previous = ll;

    // M-step.
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0;
      for (std::size_t i = 0; i < n; ++i) nk += resp[i][c];
      if (nk <= 0.0) continue;  // empty component keeps its parameters
      Vector mu(d, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mu[j] += resp[i][c] * x[i][j];
      for (double& v : mu) v /= nk;
      Vector var(d, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) var[j] += resp[i][c] * (x[i][j] - mu[j]) * (x[i][j] - mu[j]);
      for (double& v : var) v = std::max(v / nk, kGmmVarianceFloor);
      m.weights[c] = nk / static_cast<double>(n);
      m.means[c] = std::move(mu);
      m.variances[c] = std::move(var);
    }
    m.iterations = iter + 1;
  }
  return m;
}

/// mean(-log density of corrupted) - mean(-log density of fixed).
inline double surprisal_gap(const GmmModel& model, const Matrix& corrupted, const Matrix& fixed) {
  if (corrupted.empty() || fixed.empty()) throw ArgumentError("surprisal_gap: empty vector set");
  auto mean_nll = [&](const Matrix& set) {
    double s = 0.0;
    for (const auto& v : set) s -= model.log_density(v);
    return s / static_cast<double>(set.size());
  };
  return mean_nll(corrupted) - mean_nll(fixed);
}

inline ordered_json to_json(const GmmModel& m) {
  ordered_json j;
  j["algorithm"] = "gmm";
  j["k"] = m.k();
  j["weights"] = m.weights;
  j["means"] = m.means;
  j["variances"] = m.variances;
  j["iterations"] = m.iterations;
  j["converged"] = m.converged;
  j["log_likelihood"] = m.log_likelihood_history;
  return j;
}

}  // namespace lingad

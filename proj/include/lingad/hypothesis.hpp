#pragma once

// Two-sample Kolmogorov-Smirnov test and Pearson correlation with p-values.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "lingad/error.hpp"
#include "lingad/stats.hpp"

namespace lingad {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Kolmogorov distribution tail Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2).
/// For small lambda the alternating series converges slowly, so the
/// equivalent Jacobi-theta form is used there instead.
inline double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double kTermEps = 1e-12;
  if (lambda < 1.18) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double w = pi2 / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k < 1000; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * w);
      s += term;
      if (term < kTermEps * 1e-6) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k < 100000; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < kTermEps) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// D = sup |F_x - F_y| with an asymptotic p-value using the
/// (sqrt(m) + 0.12 + 0.11 / sqrt(m)) small-sample correction,
/// m = |x||y| / (|x| + |y|).
inline KsResult ks_2sample(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ArgumentError("ks_2sample: both samples must be nonempty");
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  // Once one sample is exhausted its ECDF is 1; the other only climbs toward 1.
  const double me = n * m / (n + m);
  const double root = std::sqrt(me);
  const double lambda = (root + 0.12 + 0.11 / root) * d;
  return {d, kolmogorov_tail(lambda)};
}

struct PearsonResult {
  double rho = 0.0;
  double p_value = 1.0;
};

/// Pearson correlation; the two-sided p-value comes from the Student t
/// distribution with n - 2 degrees of freedom.
inline PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("pearson: samples differ in length");
  if (x.size() < 3) throw ArgumentError("pearson: need at least 3 points");
  const double mx = stats::mean(x);
  const double my = stats::mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ArgumentError("pearson: zero variance");
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::fabs(rho) >= 1.0) return {rho, 0.0};
  const double df = static_cast<double>(x.size() - 2);
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  return {rho, stats::student_t_two_sided(t, df)};
}

}  // namespace lingad

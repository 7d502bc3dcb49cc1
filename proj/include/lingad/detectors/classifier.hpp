#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lingad/detectors/vectors.hpp"
#include "lingad/jsonl.hpp"
#include "lingad/rng.hpp"

namespace lingad {

struct ClassifierOptions {
  double l2 = 1e-3;
  std::size_t epochs = 2000;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
};

/// Logistic regression on standardized features. Constant training features
/// are dropped; `kept` lists the retained input columns.
struct LinearClassifier {
  std::vector<std::size_t> kept;
  Vector mean;
  Vector scale;
  Vector weights;
  double bias = 0.0;
  std::size_t input_dimension = 0;

  Vector standardize(std::span<const double> x) const {
    if (x.size() != input_dimension) throw ArgumentError("classifier: dimension mismatch");
    Vector z(kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j) z[j] = (x[kept[j]] - mean[j]) / scale[j];
    return z;
  }

  double predict_proba(std::span<const double> x) const {
    const auto z = standardize(x);
    return 1.0 / (1.0 + std::exp(-(dot(weights, z) + bias)));
  }

  int predict(std::span<const double> x) const { return predict_proba(x) > 0.5 ? 1 : 0; }

  std::vector<int> predict(const Matrix& rows) const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(predict(r));
    return out;
  }
};

namespace detail {

inline double log1p_exp(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace detail

/// Mean logistic loss on standardized rows plus (l2 / 2) * |w|^2.
inline double logistic_objective(const Matrix& z, std::span<const int> y, std::span<const double> w, double b,
                                 double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double t = dot(w, z[i]) + b;
    loss += y[i] == 1 ? detail::log1p_exp(-t) : detail::log1p_exp(t);
  }
  return loss / static_cast<double>(z.size()) + 0.5 * l2 * dot(w, w);
}

/// Gradient of logistic_objective; the last entry is the bias component.
inline Vector logistic_gradient(const Matrix& z, std::span<const int> y, std::span<const double> w, double b,
                                double l2) {
  const std::size_t d = w.size();
  Vector g(d + 1, 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = 1.0 / (1.0 + std::exp(-(dot(w, z[i]) + b))) - static_cast<double>(y[i]);
    for (std::size_t j = 0; j < d; ++j) g[j] += r * z[i][j];
    g[d] += r;
  }
  const double n = static_cast<double>(z.size());
  for (std::size_t j = 0; j < d; ++j) g[j] = g[j] / n + l2 * w[j];
  g[d] /= n;
  return g;
}

/// Standardizes `rows` with the classifier's stored statistics.
inline Matrix standardize_rows(const LinearClassifier& c, const Matrix& rows) {
  Matrix z;
  z.reserve(rows.size());
  for (const auto& r : rows) z.push_back(c.standardize(r));
  return z;
}

/// Full-batch gradient descent. The step is capped at 1 / L, where
/// L = 0.25 (d + 1) + l2 bounds the curvature on standardized data.
inline LinearClassifier classifier_fit(const Matrix& features, std::span<const int> labels,
                                       const ClassifierOptions& options = {}) {
  const std::size_t d = checked_dimension(features, 2, "classifier_fit");
  if (labels.size() != features.size()) throw ArgumentError("classifier_fit: length mismatch");
  bool has_pos = false;
  bool has_neg = false;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ArgumentError("classifier_fit: labels must be 0 or 1");
    (l == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw ArgumentError("classifier_fit: labels contain a single class");
  if (!(options.learning_rate > 0.0) || options.l2 < 0.0) throw ArgumentError("classifier_fit: bad options");

  const double n = static_cast<double>(features.size());
  LinearClassifier c;
  c.input_dimension = d;
  for (std::size_t j = 0; j < d; ++j) {
    double mu = 0.0;
    for (const auto& r : features) mu += r[j];
    mu /= n;
    double var = 0.0;
    for (const auto& r : features) var += (r[j] - mu) * (r[j] - mu);
    const double sd = std::sqrt(var / n);
    if (sd > 1e-12 * std::max(1.0, std::fabs(mu))) {
      c.kept.push_back(j);
      c.mean.push_back(mu);
      c.scale.push_back(sd);
    }
  }
  const Matrix z = standardize_rows(c, features);
  const std::size_t k = c.kept.size();
  Rng rng(options.seed);
  c.weights.resize(k);
  for (double& w : c.weights) w = 0.01 * rng.normal();
  c.bias = 0.0;

  const double step = std::min(options.learning_rate, 1.0 / (0.25 * static_cast<double>(k + 1) + options.l2));
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto g = logistic_gradient(z, labels, c.weights, c.bias, options.l2);
    for (std::size_t j = 0; j < k; ++j) c.weights[j] -= step * g[j];
    c.bias -= step * g[k];
  }
  return c;
}

inline ordered_json to_json(const LinearClassifier& c) {
  ordered_json j;
  j["algorithm"] = "logistic";
  j["input_dimension"] = c.input_dimension;
  j["kept"] = c.kept;
  j["mean"] = c.mean;
  j["scale"] = c.scale;
  j["weights"] = c.weights;
  j["bias"] = c.bias;
  return j;
}

}  // namespace lingad

#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "lingad/detectors/vectors.hpp"
#include "lingad/jsonl.hpp"
#include "lingad/log.hpp"
#include "lingad/stats.hpp"

namespace lingad {

/// Gaussian product-kernel density with per-dimension Scott bandwidths.
struct KdeModel {
  Matrix points;
  Vector bandwidths;

  /// Negative log density; higher means more anomalous.
  double score(std::span<const double> v) const {
    if (v.size() != bandwidths.size()) throw ArgumentError("kde score: dimension mismatch");
    double log_norm = 0.0;
    for (double h : bandwidths) log_norm += std::log(h) + 0.5 * std::log(2.0 * std::numbers::pi);
    std::vector<double> terms;
    terms.reserve(points.size());
    for (const auto& x : points) {
      double e = 0.0;
      for (std::size_t d = 0; d < v.size(); ++d) {
        const double z = (v[d] - x[d]) / bandwidths[d];
        e -= 0.5 * z * z;
      }
      terms.push_back(e - log_norm);
    }
    return -(stats::log_sum_exp(terms) - std::log(static_cast<double>(points.size())));
  }
};

inline KdeModel kde_fit(const Matrix& vectors) {
  const std::size_t d = checked_dimension(vectors, 2, "kde_fit");
  const double n = static_cast<double>(vectors.size());
  const double factor = std::pow(n, -1.0 / (static_cast<double>(d) + 4.0));
  KdeModel m;
  m.points = vectors;
  m.bandwidths.resize(d);
  std::vector<double> column(vectors.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < vectors.size(); ++i) column[i] = vectors[i][j];
    double sd = stats::sample_sd(column);
    if (!(sd > 0.0)) {
      warn("kde_fit: dimension " + std::to_string(j) + " has zero variance; adding jitter");
      sd = 1e-12;
    }
    m.bandwidths[j] = factor * sd;
  }
  return m;
}

inline double kde_score(const KdeModel& model, std::span<const double> v) { return model.score(v); }

inline ordered_json to_json(const KdeModel& m) {
  ordered_json j;
  j["bandwidths"] = m.bandwidths;
  j["points"] = m.points;
  return j;
}

inline KdeModel kde_from_json(const json& j) {
  KdeModel m;
  m.bandwidths = j.at("bandwidths").get<Vector>();
  m.points = j.at("points").get<Matrix>();
  return m;
}

}  // namespace lingad

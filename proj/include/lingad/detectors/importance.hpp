#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lingad/detectors/vectors.hpp"
#include "lingad/metrics.hpp"
#include "lingad/rng.hpp"

namespace lingad {

using RowPredictor = std::function<std::vector<int>(const Matrix&)>;

struct FeatureImportance {
  double importance = 0.0;  // baseline metric minus mean shuffled metric
  double sd = 0.0;          // spread over repeats
};

/// Column f in repeat r is shuffled with stream (seed, f * repeats + r).
inline std::vector<FeatureImportance> permutation_importance(const RowPredictor& predict, const Matrix& features,
                                                             std::span<const int> labels, std::size_t repeats = 10,
                                                             std::uint64_t seed = 0,
                                                             const BinaryMetric& metric = f05_score) {
  const std::size_t d = checked_dimension(features, 1, "permutation_importance");
  if (labels.size() != features.size()) throw ArgumentError("permutation_importance: length mismatch");
  if (repeats < 1) throw ArgumentError("permutation_importance: repeats must be >= 1");
  const double baseline = metric(predict(features), labels);
  std::vector<FeatureImportance> out(d);
  Matrix shuffled = features;
  std::vector<double> column(features.size());
  for (std::size_t f = 0; f < d; ++f) {
    std::vector<double> drops;
    for (std::size_t r = 0; r < repeats; ++r) {
      for (std::size_t i = 0; i < features.size(); ++i) column[i] = features[i][f];
      Rng rng(derive_seed(seed, f * repeats + r));
      rng.shuffle(column);
      for (std::size_t i = 0; i < features.size(); ++i) shuffled[i][f] = column[i];
      drops.push_back(baseline - metric(predict(shuffled), labels));
    }
    for (std::size_t i = 0; i < features.size(); ++i) shuffled[i][f] = features[i][f];
    double m = 0.0;
    for (double v : drops) m += v;
    m /= static_cast<double>(repeats);
    double var = 0.0;
    for (double v : drops) var += (v - m) * (v - m);
    out[f] = {m, repeats > 1 ? std::sqrt(var / static_cast<double>(repeats - 1)) : 0.0};
  }
  return out;
}

}  // namespace lingad

#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "lingad/detectors/vectors.hpp"
#include "lingad/jsonl.hpp"

namespace lingad {

/// Angle-based outlier factor of `v` against `references`, negated so that
/// higher means more anomalous. For every pair of difference vectors a, b the
/// term dot(a, b) / (|a|^2 |b|^2) is formed; the factor is the population
/// variance of these terms. References coinciding with `v` are skipped, as is
/// index `exclude` (leave-one-out scoring of a training point). With
/// `neighbors` > 0 only that many nearest references are used.
inline double abod_score(const Matrix& references, std::span<const double> v,
                         std::optional<std::size_t> exclude = std::nullopt, std::size_t neighbors = 0) {
  checked_dimension(references, 1, "abod_score");
  if (v.size() != references.front().size()) throw ArgumentError("abod_score: dimension mismatch");
  std::vector<std::pair<double, std::size_t>> usable;
  for (std::size_t i = 0; i < references.size(); ++i) {
    if (exclude && *exclude == i) continue;
    const double d2 = squared_distance(references[i], v);
    if (d2 > 0.0) usable.emplace_back(d2, i);
  }
  if (neighbors > 0 && usable.size() > neighbors) {
    std::partial_sort(usable.begin(), usable.begin() + static_cast<std::ptrdiff_t>(neighbors), usable.end());
    usable.resize(neighbors);
    std::sort(usable.begin(), usable.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  }
  if (usable.size() < 3) throw ArgumentError("abod_score: fewer than 3 references distinct from the query");

  const std::size_t d = v.size();
  std::vector<Vector> diff;
  std::vector<double> norm2;
  diff.reserve(usable.size());
  for (const auto& [d2, i] : usable) {
    Vector a(d);
    for (std::size_t j = 0; j < d; ++j) a[j] = references[i][j] - v[j];
    diff.push_back(std::move(a));
    norm2.push_back(d2);
  }
  std::vector<double> terms;
  terms.reserve(diff.size() * (diff.size() - 1) / 2);
  for (std::size_t a = 0; a < diff.size(); ++a) {
    for (std::size_t b = a + 1; b < diff.size(); ++b) terms.push_back(dot(diff[a], diff[b]) / (norm2[a] * norm2[b]));
  }
  const double mean = std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(terms.size());
  double variance = 0.0;
  for (double t : terms) variance += (t - mean) * (t - mean);
  variance /= static_cast<double>(terms.size());
  return -variance;
}

struct AbodModel {
  Matrix references;
  std::size_t neighbors = 0;

  double score(std::span<const double> v) const { return abod_score(references, v, std::nullopt, neighbors); }
};

inline AbodModel abod_fit(const Matrix& vectors, std::size_t neighbors = 0) {
  checked_dimension(vectors, 4, "abod_fit");
  if (neighbors != 0 && neighbors < 3) throw ArgumentError("abod_fit: neighbors must be 0 or >= 3");
  return {vectors, neighbors};
}

inline ordered_json to_json(const AbodModel& m) {
  ordered_json j;
  j["neighbors"] = m.neighbors;
  j["references"] = m.references;
  return j;
}

inline AbodModel abod_from_json(const json& j) {
  return {j.at("references").get<Matrix>(), j.at("neighbors").get<std::size_t>()};
}

}  // namespace lingad

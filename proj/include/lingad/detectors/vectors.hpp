#pragma once

#include <span>
#include <string>
#include <vector>

#include "lingad/error.hpp"

namespace lingad {

using Vector = std::vector<double>;
using Matrix = std::vector<Vector>;

/// Dimension shared by all rows; throws if rows differ or there are fewer than `min_rows`.
inline std::size_t checked_dimension(const Matrix& rows, std::size_t min_rows, const char* who) {
  if (rows.size() < min_rows) {
    throw ArgumentError(std::string(who) + ": need at least " + std::to_string(min_rows) + " vectors");
  }
  if (rows.empty()) return 0;
  const std::size_t d = rows.front().size();
  if (d == 0) throw ArgumentError(std::string(who) + ": vectors have zero dimension");
  for (const auto& r : rows) {
    if (r.size() != d) throw ArgumentError(std::string(who) + ": vectors differ in dimension");
  }
  return d;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace lingad

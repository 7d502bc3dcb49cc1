#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "lingad/error.hpp"
#include "lingad/jsonl.hpp"
#include "lingad/metrics.hpp"
#include "lingad/stats.hpp"
#include "lingad/token_metrics.hpp"

namespace lingad {

enum class Direction { flag_below, flag_above };

inline const char* to_string(Direction d) { return d == Direction::flag_below ? "flag_below" : "flag_above"; }

inline Direction direction_from_name(std::string_view name) {
  if (name == "flag_below") return Direction::flag_below;
  if (name == "flag_above") return Direction::flag_above;
  throw ArgumentError("unknown direction '" + std::string(name) + "'");
}

struct ThresholdDetector {
  std::string feature_name;
  Direction direction = Direction::flag_below;
  double threshold = 0.0;

  int predict(double value) const {
    return direction == Direction::flag_below ? (value <= threshold ? 1 : 0) : (value >= threshold ? 1 : 0);
  }

  std::vector<int> predict(std::span<const double> values) const {
    std::vector<int> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(predict(v));
    return out;
  }
};

struct CurvePoint {
  double threshold = 0.0;
  double f05 = 0.0;
};

struct GridSearchResult {
  ThresholdDetector detector;
  double f05 = 0.0;
  std::vector<CurvePoint> curve;
};

/// Evaluates `grid` evenly spaced quantiles of the feature and keeps the
/// threshold with the highest F0.5; ties go to the smallest threshold.
inline GridSearchResult grid_search_threshold(std::span<const double> values, std::span<const int> labels,
                                              const std::string& feature_name, Direction direction,
                                              std::size_t grid = 100) {
  if (values.size() != labels.size()) throw ArgumentError("grid_search_threshold: length mismatch");
  if (!is_feature_name(feature_name)) throw ArgumentError("unknown feature '" + feature_name + "'");
  if (grid < 1) throw ArgumentError("grid_search_threshold: grid must be >= 1");
  bool has_pos = false;
  bool has_neg = false;
  for (int l : labels) (l == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw ArgumentError("grid_search_threshold: labels contain a single class");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> thresholds;
  thresholds.reserve(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    const double q = grid == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(grid - 1);
    thresholds.push_back(stats::quantile_sorted(sorted, q));
  }

  GridSearchResult result;
  result.detector = {feature_name, direction, thresholds.front()};
  result.f05 = -1.0;
  for (double t : thresholds) {
    ThresholdDetector d{feature_name, direction, t};
    const double f = f05_score(d.predict(values), labels);
    result.curve.push_back({t, f});
    if (f > result.f05 || (f == result.f05 && t < result.detector.threshold)) {
      result.f05 = f;
      result.detector = d;
    }
  }
  return result;
}

inline ordered_json to_json(const ThresholdDetector& d) {
  ordered_json j;
  j["algorithm"] = "threshold";
  j["feature_name"] = d.feature_name;
  j["direction"] = to_string(d.direction);
  j["threshold"] = d.threshold;
  return j;
}

}  // namespace lingad

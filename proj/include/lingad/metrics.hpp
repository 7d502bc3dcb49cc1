#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "lingad/error.hpp"

namespace lingad {

/// F-beta from precision and recall; 0 when both are 0. beta = 0.5 weighs
/// precision twice as much as recall.
inline double f_beta(double precision, double recall, double beta = 0.5) {
  const double b2 = beta * beta;
  const double denom = b2 * precision + recall;
  if (denom <= 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / denom;
}

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t n() const { return tp + fp + fn + tn; }
  double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
  double f05() const { return f_beta(precision(), recall(), 0.5); }

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
};

inline Confusion confusion(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw ArgumentError("confusion: predictions and labels differ in length");
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (labels[i] != 0 && labels[i] != 1)) {
      throw ArgumentError("confusion: values must be 0 or 1");
    }
    if (preds[i] == 1) {
      labels[i] == 1 ? ++c.tp : ++c.fp;
    } else {
      labels[i] == 1 ? ++c.fn : ++c.tn;
    }
  }
  return c;
}

inline double f05_score(std::span<const int> preds, std::span<const int> labels) {
  return confusion(preds, labels).f05();
}

using BinaryMetric = std::function<double(std::span<const int>, std::span<const int>)>;

}  // namespace lingad

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "lingad/detectors/abod.hpp"
#include "lingad/detectors/iforest.hpp"
#include "lingad/detectors/kde.hpp"
#include "lingad/parallel.hpp"
#include "lingad/stats.hpp"

namespace lingad {

enum class OutlierAlgorithm { kde, iforest, abod };

inline const char* to_string(OutlierAlgorithm a) {
  switch (a) {
    case OutlierAlgorithm::kde: return "kde";
    case OutlierAlgorithm::iforest: return "iforest";
    case OutlierAlgorithm::abod: return "abod";
  }
  return "?";
}

inline OutlierAlgorithm outlier_algorithm_from_name(std::string_view name) {
  if (name == "kde") return OutlierAlgorithm::kde;
  if (name == "iforest") return OutlierAlgorithm::iforest;
  if (name == "abod") return OutlierAlgorithm::abod;
  throw ArgumentError("unknown outlier algorithm '" + std::string(name) + "'");
}

/// Score above which a fraction `contamination` of training scores lies.
inline double threshold_by_contamination(std::vector<double> scores, double contamination) {
  if (scores.empty()) throw ArgumentError("threshold_by_contamination: no scores");
  if (!(contamination > 0.0 && contamination <= 0.5)) {
    throw ArgumentError("contamination must be in (0, 0.5]");
  }
  return stats::quantile(std::move(scores), 1.0 - contamination);
}

struct OutlierOptions {
  double contamination = 0.1;
  std::size_t n_trees = 100;
  std::size_t subsample = 256;
  std::size_t abod_neighbors = 0;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct OutlierModel {
  OutlierAlgorithm algorithm = OutlierAlgorithm::kde;
  double contamination = 0.1;
  double score_threshold = 0.0;
  std::variant<KdeModel, IsolationForest, AbodModel> fitted;

  double score(std::span<const double> v) const {
    return std::visit([&](const auto& m) { return m.score(v); }, fitted);
  }

  int predict(std::span<const double> v) const { return score(v) > score_threshold ? 1 : 0; }

  std::vector<double> score_all(const Matrix& vectors, unsigned jobs = 1) const {
    std::vector<double> out(vectors.size());
    parallel_for(vectors.size(), jobs, [&](std::size_t i) { out[i] = score(vectors[i]); });
    return out;
  }
};

struct FittedOutlier {
  OutlierModel model;
  std::vector<double> training_scores;
};

/// Fits the detector and places the decision threshold at the (1 - c)
/// quantile of training scores. ABOD training scores are leave-one-out.
inline FittedOutlier fit_outlier(const Matrix& vectors, OutlierAlgorithm algorithm, const OutlierOptions& options) {
  if (!(options.contamination > 0.0 && options.contamination <= 0.5)) {
    throw ArgumentError("contamination must be in (0, 0.5]");
  }
  FittedOutlier out;
  out.model.algorithm = algorithm;
  out.model.contamination = options.contamination;
  out.training_scores.resize(vectors.size());
  switch (algorithm) {
    case OutlierAlgorithm::kde:
      out.model.fitted = kde_fit(vectors);
      out.training_scores = out.model.score_all(vectors, options.jobs);
      break;
    case OutlierAlgorithm::iforest:
      out.model.fitted = iforest_fit(vectors, options.n_trees, options.subsample, options.seed, options.jobs);
      out.training_scores = out.model.score_all(vectors, options.jobs);
      break;
    case OutlierAlgorithm::abod: {
      auto abod = abod_fit(vectors, options.abod_neighbors);
      parallel_for(vectors.size(), options.jobs, [&](std::size_t i) {
        out.training_scores[i] = abod_score(abod.references, vectors[i], i, abod.neighbors);
      });
      out.model.fitted = std::move(abod);
      break;
    }
  }
  out.model.score_threshold = threshold_by_contamination(out.training_scores, options.contamination);
  return out;
}

inline ordered_json to_json(const OutlierModel& m) {
  ordered_json j;
  j["algorithm"] = to_string(m.algorithm);
  j["contamination"] = m.contamination;
  j["score_threshold"] = m.score_threshold;
  j["parameters"] = std::visit([](const auto& f) { return to_json(f); }, m.fitted);
  return j;
}

inline OutlierModel outlier_model_from_json(const json& j) {
  OutlierModel m;
  try {
    m.algorithm = outlier_algorithm_from_name(j.at("algorithm").get<std::string>());
    m.contamination = j.at("contamination").get<double>();
    m.score_threshold = j.at("score_threshold").get<double>();
    const auto& p = j.at("parameters");
    switch (m.algorithm) {
      case OutlierAlgorithm::kde: m.fitted = kde_from_json(p); break;
      case OutlierAlgorithm::iforest: m.fitted = iforest_from_json(p); break;
      case OutlierAlgorithm::abod: m.fitted = abod_from_json(p); break;
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed outlier model: ") + e.what());
  } catch (const ArgumentError& e) {
    throw DataError(std::string("malformed outlier model: ") + e.what());
  }
  return m;
}

}  // namespace lingad

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "lingad/detectors/vectors.hpp"
#include "lingad/jsonl.hpp"
#include "lingad/parallel.hpp"
#include "lingad/rng.hpp"

namespace lingad {

/// Average path length of an unsuccessful search in a binary search tree of n items.
inline double average_path_length(double n) {
  if (n <= 1.0) return 0.0;
  if (n <= 2.0) return 1.0;
  constexpr double kEulerGamma = 0.5772156649015329;
  return 2.0 * (std::log(n - 1.0) + kEulerGamma) - 2.0 * (n - 1.0) / n;
}

struct IsolationNode {
  int feature = -1;  // -1 marks a leaf
  double split = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t size = 0;  // training points that reached a leaf
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;

  double path_length(std::span<const double> v) const {
    std::size_t i = 0;
    double depth = 0.0;
    while (nodes[i].feature >= 0) {
      const auto& n = nodes[i];
      i = v[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right;
      depth += 1.0;
    }
    return depth + average_path_length(nodes[i].size);
  }
};

struct IsolationForest {
  std::size_t dimension = 0;
  std::size_t subsample = 0;  // effective psi
  std::vector<IsolationTree> trees;

  /// 2^(-E[h(v)] / c(psi)), in (0, 1); higher means more anomalous.
  double score(std::span<const double> v) const {
    if (v.size() != dimension) throw ArgumentError("iforest score: dimension mismatch");
    double total = 0.0;
    for (const auto& t : trees) total += t.path_length(v);
    const double mean = total / static_cast<double>(trees.size());
    const double c = average_path_length(static_cast<double>(subsample));
    if (c <= 0.0) return 0.5;
    return std::exp2(-mean / c);
  }
};

namespace detail {

inline void grow_isolation_tree(IsolationTree& tree, const Matrix& data, std::vector<std::size_t> rows,
                                std::size_t depth, std::size_t height_limit, Rng& rng) {
  const std::size_t self = tree.nodes.size();
  tree.nodes.emplace_back();
  const std::size_t d = data.front().size();
  std::vector<std::size_t> candidates;
  std::vector<double> lo(d);
  std::vector<double> hi(d);
  if (depth < height_limit && rows.size() > 1) {
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = hi[j] = data[rows.front()][j];
      for (std::size_t r : rows) {
        lo[j] = std::min(lo[j], data[r][j]);
        hi[j] = std::max(hi[j], data[r][j]);
      }
      if (hi[j] > lo[j]) candidates.push_back(j);
    }
  }
  if (candidates.empty()) {
    tree.nodes[self].size = static_cast<std::uint32_t>(rows.size());
    return;
  }
  const std::size_t f = candidates[rng.index(candidates.size())];
  const double split = rng.uniform(lo[f], hi[f]);
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  for (std::size_t r : rows) (data[r][f] < split ? left : right).push_back(r);
  rows.clear();
  rows.shrink_to_fit();
  tree.nodes[self].feature = static_cast<int>(f);
  tree.nodes[self].split = split;
  tree.nodes[self].left = static_cast<std::uint32_t>(tree.nodes.size());
  grow_isolation_tree(tree, data, std::move(left), depth + 1, height_limit, rng);
  tree.nodes[self].right = static_cast<std::uint32_t>(tree.nodes.size());
  grow_isolation_tree(tree, data, std::move(right), depth + 1, height_limit, rng);
}

}  // namespace detail

/// Tree t draws from stream (seed, t), so the forest does not depend on `jobs`.
inline IsolationForest iforest_fit(const Matrix& vectors, std::size_t n_trees = 100, std::size_t subsample = 256,
                                   std::uint64_t seed = 0, unsigned jobs = 1) {
  const std::size_t d = checked_dimension(vectors, 2, "iforest_fit");
  if (n_trees < 1) throw ArgumentError("iforest_fit: n_trees must be >= 1");
  if (subsample < 2) throw ArgumentError("iforest_fit: subsample must be >= 2");
  IsolationForest forest;
  forest.dimension = d;
  forest.subsample = std::min(subsample, vectors.size());
  forest.trees.resize(n_trees);
  const auto height_limit =
      static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(forest.subsample))));
  parallel_for(n_trees, jobs, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> all(vectors.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    // Partial Fisher-Yates: the first psi entries are a uniform sample without replacement.
    for (std::size_t i = 0; i < forest.subsample; ++i) {
      std::swap(all[i], all[i + rng.index(all.size() - i)]);
    }
    all.resize(forest.subsample);
    detail::grow_isolation_tree(forest.trees[t], vectors, std::move(all), 0, height_limit, rng);
  });
  return forest;
}

inline double iforest_score(const IsolationForest& model, std::span<const double> v) { return model.score(v); }

inline ordered_json to_json(const IsolationForest& f) {
  ordered_json j;
  j["dimension"] = f.dimension;
  j["subsample"] = f.subsample;
  ordered_json trees = ordered_json::array();
  for (const auto& t : f.trees) {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.split, n.left, n.right, n.size});
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j;
}

inline IsolationForest iforest_from_json(const json& j) {
  IsolationForest f;
  f.dimension = j.at("dimension").get<std::size_t>();
  f.subsample = j.at("subsample").get<std::size_t>();
  for (const auto& t : j.at("trees")) {
    IsolationTree tree;
    for (const auto& n : t) {
      tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<std::uint32_t>(),
                            n.at(3).get<std::uint32_t>(), n.at(4).get<std::uint32_t>()});
    }
    if (tree.nodes.empty()) throw DataError("iforest: empty tree in model file");
    f.trees.push_back(std::move(tree));
  }
  if (f.trees.empty()) throw DataError("iforest: model has no trees");
  return f;
}

}  // namespace lingad

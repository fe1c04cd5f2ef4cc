#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mofit/learners/tree.hpp"

namespace mofit::learners {

/// Random forest = bootstrap + exact-greedy splits; extra trees = full training set +
/// random thresholds. Both are expressed through the same two switches.
struct ForestParams {
  TreeParams tree;
  std::size_t n_trees = 100;
  bool bootstrap = true;
  std::size_t n_threads = 1;  // execution only; never affects the fitted model

  static ForestParams random_forest(std::size_t n_trees, TreeParams tree = {});
  static ForestParams extra_trees(std::size_t n_trees, TreeParams tree = {});

  bool operator==(const ForestParams& o) const {
    return tree == o.tree && n_trees == o.n_trees && bootstrap == o.bootstrap;
  }
};

class ForestModel {
 public:
  Task task = Task::regression;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  ForestParams params;
  std::vector<TreeModel> trees;

  /// Classification averages the trees' probability vectors; regression averages values.
  Prediction predict(std::span<const double> row) const;
  bool operator==(const ForestModel&) const = default;
};

ForestModel fit_forest(const EncodedDataset& train, const ForestParams& params);

/// Fits tree `index` of the ensemble in isolation. Every tree draws from its own
/// stream derived from (seed, index), so fit_forest is this function mapped over
/// 0..n_trees-1 in any order.
TreeModel fit_forest_member(const EncodedDataset& train, const SortedColumns& sorted, const ForestParams& params,
                            std::size_t index);

}  // namespace mofit::learners

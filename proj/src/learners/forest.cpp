#include "mofit/learners/forest.hpp"

#include "mofit/parallel.hpp"

namespace mofit::learners {

ForestParams ForestParams::random_forest(std::size_t n_trees, TreeParams tree) {
  tree.split_mode = SplitMode::exact_greedy;
  return ForestParams{.tree = tree, .n_trees = n_trees, .bootstrap = true};
}

ForestParams ForestParams::extra_trees(std::size_t n_trees, TreeParams tree) {
  tree.split_mode = SplitMode::random_threshold;
  return ForestParams{.tree = tree, .n_trees = n_trees, .bootstrap = false};
}

Prediction ForestModel::predict(std::span<const double> row) const {
  check_row(row, n_features);
  Prediction out;
  if (task == Task::classification) {
    out.proba.assign(n_classes, 0.0);
    for (const auto& tree : trees) {
      const auto& leaf = tree.leaf_value(row);
      for (std::size_t k = 0; k < n_classes; ++k) out.proba[k] += leaf[k];
    }
    for (auto& p : out.proba) p /= static_cast<double>(trees.size());
    out.label = argmax(out.proba);
  } else {
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.leaf_value(row).front();
    out.value = sum / static_cast<double>(trees.size());
  }
  return out;
}

TreeModel fit_forest_member(const EncodedDataset& train, const SortedColumns& sorted, const ForestParams& params,
                            std::size_t index) {
  Rng rng(derive_seed(params.tree.seed, index));
  std::vector<double> weights(train.size(), params.bootstrap ? 0.0 : 1.0);
  if (params.bootstrap) {
    for (std::size_t i = 0; i < train.size(); ++i) weights[rng.index(train.size())] += 1.0;
  }
  return detail::grow_cart(train, sorted, weights, params.tree, rng);
}

ForestModel fit_forest(const EncodedDataset& train, const ForestParams& params) {
  if (params.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  if (train.size() == 0) throw std::invalid_argument("cannot fit a forest on an empty dataset");
  params.tree.validate();

  const auto sorted = SortedColumns::build(train.X);
  ForestModel model;
  model.task = task_of(train);
  model.n_features = train.X.cols;
  model.n_classes = train.target.n_classes();
  model.params = params;
  model.trees.resize(params.n_trees);
  parallel_for(params.n_trees, params.n_threads,
               [&](std::size_t i) { model.trees[i] = fit_forest_member(train, sorted, params, i); });
  return model;
}

}  // namespace mofit::learners

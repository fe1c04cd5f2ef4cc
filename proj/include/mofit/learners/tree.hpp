#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mofit/learners/common.hpp"
#include "mofit/rng.hpp"

namespace mofit::learners {

struct MaxFeatures {
  enum class Kind { all, sqrt, fraction };
  Kind kind = Kind::all;
  double fraction = 1.0;

  static MaxFeatures all() { return {}; }
  static MaxFeatures sqrt() { return {Kind::sqrt, 1.0}; }
  static MaxFeatures of(double fraction) { return {Kind::fraction, fraction}; }

  /// Number of candidate features per node, at least 1.
  std::size_t resolve(std::size_t n_features) const;
  bool operator==(const MaxFeatures&) const = default;
};

enum class SplitMode { exact_greedy, random_threshold };

struct TreeParams {
  std::optional<int> max_depth;  // nullopt = unlimited
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  MaxFeatures max_features;
  SplitMode split_mode = SplitMode::exact_greedy;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TreeParams&) const = default;
};

/// Internal nodes route `x[feature] <= threshold` to `left`. Leaves hold the class
/// distribution (classification) or a single value (regression, boosting).
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<double> value;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class TreeModel {
 public:
  Task task = Task::regression;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const std::vector<double>& leaf_value(std::span<const double> row) const;
  Prediction predict(std::span<const double> row) const;

  std::size_t depth() const;
  std::size_t internal_count() const;
  bool operator==(const TreeModel&) const = default;
};

TreeModel fit_tree(const EncodedDataset& train, const TreeParams& params);

namespace detail {

/// CART growth on weighted rows (weight = bootstrap multiplicity; zero excludes a row).
TreeModel grow_cart(const EncodedDataset& train, const SortedColumns& sorted, std::span<const double> weights,
                    const TreeParams& params, Rng& rng);

}  // namespace detail

}  // namespace mofit::learners

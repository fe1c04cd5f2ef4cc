#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "mofit/dataset.hpp"
#include "mofit/hpo/space.hpp"
#include "mofit/hpo/study.hpp"
#include "mofit/learners/model.hpp"

namespace mofit::hpo {

enum class Algorithm { decision_tree, random_forest, extra_trees, knn, gbm };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::decision_tree, Algorithm::random_forest,
                                               Algorithm::extra_trees, Algorithm::knn, Algorithm::gbm};

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

/// Default search space with grid points chosen so each grid has close to 50 points.
SearchSpace default_space(Algorithm a);

/// Fits `a` with hyperparameters `p`. Learner randomness comes from `seed`.
learners::Model fit_algorithm(Algorithm a, const Params& p, const EncodedDataset& train, std::uint64_t seed,
                              std::size_t n_threads = 1);

/// Accuracy for classification (maximize), RMSE for regression (minimize).
Direction direction_for(const EncodedDataset& ds);
double score(const EncodedDataset& ds, std::span<const double> predicted);

struct FoldError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Positions of each validation fold. Classification folds are stratified: each
/// class is shuffled and dealt round-robin, so every fold sees every class.
std::vector<std::vector<std::size_t>> make_folds(const EncodedDataset& ds, std::size_t k, std::uint64_t seed);

/// Called with the row_ids of every dataset a fit or evaluation touches.
using RowObserver = std::function<void(std::span<const std::size_t> row_ids)>;

/// Mean k-fold validation score on `train`. Folds are fixed at construction so every
/// sampler scores against the same partition.
class CvObjective {
 public:
  CvObjective(Algorithm algorithm, EncodedDataset train, std::size_t k_folds, std::uint64_t seed,
              RowObserver observer = {});

  double operator()(const Params& p) const;
  Direction direction() const { return direction_; }
  const std::vector<std::vector<std::size_t>>& folds() const { return folds_; }

 private:
  Algorithm algorithm_;
  EncodedDataset train_;
  std::uint64_t seed_;
  Direction direction_;
  std::vector<std::vector<std::size_t>> folds_;
  std::vector<EncodedDataset> fit_parts_;
  std::vector<EncodedDataset> eval_parts_;
  RowObserver observer_;
};

}  // namespace mofit::hpo

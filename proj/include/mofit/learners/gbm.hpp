#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mofit/learners/tree.hpp"

namespace mofit::learners {

/// Second-order gradient boosting with L2-regularized leaf weights.
struct GbmParams {
  std::size_t n_rounds = 100;
  double learning_rate = 0.1;
  double lambda = 1.0;
  std::optional<int> max_depth = 6;
  double min_child_weight = 1.0;
  double subsample = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const GbmParams&) const = default;
};

class GbmModel {
 public:
  Task task = Task::regression;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  GbmParams params;
  std::vector<double> base_score;             // 1 entry (regression) or K log-priors
  std::vector<std::vector<TreeModel>> rounds;  // per round: 1 tree or K trees

  /// Additive raw scores before the link (identity / softmax).
  std::vector<double> raw_scores(std::span<const double> row) const;
  Prediction predict(std::span<const double> row) const;
  bool operator==(const GbmModel&) const = default;
};

GbmModel fit_gbm(const EncodedDataset& train, const GbmParams& params);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> scores);

}  // namespace mofit::learners

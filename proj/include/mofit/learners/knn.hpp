#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mofit/learners/common.hpp"

namespace mofit::learners {

enum class Weighting { uniform, inverse_distance };

struct KnnParams {
  std::size_t k = 5;
  Weighting weighting = Weighting::uniform;
  bool operator==(const KnnParams&) const = default;
};

/// Euclidean k-nearest-neighbours over z-scored features. Features with zero
/// training variance are mapped to 0 and drop out of the distance.
class KnnModel {
 public:
  Task task = Task::regression;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  KnnParams params;
  std::vector<double> mean;
  std::vector<double> stddev;
  Matrix train;  // standardized
  std::vector<double> targets;

  std::vector<double> standardize(std::span<const double> row) const;
  /// Positions of the k nearest training rows, nearest first (ties: lower row index).
  std::vector<std::pair<double, std::size_t>> neighbors(std::span<const double> row) const;
  Prediction predict(std::span<const double> row) const;
  bool operator==(const KnnModel&) const = default;
};

KnnModel fit_knn(const EncodedDataset& train, const KnnParams& params);

}  // namespace mofit::learners

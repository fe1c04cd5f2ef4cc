#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mofit/dataset.hpp"

namespace mofit::learners {

enum class Task { classification, regression };

inline Task task_of(const EncodedDataset& ds) {
  return ds.target.is_classification() ? Task::classification : Task::regression;
}

/// Uniform prediction result. Classification fills `label` and `proba`;
/// regression fills `value` only.
struct Prediction {
  std::size_t label = 0;
  std::vector<double> proba;
  double value = 0.0;

  /// Class index as a double for classification, the real value otherwise.
  double scalar(Task task) const { return task == Task::classification ? static_cast<double>(label) : value; }
};

inline void check_row(std::span<const double> row, std::size_t n_features) {
  if (row.size() != n_features) {
    throw std::invalid_argument("dimension mismatch: model expects " + std::to_string(n_features) +
                                " features, row has " + std::to_string(row.size()));
  }
}

/// Index of the largest entry; the lowest index wins ties.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

/// Row indices of a matrix ordered by each column's value (ties by row index).
/// Computed once per fit and shared by every tree grown on that matrix.
struct SortedColumns {
  std::vector<std::vector<std::uint32_t>> order;  // [feature][rank] -> row
  std::vector<std::vector<double>> values;        // [feature][row], column-major copy of X

  static SortedColumns build(const Matrix& X);
};

}  // namespace mofit::learners

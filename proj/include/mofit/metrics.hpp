#pragma once

#include <cstddef>
#include <span>

namespace mofit::metrics {

/// Fraction of positions where `pred` equals `truth`.
double accuracy(std::span<const double> truth, std::span<const double> pred);

double rmse(std::span<const double> actual, std::span<const double> predicted);
double mae(std::span<const double> actual, std::span<const double> predicted);

/// Mean absolute percentage error as a fraction (0.021, not 2.1). Throws when any
/// actual value is zero.
double mape(std::span<const double> actual, std::span<const double> predicted);

enum class Task { classification, regression };

struct Report {
  Task task = Task::classification;
  double accuracy = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;
  std::size_t n = 0;
};

Report classification_report(std::span<const double> truth, std::span<const double> pred);
Report regression_report(std::span<const double> actual, std::span<const double> predicted);

}  // namespace mofit::metrics

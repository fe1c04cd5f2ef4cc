#include "mofit/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mofit::metrics {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.empty()) throw std::invalid_argument("empty input");
}

}  // namespace

double accuracy(std::span<const double> truth, std::span<const double> pred) {
  check_pair(truth, pred);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = actual[i] - predicted[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(actual.size()));
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) sum += std::abs(actual[i] - predicted[i]);
  return sum / static_cast<double>(actual.size());
}

double mape(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) throw std::domain_error("mape undefined: actual value is zero at index " + std::to_string(i));
    sum += std::abs(actual[i] - predicted[i]) / std::abs(actual[i]);
  }
  return sum / static_cast<double>(actual.size());
}

Report classification_report(std::span<const double> truth, std::span<const double> pred) {
  Report r;
  r.task = Task::classification;
  r.accuracy = accuracy(truth, pred);
  r.n = truth.size();
  return r;
}

Report regression_report(std::span<const double> actual, std::span<const double> predicted) {
  Report r;
  r.task = Task::regression;
  r.rmse = rmse(actual, predicted);
  r.mae = mae(actual, predicted);
  r.mape = mape(actual, predicted);
  r.n = actual.size();
  return r;
}

}  // namespace mofit::metrics

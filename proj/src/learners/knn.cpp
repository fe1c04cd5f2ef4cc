#include "mofit/learners/knn.hpp"

#include <algorithm>
#include <cmath>

namespace mofit::learners {

KnnModel fit_knn(const EncodedDataset& train, const KnnParams& params) {
  const std::size_t n = train.size();
  if (n == 0) throw std::invalid_argument("cannot fit knn on an empty dataset");
  if (params.k < 1) throw std::invalid_argument("k must be >= 1");
  if (params.k > n) {
    throw std::invalid_argument("k = " + std::to_string(params.k) + " exceeds training size " + std::to_string(n));
  }
  KnnModel model;
  model.task = task_of(train);
  model.n_features = train.X.cols;
  model.n_classes = train.target.n_classes();
  model.params = params;
  model.mean.assign(model.n_features, 0.0);
  model.stddev.assign(model.n_features, 0.0);
  for (std::size_t f = 0; f < model.n_features; ++f) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += train.X(r, f);
    const double mu = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) ss += (train.X(r, f) - mu) * (train.X(r, f) - mu);
    model.mean[f] = mu;
    model.stddev[f] = std::sqrt(ss / static_cast<double>(n));
  }
  model.train = Matrix(n, model.n_features);
  for (std::size_t r = 0; r < n; ++r) {
    const auto z = model.standardize(train.X.row(r));
    std::copy(z.begin(), z.end(), model.train.row(r).begin());
  }
  model.targets = train.y;
  return model;
}

std::vector<double> KnnModel::standardize(std::span<const double> row) const {
  std::vector<double> z(row.size());
  for (std::size_t f = 0; f < row.size(); ++f) z[f] = stddev[f] > 0.0 ? (row[f] - mean[f]) / stddev[f] : 0.0;
  return z;
}

std::vector<std::pair<double, std::size_t>> KnnModel::neighbors(std::span<const double> row) const {
  check_row(row, n_features);
  const auto z = standardize(row);
  std::vector<std::pair<double, std::size_t>> dist(train.rows);
  for (std::size_t r = 0; r < train.rows; ++r) {
    const auto t = train.row(r);
    double d = 0.0;
    for (std::size_t f = 0; f < n_features; ++f) d += (t[f] - z[f]) * (t[f] - z[f]);
    dist[r] = {d, r};
  }
  const auto k = static_cast<std::ptrdiff_t>(params.k);
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  dist.resize(params.k);
  for (auto& [d, _] : dist) d = std::sqrt(d);
  return dist;
}

Prediction KnnModel::predict(std::span<const double> row) const {
  const auto nn = neighbors(row);
  std::vector<double> weights(nn.size(), 1.0);
  if (params.weighting == Weighting::inverse_distance) {
    const bool exact = std::any_of(nn.begin(), nn.end(), [](const auto& p) { return p.first == 0.0; });
    for (std::size_t i = 0; i < nn.size(); ++i) {
      weights[i] = exact ? (nn[i].first == 0.0 ? 1.0 : 0.0) : 1.0 / nn[i].first;
    }
  }
  double total = 0.0;
  for (double w : weights) total += w;

  Prediction p;
  if (task == Task::classification) {
    p.proba.assign(n_classes, 0.0);
    for (std::size_t i = 0; i < nn.size(); ++i) p.proba[static_cast<std::size_t>(targets[nn[i].second])] += weights[i];
    for (auto& v : p.proba) v /= total;
    p.label = argmax(p.proba);
  } else {
    double sum = 0.0;
    for (std::size_t i = 0; i < nn.size(); ++i) sum += weights[i] * targets[nn[i].second];
    p.value = sum / total;
  }
  return p;
}

}  // namespace mofit::learners

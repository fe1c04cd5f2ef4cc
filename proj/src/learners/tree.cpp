#include "mofit/learners/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mofit::learners {

SortedColumns SortedColumns::build(const Matrix& X) {
  SortedColumns sc;
  sc.order.resize(X.cols);
  sc.values.resize(X.cols);
  for (std::size_t f = 0; f < X.cols; ++f) {
    auto& column = sc.values[f];
    column.resize(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) column[r] = X(r, f);
    auto& ord = sc.order[f];
    ord.resize(X.rows);
    std::iota(ord.begin(), ord.end(), 0U);
    std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) { return column[a] < column[b]; });
  }
  return sc;
}

std::size_t MaxFeatures::resolve(std::size_t n_features) const {
  std::size_t m = n_features;
  switch (kind) {
    case Kind::all: m = n_features; break;
    case Kind::sqrt: m = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features)))); break;
    case Kind::fraction: m = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n_features))); break;
  }
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(n_features, 1));
}

void TreeParams::validate() const {
  if (max_depth && *max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
  if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
  if (max_features.kind == MaxFeatures::Kind::fraction && !(max_features.fraction > 0.0 && max_features.fraction <= 1.0)) {
    throw std::invalid_argument("max_features fraction must be in (0, 1]");
  }
}

const std::vector<double>& TreeModel::leaf_value(std::span<const double> row) const {
  check_row(row, n_features);
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& node = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return nodes[i].value;
}

Prediction TreeModel::predict(std::span<const double> row) const {
  const auto& v = leaf_value(row);
  Prediction p;
  if (task == Task::classification) {
    p.proba = v;
    p.label = argmax(v);
  } else {
    p.value = v.front();
  }
  return p;
}

std::size_t TreeModel::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return deepest;
}

std::size_t TreeModel::internal_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

namespace detail {

namespace {

using Rows = std::vector<std::uint32_t>;

struct Candidate {
  bool found = false;
  double gain = -std::numeric_limits<double>::infinity();
  std::size_t feature = 0;
  double threshold = 0.0;

  void offer(double g, std::size_t f, double t) {
    if (!found || g > gain || (g == gain && (f < feature || (f == feature && t < threshold)))) {
      found = true;
      gain = g;
      feature = f;
      threshold = t;
    }
  }
};

double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m < b ? m : a;
}

// Nodes own a [begin, end) range of `rows_` and, in exact mode, of each per-feature
// sorted buffer. Splits partition every range stably in place.
class CartBuilder {
 public:
  CartBuilder(const EncodedDataset& train, const SortedColumns& sorted, std::span<const double> weights,
              const TreeParams& params, Rng& rng)
      : columns_(sorted.values),
        y_(train.y),
        w_(weights),
        task_(task_of(train)),
        n_classes_(train.target.n_classes()),
        params_(params),
        rng_(rng),
        n_features_(train.X.cols),
        mtry_(params.max_features.resolve(train.X.cols)),
        max_depth_(params.max_depth ? static_cast<std::size_t>(*params.max_depth)
                                    : std::numeric_limits<std::size_t>::max()),
        exact_(params.split_mode == SplitMode::exact_greedy),
        goes_left_(train.X.rows, 0),
        feature_order_(train.X.cols) {
    for (std::uint32_t r = 0; r < train.X.rows; ++r) {
      if (w_[r] > 0.0) rows_.push_back(r);
    }
    if (exact_) {
      sorted_.resize(n_features_);
      for (std::size_t f = 0; f < n_features_; ++f) {
        sorted_[f].reserve(rows_.size());
        for (auto r : sorted.order[f]) {
          if (w_[r] > 0.0) sorted_[f].push_back(r);
        }
      }
    }
    scratch_.resize(rows_.size());
    totals_.resize(std::max<std::size_t>(n_classes_, 1));
    left_.resize(totals_.size());
  }

  std::vector<TreeNode> run() {
    build(0, rows_.size(), 0);
    return std::move(nodes_);
  }

 private:
  struct NodeStats {
    double weight = 0.0;
    double sum = 0.0;            // regression: weighted sum of targets
    double sum_sq_counts = 0.0;  // classification: sum over classes of count^2
    bool pure = true;
  };

  std::int32_t build(std::size_t begin, std::size_t end, std::size_t depth) {
    const NodeStats stats = summarize(begin, end);
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(TreeNode{.value = leaf_value(stats)});

    if (n_features_ == 0 || depth >= max_depth_ || stats.weight < static_cast<double>(params_.min_samples_split) ||
        stats.pure) {
      return index;
    }
    const Candidate best = find_split(begin, end, stats);
    if (!best.found) return index;

    const auto& col = columns_[best.feature];
    std::size_t n_left = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = rows_[i];
      goes_left_[r] = col[r] <= best.threshold ? 1 : 0;
      n_left += goes_left_[r];
    }
    partition(rows_, begin, end);
    for (auto& list : sorted_) partition(list, begin, end);

    const std::size_t mid = begin + n_left;
    const auto l = build(begin, mid, depth + 1);
    const auto r = build(mid, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = static_cast<std::int32_t>(best.feature);
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    node.value.clear();
    return index;
  }

  void partition(Rows& list, std::size_t begin, std::size_t end) {
    std::size_t out = begin, spill = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = list[i];
      if (goes_left_[r]) {
        list[out++] = r;
      } else {
        scratch_[spill++] = r;
      }
    }
    std::copy_n(scratch_.begin(), spill, list.begin() + static_cast<std::ptrdiff_t>(out));
  }

  NodeStats summarize(std::size_t begin, std::size_t end) {
    NodeStats s;
    std::fill(totals_.begin(), totals_.end(), 0.0);
    if (task_ == Task::classification) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto r = rows_[i];
        totals_[static_cast<std::size_t>(y_[r])] += w_[r];
        s.weight += w_[r];
      }
      std::size_t nonzero = 0;
      for (double c : totals_) {
        s.sum_sq_counts += c * c;
        nonzero += c > 0.0 ? 1 : 0;
      }
      s.pure = nonzero <= 1;
    } else {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = begin; i < end; ++i) {
        const auto r = rows_[i];
        s.weight += w_[r];
        s.sum += w_[r] * y_[r];
        lo = std::min(lo, y_[r]);
        hi = std::max(hi, y_[r]);
      }
      s.pure = !(lo < hi);
    }
    return s;
  }

  std::vector<double> leaf_value(const NodeStats& s) const {
    if (task_ == Task::classification) {
      std::vector<double> proba(n_classes_, 0.0);
      if (s.weight > 0.0) {
        for (std::size_t k = 0; k < n_classes_; ++k) proba[k] = totals_[k] / s.weight;
      }
      return proba;
    }
    return {s.weight > 0.0 ? s.sum / s.weight : 0.0};
  }

  Candidate find_split(std::size_t begin, std::size_t end, const NodeStats& stats) {
    Candidate best;
    const bool shuffle = mtry_ < n_features_ || !exact_;
    if (shuffle) {
      std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
      rng_.shuffle(std::span(feature_order_));
    }
    std::size_t visited = 0;
    for (std::size_t i = 0; i < n_features_ && visited < mtry_; ++i) {
      const std::size_t f = shuffle ? feature_order_[i] : i;
      const auto& col = columns_[f];
      double lo, hi;
      if (exact_) {
        lo = col[sorted_[f][begin]];
        hi = col[sorted_[f][end - 1]];
      } else {
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (std::size_t j = begin; j < end; ++j) {
          const double x = col[rows_[j]];
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
      }
      if (!(lo < hi)) continue;  // constant in this node
      ++visited;
      if (exact_) {
        scan_exact(f, begin, end, stats, best);
      } else {
        evaluate_threshold(f, begin, end, stats, rng_.uniform(lo, hi), best);
      }
    }
    return best;
  }

  static double gain_classification(double wl, double sql, double wr, double sqr, const NodeStats& s) {
    return sql / wl + sqr / wr - s.sum_sq_counts / s.weight;
  }

  void scan_exact(std::size_t f, std::size_t begin, std::size_t end, const NodeStats& stats, Candidate& best) {
    const auto& col = columns_[f];
    const auto& list = sorted_[f];
    const double min_leaf = static_cast<double>(params_.min_samples_leaf);
    double wl = 0.0;
    if (task_ == Task::classification) {
      std::fill(left_.begin(), left_.end(), 0.0);
      double sql = 0.0, sqr = stats.sum_sq_counts;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        const auto r = list[i];
        const auto k = static_cast<std::size_t>(y_[r]);
        const double w = w_[r];
        const double cl = left_[k], cr = totals_[k] - cl;
        sql += (cl + w) * (cl + w) - cl * cl;
        sqr += (cr - w) * (cr - w) - cr * cr;
        left_[k] = cl + w;
        wl += w;
        const double x = col[r], next = col[list[i + 1]];
        if (!(x < next)) continue;
        const double wr = stats.weight - wl;
        if (wl < min_leaf || wr < min_leaf) continue;
        best.offer(gain_classification(wl, sql, wr, sqr, stats), f, midpoint(x, next));
      }
    } else {
      double sl = 0.0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        const auto r = list[i];
        wl += w_[r];
        sl += w_[r] * y_[r];
        const double x = col[r], next = col[list[i + 1]];
        if (!(x < next)) continue;
        const double wr = stats.weight - wl;
        if (wl < min_leaf || wr < min_leaf) continue;
        const double sr = stats.sum - sl;
        best.offer(sl * sl / wl + sr * sr / wr - stats.sum * stats.sum / stats.weight, f, midpoint(x, next));
      }
    }
  }

  void evaluate_threshold(std::size_t f, std::size_t begin, std::size_t end, const NodeStats& stats,
                          double threshold, Candidate& best) {
    const auto& col = columns_[f];
    const double min_leaf = static_cast<double>(params_.min_samples_leaf);
    double wl = 0.0;
    if (task_ == Task::classification) {
      std::fill(left_.begin(), left_.end(), 0.0);
      for (std::size_t i = begin; i < end; ++i) {
        const auto r = rows_[i];
        if (col[r] > threshold) continue;
        left_[static_cast<std::size_t>(y_[r])] += w_[r];
        wl += w_[r];
      }
      const double wr = stats.weight - wl;
      if (wl < min_leaf || wr < min_leaf) return;
      double sql = 0.0, sqr = 0.0;
      for (std::size_t k = 0; k < n_classes_; ++k) {
        sql += left_[k] * left_[k];
        const double cr = totals_[k] - left_[k];
        sqr += cr * cr;
      }
      best.offer(gain_classification(wl, sql, wr, sqr, stats), f, threshold);
    } else {
      double sl = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto r = rows_[i];
        if (col[r] > threshold) continue;
        wl += w_[r];
        sl += w_[r] * y_[r];
      }
      const double wr = stats.weight - wl;
      if (wl < min_leaf || wr < min_leaf) return;
      const double sr = stats.sum - sl;
      best.offer(sl * sl / wl + sr * sr / wr - stats.sum * stats.sum / stats.weight, f, threshold);
    }
  }

  const std::vector<std::vector<double>>& columns_;
  const std::vector<double>& y_;
  std::span<const double> w_;
  Task task_;
  std::size_t n_classes_;
  const TreeParams& params_;
  Rng& rng_;
  std::size_t n_features_;
  std::size_t mtry_;
  std::size_t max_depth_;
  bool exact_;
  Rows rows_;
  std::vector<Rows> sorted_;
  Rows scratch_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::size_t> feature_order_;
  std::vector<double> totals_;
  std::vector<double> left_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

TreeModel grow_cart(const EncodedDataset& train, const SortedColumns& sorted, std::span<const double> weights,
                    const TreeParams& params, Rng& rng) {
  params.validate();
  if (train.size() == 0) throw std::invalid_argument("cannot fit a tree on an empty dataset");
  if (weights.size() != train.size()) throw std::invalid_argument("weights must have one entry per row");

  CartBuilder builder(train, sorted, weights, params, rng);
  TreeModel model;
  model.task = task_of(train);
  model.n_features = train.X.cols;
  model.n_classes = train.target.n_classes();
  model.nodes = builder.run();
  return model;
}

}  // namespace detail

TreeModel fit_tree(const EncodedDataset& train, const TreeParams& params) {
  if (train.size() == 0) throw std::invalid_argument("cannot fit a tree on an empty dataset");
  const auto sorted = SortedColumns::build(train.X);
  const std::vector<double> weights(train.size(), 1.0);
  Rng rng(params.seed);
  return detail::grow_cart(train, sorted, weights, params, rng);
}

}  // namespace mofit::learners

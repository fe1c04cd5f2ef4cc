#include "mofit/learners/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mofit::learners {

void GbmParams::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw std::invalid_argument("learning_rate must be in (0, 1]");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(min_child_weight >= 0.0)) throw std::invalid_argument("min_child_weight must be >= 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw std::invalid_argument("subsample must be in (0, 1]");
  if (max_depth && *max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> p(scores.begin(), scores.end());
  const double hi = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (auto& v : p) {
    v = std::exp(v - hi);
    z += v;
  }
  for (auto& v : p) v /= z;
  return p;
}

std::vector<double> GbmModel::raw_scores(std::span<const double> row) const {
  check_row(row, n_features);
  std::vector<double> s = base_score;
  for (const auto& round : rounds) {
    for (std::size_t k = 0; k < round.size(); ++k) s[k] += params.learning_rate * round[k].leaf_value(row).front();
  }
  return s;
}

Prediction GbmModel::predict(std::span<const double> row) const {
  const auto s = raw_scores(row);
  Prediction p;
  if (task == Task::classification) {
    p.proba = softmax(s);
    p.label = argmax(p.proba);
  } else {
    p.value = s.front();
  }
  return p;
}

namespace {

using Rows = std::vector<std::uint32_t>;

// Nodes own a [begin, end) range of every per-feature sorted buffer; splits partition
// each range stably in place.
class GradientTreeBuilder {
 public:
  GradientTreeBuilder(const std::vector<std::vector<double>>& columns, const GbmParams& params)
      : columns_(columns),
        params_(params),
        max_depth_(params.max_depth ? static_cast<std::size_t>(*params.max_depth)
                                    : std::numeric_limits<std::size_t>::max()) {
    if (!columns.empty()) goes_left_.resize(columns.front().size());
  }

  /// `base` holds the in-sample rows sorted by each feature; it is copied, not modified.
  TreeModel grow(const std::vector<Rows>& base, std::span<const double> g, std::span<const double> h) {
    g_ = g;
    h_ = h;
    lists_.resize(base.size());
    for (std::size_t f = 0; f < base.size(); ++f) lists_[f].assign(base[f].begin(), base[f].end());
    scratch_.resize(base.front().size());
    nodes_.clear();
    build(0, base.front().size(), 0);
    TreeModel tree;
    tree.task = Task::regression;
    tree.n_features = base.size();
    tree.nodes = std::move(nodes_);
    return tree;
  }

 private:
  double score(double G, double H) const {
    const double denom = H + params_.lambda;
    return denom > 0.0 ? G * G / denom : 0.0;
  }

  std::int32_t build(std::size_t begin, std::size_t end, std::size_t depth) {
    double G = 0.0, H = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = lists_.front()[i];
      G += g_[r];
      H += h_[r];
    }
    const double denom = H + params_.lambda;
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(TreeNode{.value = {denom > 0.0 ? -G / denom : 0.0}});
    if (depth >= max_depth_ || end - begin < 2) return index;

    bool found = false;
    double best_gain = 0.0, best_threshold = 0.0;
    std::size_t best_feature = 0;
    const double parent = score(G, H);
    for (std::size_t f = 0; f < lists_.size(); ++f) {
      const auto& list = lists_[f];
      const auto& col = columns_[f];
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        const auto r = list[i];
        gl += g_[r];
        hl += h_[r];
        const double x = col[r], next = col[list[i + 1]];
        if (!(x < next)) continue;
        const double hr = H - hl;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
        const double gain = 0.5 * (score(gl, hl) + score(G - gl, hr) - parent);
        if (!(gain > 0.0)) continue;
        double threshold = x + (next - x) / 2.0;
        if (!(threshold < next)) threshold = x;
        if (!found || gain > best_gain ||
            (gain == best_gain && (f < best_feature || (f == best_feature && threshold < best_threshold)))) {
          found = true;
          best_gain = gain;
          best_feature = f;
          best_threshold = threshold;
        }
      }
    }
    if (!found) return index;

    const auto& col = columns_[best_feature];
    std::size_t n_left = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = lists_[best_feature][i];
      goes_left_[r] = col[r] <= best_threshold ? 1 : 0;
      n_left += goes_left_[r];
    }
    for (auto& list : lists_) partition(list, begin, end);
    const std::size_t mid = begin + n_left;
    const auto l = build(begin, mid, depth + 1);
    const auto rr = build(mid, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = static_cast<std::int32_t>(best_feature);
    node.threshold = best_threshold;
    node.left = l;
    node.right = rr;
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

  const std::vector<std::vector<double>>& columns_;
  const GbmParams& params_;
  std::size_t max_depth_;
  std::span<const double> g_, h_;
  std::vector<Rows> lists_;
  Rows scratch_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

GbmModel fit_gbm(const EncodedDataset& train, const GbmParams& params) {
  params.validate();
  const std::size_t n = train.size();
  if (n == 0) throw std::invalid_argument("cannot fit boosting on an empty dataset");
  const std::size_t n_features = train.X.cols;

  GbmModel model;
  model.task = task_of(train);
  model.n_features = n_features;
  model.n_classes = train.target.n_classes();
  model.params = params;

  const bool classification = model.task == Task::classification;
  const std::size_t K = classification ? model.n_classes : 1;
  if (classification) {
    std::vector<double> counts(K, 0.0);
    for (double v : train.y) counts[static_cast<std::size_t>(v)] += 1.0;
    for (double c : counts) model.base_score.push_back(std::log(std::max(c / static_cast<double>(n), 1e-12)));
  } else {
    double sum = 0.0;
    for (double v : train.y) sum += v;
    model.base_score.push_back(sum / static_cast<double>(n));
  }
  if (params.n_rounds == 0) return model;

  const auto sorted = SortedColumns::build(train.X);
  GradientTreeBuilder builder(sorted.values, params);

  // scores[r * K + k] is the raw score of row r for output k.
  std::vector<double> scores(n * K);
  for (std::size_t r = 0; r < n; ++r) std::copy(model.base_score.begin(), model.base_score.end(), scores.begin() + r * K);

  std::vector<double> g(n), h(n);
  std::vector<std::vector<double>> proba(classification ? n : 0);
  std::vector<std::uint8_t> in_sample(n, 1);
  model.rounds.reserve(params.n_rounds);

  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    if (params.subsample < 1.0) {
      Rng rng(derive_seed(params.seed, round));
      std::size_t kept = 0;
      for (auto& s : in_sample) {
        s = rng.bernoulli(params.subsample) ? 1 : 0;
        kept += s;
      }
      if (kept == 0) in_sample[rng.index(n)] = 1;
    }
    std::vector<Rows> base_lists(n_features);
    for (std::size_t f = 0; f < n_features; ++f) {
      base_lists[f].reserve(n);
      for (auto r : sorted.order[f]) {
        if (in_sample[r]) base_lists[f].push_back(r);
      }
    }
    if (classification) {
      for (std::size_t r = 0; r < n; ++r) proba[r] = softmax(std::span(scores).subspan(r * K, K));
    }

    std::vector<TreeModel> trees;
    trees.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t r = 0; r < n; ++r) {
        if (classification) {
          const double p = proba[r][k];
          g[r] = p - (static_cast<std::size_t>(train.y[r]) == k ? 1.0 : 0.0);
          h[r] = p * (1.0 - p);
        } else {
          g[r] = scores[r] - train.y[r];
          h[r] = 1.0;
        }
      }
      trees.push_back(n_features == 0 ? TreeModel{} : builder.grow(base_lists, g, h));
      if (n_features == 0) {
        double G = 0, H = 0;
        for (std::size_t r = 0; r < n; ++r) G += g[r], H += h[r];
        trees.back().nodes.push_back(TreeNode{.value = {H + params.lambda > 0 ? -G / (H + params.lambda) : 0.0}});
      }
    }
    // Update after all K trees of the round so each class sees the same probabilities.
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t r = 0; r < n; ++r) {
        scores[r * K + k] += params.learning_rate * trees[k].leaf_value(train.X.row(r)).front();
      }
    }
    model.rounds.push_back(std::move(trees));
  }
  return model;
}

}  // namespace mofit::learners

#include "mofit/hpo/objective.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "mofit/metrics.hpp"

namespace mofit::hpo {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::decision_tree: return "decision_tree";
    case Algorithm::random_forest: return "random_forest";
    case Algorithm::extra_trees: return "extra_trees";
    case Algorithm::knn: return "knn";
    case Algorithm::gbm: return "gbm";
  }
  return "";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : kAllAlgorithms) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

namespace {

std::vector<Value> ints(std::initializer_list<std::int64_t> xs) { return {xs.begin(), xs.end()}; }
std::vector<Value> reals(std::initializer_list<double> xs) { return {xs.begin(), xs.end()}; }
std::vector<Value> texts(std::initializer_list<const char*> xs) {
  std::vector<Value> out;
  for (const char* x : xs) out.emplace_back(std::string(x));
  return out;
}

SearchSpace forest_space() {
  return SearchSpace({
      ParamSpec::integer("n_trees", 50, 400).with_grid(ints({50, 200, 400})),
      ParamSpec::integer("max_depth", 4, 24).with_grid(ints({6, 12, 18, 24})),
      ParamSpec::integer("min_samples_split", 2, 10).with_grid(ints({2, 10})),
      ParamSpec::categorical("max_features", texts({"sqrt", "all"})),
  });
}

learners::TreeParams tree_params(const Params& p, std::uint64_t seed) {
  learners::TreeParams t;
  t.max_depth = static_cast<int>(get_int(p, "max_depth"));
  t.min_samples_split = static_cast<std::size_t>(get_int(p, "min_samples_split"));
  if (p.contains("min_samples_leaf")) t.min_samples_leaf = static_cast<std::size_t>(get_int(p, "min_samples_leaf"));
  if (p.contains("max_features")) {
    const auto& mf = get_text(p, "max_features");
    if (mf == "sqrt") {
      t.max_features = learners::MaxFeatures::sqrt();
    } else if (mf != "all") {
      throw SpaceError("max_features must be 'sqrt' or 'all'");
    }
  }
  t.seed = seed;
  return t;
}

}  // namespace

SearchSpace default_space(Algorithm a) {
  switch (a) {
    case Algorithm::decision_tree:
      return SearchSpace({
          ParamSpec::integer("max_depth", 2, 24).with_grid(ints({4, 6, 8, 12, 16, 24})),
          ParamSpec::integer("min_samples_split", 2, 16).with_grid(ints({2, 4, 8, 16})),
          ParamSpec::integer("min_samples_leaf", 1, 8).with_grid(ints({1, 4})),
      });
    case Algorithm::random_forest:
    case Algorithm::extra_trees: return forest_space();
    case Algorithm::knn: {
      std::vector<Value> ks;
      for (std::int64_t k = 1; k <= 25; ++k) ks.emplace_back(k);
      return SearchSpace({
          ParamSpec::integer("k", 1, 30).with_grid(std::move(ks)),
          ParamSpec::categorical("weighting", texts({"uniform", "inverse_distance"})),
      });
    }
    case Algorithm::gbm:
      return SearchSpace({
          ParamSpec::integer("n_rounds", 50, 400).with_grid(ints({100, 300})),
          ParamSpec::continuous("learning_rate", 0.01, 0.3, true).with_grid(reals({0.03, 0.1, 0.3})),
          ParamSpec::integer("max_depth", 2, 8).with_grid(ints({2, 4, 6, 8})),
          ParamSpec::continuous("lambda", 0.0, 5.0).with_grid(reals({1.0})),
          ParamSpec::continuous("subsample", 0.6, 1.0).with_grid(reals({0.8, 1.0})),
      });
  }
  throw std::invalid_argument("unknown algorithm");
}

learners::Model fit_algorithm(Algorithm a, const Params& p, const EncodedDataset& train, std::uint64_t seed,
                              std::size_t n_threads) {
  switch (a) {
    case Algorithm::decision_tree: return learners::fit_tree(train, tree_params(p, seed));
    case Algorithm::random_forest:
    case Algorithm::extra_trees: {
      const auto n_trees = static_cast<std::size_t>(get_int(p, "n_trees"));
      auto fp = a == Algorithm::random_forest ? learners::ForestParams::random_forest(n_trees, tree_params(p, seed))
                                              : learners::ForestParams::extra_trees(n_trees, tree_params(p, seed));
      fp.n_threads = n_threads;
      return learners::fit_forest(train, fp);
    }
    case Algorithm::knn: {
      learners::KnnParams kp;
      kp.k = static_cast<std::size_t>(get_int(p, "k"));
      const auto& w = get_text(p, "weighting");
      if (w == "inverse_distance") {
        kp.weighting = learners::Weighting::inverse_distance;
      } else if (w != "uniform") {
        throw SpaceError("weighting must be 'uniform' or 'inverse_distance'");
      }
      return learners::fit_knn(train, kp);
    }
    case Algorithm::gbm: {
      learners::GbmParams gp;
      gp.n_rounds = static_cast<std::size_t>(get_int(p, "n_rounds"));
      gp.learning_rate = get_real(p, "learning_rate");
      gp.max_depth = static_cast<int>(get_int(p, "max_depth"));
      gp.lambda = get_real(p, "lambda");
      gp.subsample = get_real(p, "subsample");
      gp.seed = seed;
      return learners::fit_gbm(train, gp);
    }
  }
  throw std::invalid_argument("unknown algorithm");
}

Direction direction_for(const EncodedDataset& ds) {
  return ds.target.is_classification() ? Direction::maximize : Direction::minimize;
}

double score(const EncodedDataset& ds, std::span<const double> predicted) {
  return ds.target.is_classification() ? metrics::accuracy(ds.y, predicted) : metrics::rmse(ds.y, predicted);
}

std::vector<std::vector<std::size_t>> make_folds(const EncodedDataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw FoldError("k_folds must be >= 2");
  if (k > ds.size()) throw FoldError("k_folds exceeds the number of rows");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> groups;
  if (ds.target.is_classification()) {
    std::map<long, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<long>(ds.y[i])].push_back(i);
    for (auto& [label, rows] : by_class) {
      if (rows.size() < k) {
        throw FoldError("class " + ds.target.class_labels.at(static_cast<std::size_t>(label)) + " has " +
                        std::to_string(rows.size()) + " rows, fewer than " + std::to_string(k) + " folds");
      }
      groups.push_back(std::move(rows));
    }
  } else {
    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    groups.push_back(std::move(all));
  }
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (auto& g : groups) {
    rng.shuffle(std::span(g));
    for (auto i : g) folds[next++ % k].push_back(i);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CvObjective::CvObjective(Algorithm algorithm, EncodedDataset train, std::size_t k_folds, std::uint64_t seed,
                         RowObserver observer)
    : algorithm_(algorithm),
      train_(std::move(train)),
      seed_(seed),
      direction_(direction_for(train_)),
      folds_(make_folds(train_, k_folds, derive_seed(seed, 0))),
      observer_(std::move(observer)) {
  std::vector<std::uint8_t> in_fold(train_.size());
  for (const auto& fold : folds_) {
    std::fill(in_fold.begin(), in_fold.end(), 0);
    for (auto i : fold) in_fold[i] = 1;
    std::vector<std::size_t> fit_rows;
    for (std::size_t i = 0; i < train_.size(); ++i) {
      if (!in_fold[i]) fit_rows.push_back(i);
    }
    fit_parts_.push_back(subset(train_, fit_rows));
    eval_parts_.push_back(subset(train_, fold));
  }
}

double CvObjective::operator()(const Params& p) const {
  double total = 0.0;
  for (std::size_t f = 0; f < folds_.size(); ++f) {
    const auto& fit = fit_parts_[f];
    const auto& eval = eval_parts_[f];
    if (observer_) {
      observer_(fit.row_ids);
      observer_(eval.row_ids);
    }
    const auto model = fit_algorithm(algorithm_, p, fit, derive_seed(seed_, 1 + f));
    total += score(eval, learners::predict_all(model, eval.X));
  }
  return total / static_cast<double>(folds_.size());
}

}  // namespace mofit::hpo

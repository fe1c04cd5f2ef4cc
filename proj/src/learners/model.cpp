#include "mofit/learners/model.hpp"

namespace mofit::learners {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string_view task_name(Task t) { return t == Task::classification ? "classification" : "regression"; }

Task task_from(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "classification") return Task::classification;
  if (s == "regression") return Task::regression;
  throw std::invalid_argument("unknown task '" + s + "'");
}

json depth_json(const std::optional<int>& d) { return d ? json(*d) : json(nullptr); }
std::optional<int> depth_from(const json& j) { return j.is_null() ? std::nullopt : std::optional<int>(j.get<int>()); }

json tree_params_json(const TreeParams& p) {
  std::string mf = "all";
  if (p.max_features.kind == MaxFeatures::Kind::sqrt) mf = "sqrt";
  if (p.max_features.kind == MaxFeatures::Kind::fraction) mf = "fraction";
  return {{"max_depth", depth_json(p.max_depth)},
          {"min_samples_split", p.min_samples_split},
          {"min_samples_leaf", p.min_samples_leaf},
          {"max_features", mf},
          {"max_features_fraction", p.max_features.fraction},
          {"split_mode", p.split_mode == SplitMode::exact_greedy ? "exact-greedy" : "random-threshold"},
          {"seed", p.seed}};
}

TreeParams tree_params_from(const json& j) {
  TreeParams p;
  p.max_depth = depth_from(j.at("max_depth"));
  p.min_samples_split = j.at("min_samples_split").get<std::size_t>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  const auto mf = j.at("max_features").get<std::string>();
  p.max_features.fraction = j.at("max_features_fraction").get<double>();
  p.max_features.kind = mf == "sqrt" ? MaxFeatures::Kind::sqrt
                        : mf == "fraction" ? MaxFeatures::Kind::fraction
                                           : MaxFeatures::Kind::all;
  p.split_mode = j.at("split_mode").get<std::string>() == "exact-greedy" ? SplitMode::exact_greedy
                                                                          : SplitMode::random_threshold;
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

json tree_json(const TreeModel& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
  return {{"task", task_name(t.task)}, {"n_features", t.n_features}, {"n_classes", t.n_classes}, {"nodes", nodes}};
}

TreeModel tree_from(const json& j) {
  TreeModel t;
  t.task = task_from(j.at("task"));
  t.n_features = j.at("n_features").get<std::size_t>();
  t.n_classes = j.at("n_classes").get<std::size_t>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at(0).get<std::int32_t>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<std::int32_t>();
    node.right = n.at(3).get<std::int32_t>();
    node.value = n.at(4).get<std::vector<double>>();
    t.nodes.push_back(std::move(node));
  }
  const auto count = static_cast<std::int32_t>(t.nodes.size());
  for (const auto& n : t.nodes) {
    if (n.is_leaf()) continue;
    if (static_cast<std::size_t>(n.feature) >= t.n_features || n.left <= 0 || n.right <= 0 || n.left >= count ||
        n.right >= count) {
      throw std::invalid_argument("malformed tree node");
    }
  }
  if (t.nodes.empty()) throw std::invalid_argument("tree has no nodes");
  return t;
}

}  // namespace

Prediction predict(const Model& model, std::span<const double> row) {
  return std::visit([&](const auto& m) { return m.predict(row); }, model);
}

Task task_of(const Model& model) {
  return std::visit([](const auto& m) { return m.task; }, model);
}

std::size_t n_features(const Model& model) {
  return std::visit([](const auto& m) { return m.n_features; }, model);
}

std::string_view kind_name(const Model& model) {
  return std::visit(overloaded{[](const TreeModel&) { return std::string_view("tree"); },
                               [](const ForestModel&) { return std::string_view("forest"); },
                               [](const GbmModel&) { return std::string_view("gbm"); },
                               [](const KnnModel&) { return std::string_view("knn"); }},
                    model);
}

std::vector<double> predict_all(const Model& model, const Matrix& X) {
  const Task task = task_of(model);
  std::vector<double> out(X.rows);
  for (std::size_t r = 0; r < X.rows; ++r) out[r] = predict(model, X.row(r)).scalar(task);
  return out;
}

json to_json(const Model& model) {
  json doc{{"format", "mofit-model"}, {"version", kModelFormatVersion}, {"kind", kind_name(model)}};
  std::visit(overloaded{
                 [&](const TreeModel& t) {
                   doc["tree"] = tree_json(t);
                 },
                 [&](const ForestModel& f) {
                   doc["task"] = task_name(f.task);
                   doc["n_features"] = f.n_features;
                   doc["n_classes"] = f.n_classes;
                   doc["params"] = {{"tree", tree_params_json(f.params.tree)},
                                    {"n_trees", f.params.n_trees},
                                    {"bootstrap", f.params.bootstrap}};
                   json trees = json::array();
                   for (const auto& t : f.trees) trees.push_back(tree_json(t));
                   doc["trees"] = std::move(trees);
                 },
                 [&](const GbmModel& g) {
                   doc["task"] = task_name(g.task);
                   doc["n_features"] = g.n_features;
                   doc["n_classes"] = g.n_classes;
                   doc["params"] = {{"n_rounds", g.params.n_rounds},
                                    {"learning_rate", g.params.learning_rate},
                                    {"lambda", g.params.lambda},
                                    {"max_depth", depth_json(g.params.max_depth)},
                                    {"min_child_weight", g.params.min_child_weight},
                                    {"subsample", g.params.subsample},
                                    {"seed", g.params.seed}};
                   doc["base_score"] = g.base_score;
                   json rounds = json::array();
                   for (const auto& round : g.rounds) {
                     json trees = json::array();
                     for (const auto& t : round) trees.push_back(tree_json(t));
                     rounds.push_back(std::move(trees));
                   }
                   doc["rounds"] = std::move(rounds);
                 },
                 [&](const KnnModel& k) {
                   doc["task"] = task_name(k.task);
                   doc["n_features"] = k.n_features;
                   doc["n_classes"] = k.n_classes;
                   doc["params"] = {{"k", k.params.k},
                                    {"weighting", k.params.weighting == Weighting::uniform ? "uniform"
                                                                                           : "inverse-distance"}};
                   doc["mean"] = k.mean;
                   doc["stddev"] = k.stddev;
                   doc["train_rows"] = k.train.rows;
                   doc["train"] = k.train.data;
                   doc["targets"] = k.targets;
                 }},
             model);
  return doc;
}

Model model_from_json(const json& doc) {
  if (doc.at("format").get<std::string>() != "mofit-model") throw std::invalid_argument("not a mofit model document");
  if (doc.at("version").get<int>() != kModelFormatVersion) {
    throw std::invalid_argument("unsupported model format version " + doc.at("version").dump());
  }
  const auto kind = doc.at("kind").get<std::string>();
  if (kind == "tree") return tree_from(doc.at("tree"));
  if (kind == "forest") {
    ForestModel f;
    f.task = task_from(doc.at("task"));
    f.n_features = doc.at("n_features").get<std::size_t>();
    f.n_classes = doc.at("n_classes").get<std::size_t>();
    const auto& p = doc.at("params");
    f.params.tree = tree_params_from(p.at("tree"));
    f.params.n_trees = p.at("n_trees").get<std::size_t>();
    f.params.bootstrap = p.at("bootstrap").get<bool>();
    for (const auto& t : doc.at("trees")) f.trees.push_back(tree_from(t));
    if (f.trees.empty()) throw std::invalid_argument("forest has no trees");
    return f;
  }
  if (kind == "gbm") {
    GbmModel g;
    g.task = task_from(doc.at("task"));
    g.n_features = doc.at("n_features").get<std::size_t>();
    g.n_classes = doc.at("n_classes").get<std::size_t>();
    const auto& p = doc.at("params");
    g.params.n_rounds = p.at("n_rounds").get<std::size_t>();
    g.params.learning_rate = p.at("learning_rate").get<double>();
    g.params.lambda = p.at("lambda").get<double>();
    g.params.max_depth = depth_from(p.at("max_depth"));
    g.params.min_child_weight = p.at("min_child_weight").get<double>();
    g.params.subsample = p.at("subsample").get<double>();
    g.params.seed = p.at("seed").get<std::uint64_t>();
    g.base_score = doc.at("base_score").get<std::vector<double>>();
    for (const auto& round : doc.at("rounds")) {
      std::vector<TreeModel> trees;
      for (const auto& t : round) trees.push_back(tree_from(t));
      g.rounds.push_back(std::move(trees));
    }
    return g;
  }
  if (kind == "knn") {
    KnnModel k;
    k.task = task_from(doc.at("task"));
    k.n_features = doc.at("n_features").get<std::size_t>();
    k.n_classes = doc.at("n_classes").get<std::size_t>();
    k.params.k = doc.at("params").at("k").get<std::size_t>();
    k.params.weighting = doc.at("params").at("weighting").get<std::string>() == "uniform" ? Weighting::uniform
                                                                                         : Weighting::inverse_distance;
    k.mean = doc.at("mean").get<std::vector<double>>();
    k.stddev = doc.at("stddev").get<std::vector<double>>();
    k.train.rows = doc.at("train_rows").get<std::size_t>();
    k.train.cols = k.n_features;
    k.train.data = doc.at("train").get<std::vector<double>>();
    k.targets = doc.at("targets").get<std::vector<double>>();
    if (k.train.data.size() != k.train.rows * k.train.cols || k.targets.size() != k.train.rows) {
      throw std::invalid_argument("knn matrix size mismatch");
    }
    return k;
  }
  throw std::invalid_argument("unknown model kind '" + kind + "'");
}

std::string serialize(const Model& model) { return to_json(model).dump(); }

Model deserialize(std::string_view text) { return model_from_json(json::parse(text)); }

}  // namespace mofit::learners

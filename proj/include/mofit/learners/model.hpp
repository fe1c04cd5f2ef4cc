#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mofit/learners/forest.hpp"
#include "mofit/learners/gbm.hpp"
#include "mofit/learners/knn.hpp"
#include "mofit/learners/tree.hpp"

namespace mofit::learners {

using Model = std::variant<TreeModel, ForestModel, GbmModel, KnnModel>;

inline constexpr int kModelFormatVersion = 1;

Prediction predict(const Model& model, std::span<const double> row);
Task task_of(const Model& model);
std::size_t n_features(const Model& model);
std::string_view kind_name(const Model& model);

/// Class index (classification) or value (regression) for every row of X.
std::vector<double> predict_all(const Model& model, const Matrix& X);

/// Versioned structured-text form. Doubles are written with round-trip precision,
/// so a deserialized model predicts bit-identically.
nlohmann::json to_json(const Model& model);
Model model_from_json(const nlohmann::json& doc);
std::string serialize(const Model& model);
Model deserialize(std::string_view text);

}  // namespace mofit::learners

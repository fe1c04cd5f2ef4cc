#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mofit/experiment/bundle.hpp"
#include "mofit/schema.hpp"

namespace mofit::service {

/// Payload rejected field by field.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<FieldError> fields);
  const std::vector<FieldError>& fields() const { return fields_; }

 private:
  std::vector<FieldError> fields_;
};

struct ObesityPrediction {
  std::string label;
  std::vector<std::pair<std::string, double>> probabilities;  // in class order
};

struct BodyfatPrediction {
  double percent = 0.0;
  double raw = 0.0;
  bool clamped = false;
};

/// Body-fat outputs are clamped into this band and flagged.
inline constexpr double kBodyfatMin = 0.1;
inline constexpr double kBodyfatMax = 59.9;

/// The three deployment models and the manifest they were trained against. Immutable
/// once built; the server swaps whole registries on reload.
class ModelRegistry {
 public:
  explicit ModelRegistry(experiment::Bundle bundle);
  ModelRegistry(const ModelRegistry&) = delete;
  ModelRegistry& operator=(const ModelRegistry&) = delete;

  const std::string& version() const { return version_; }
  const Manifest& manifest() const { return manifest_; }

  ObesityPrediction predict_obesity(const nlohmann::json& payload) const;
  double predict_weight(const nlohmann::json& payload) const;
  BodyfatPrediction predict_bodyfat(const nlohmann::json& payload) const;

  /// Input fields of each prediction endpoint: name, type, categories or range.
  nlohmann::json input_schema() const;

 private:
  struct Slot {
    const TaskSchema* task = nullptr;
    const SourceSchema* source = nullptr;
    learners::Model model;
  };
  std::vector<double> encode(const Slot& slot, const nlohmann::json& payload) const;

  experiment::Bundle bundle_;
  std::string version_;
  Manifest manifest_;
  Slot obesity_, weight_, bodyfat_;
};

}  // namespace mofit::service

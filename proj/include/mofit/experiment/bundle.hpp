#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mofit/experiment/benchmark.hpp"
#include "mofit/learners/model.hpp"

namespace mofit::experiment {

/// One deployment model: which task it serves and how it was chosen.
struct Selection {
  std::string role;  // "obesity", "weight" or "bodyfat"
  std::string task_id;
  hpo::Algorithm algorithm = hpo::Algorithm::random_forest;
  std::optional<hpo::SamplerKind> sampler;  // unset: the sampler with the best CV objective
};

/// Random forest for obesity, extra trees for weight, GBM for body fat.
std::vector<Selection> default_selections();

struct BundleEntry {
  std::string role;
  std::string task_id;
  hpo::Algorithm algorithm = hpo::Algorithm::random_forest;
  hpo::SamplerKind sampler = hpo::SamplerKind::grid;
  hpo::Params params;
  double cv_objective = 0.0;
  nlohmann::json test_metrics;
  nlohmann::json schema;  // the task encoding and its source columns
  learners::Model model;
};

class BundleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bundle {
  std::string manifest_text;
  std::vector<BundleEntry> entries;

  /// Lowercase hex SHA-256 of the canonical content (everything except the hash fields).
  std::string content_hash() const;
  /// First 12 hex digits of the content hash.
  std::string version() const;
  const BundleEntry& entry(std::string_view role) const;

  nlohmann::json to_json() const;
  /// Rejects documents whose recorded hash differs from the recomputed one.
  static Bundle from_json(const nlohmann::json& doc);
};

std::string sha256_hex(std::string_view bytes);

/// Reads each selection's study from the benchmark output, picks the parameters,
/// and refits on the task's training split with the benchmark's refit seed.
Bundle export_models(const BenchmarkConfig& config, const std::vector<TaskData>& tasks,
                     const std::vector<Selection>& selections = default_selections());

void save_bundle(const Bundle& bundle, const std::filesystem::path& path);
Bundle load_bundle(const std::filesystem::path& path);

}  // namespace mofit::experiment

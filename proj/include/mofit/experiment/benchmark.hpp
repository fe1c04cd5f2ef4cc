#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mofit/dataset.hpp"
#include "mofit/hpo/objective.hpp"
#include "mofit/hpo/samplers.hpp"
#include "mofit/io.hpp"
#include "mofit/metrics.hpp"

namespace mofit::experiment {

inline constexpr const char* kObesityTask = "obesity_classification";
inline constexpr const char* kWeightTask = "weight_regression";
inline constexpr const char* kBodyfatTask = "bodyfat_regression";
inline constexpr hpo::SamplerKind kAllSamplers[] = {hpo::SamplerKind::grid, hpo::SamplerKind::random,
                                                    hpo::SamplerKind::genetic, hpo::SamplerKind::tpe};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct BenchmarkConfig {
  std::filesystem::path obesity_csv;
  std::filesystem::path bodyfat_csv;
  std::uint64_t seed = 2024;
  double train_ratio = 0.8;
  std::size_t k_folds = 3;
  std::size_t trials = 50;  // random and TPE
  std::size_t ga_population = 10;
  std::size_t ga_generations = 5;
  hpo::TpeOptions tpe;
  std::vector<std::string> tasks{kObesityTask, kWeightTask, kBodyfatTask};
  std::vector<hpo::Algorithm> algorithms{std::begin(hpo::kAllAlgorithms), std::end(hpo::kAllAlgorithms)};
  std::vector<hpo::SamplerKind> samplers{std::begin(kAllSamplers), std::end(kAllSamplers)};
  std::map<hpo::Algorithm, hpo::SearchSpace> spaces;  // overrides of the defaults
  std::filesystem::path output_dir = "results";
  std::size_t n_threads = 0;  // 0 = hardware concurrency

  /// Relative dataset and output paths resolve against `base_dir`.
  static BenchmarkConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static BenchmarkConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Budgets and option ranges; `check_paths` also requires the dataset files to exist.
  void validate(bool check_paths) const;
  /// Random/TPE trials become `budget`; GA keeps its population and gets budget/population generations.
  void override_budget(std::size_t budget);

  hpo::SearchSpace space(hpo::Algorithm a) const;
  std::size_t budget_for(hpo::Algorithm a, hpo::SamplerKind s) const;
};

/// A prepared task and its train/test split.
struct TaskData {
  std::string task_id;
  SplitPair split;
};

/// Loads both CSVs, prepares the configured tasks and splits each one.
std::vector<TaskData> load_tasks(const BenchmarkConfig& config);
/// Same from in-memory tables (used by tests with fixtures).
std::vector<TaskData> prepare_tasks(const BenchmarkConfig& config, const RawTable& obesity, const RawTable& bodyfat);

struct CellResult {
  hpo::Algorithm algorithm = hpo::Algorithm::decision_tree;
  hpo::SamplerKind sampler = hpo::SamplerKind::grid;
  bool ok = false;
  std::string error;
  std::size_t n_trials = 0;
  hpo::Params best_params;
  double cv_objective = 0.0;
  metrics::Report test;
  std::size_t mape_excluded = 0;  // test rows with a zero actual value, left out of MAPE

  bool operator==(const CellResult&) const = default;
};

struct ResultTable {
  std::string task_id;
  bool classification = true;
  std::uint64_t seed = 0;
  nlohmann::json budgets;
  std::vector<CellResult> cells;  // algorithm-major, sampler-minor in config order

  const CellResult& cell(hpo::Algorithm a, hpo::SamplerKind s) const;
  nlohmann::json to_json() const;
  static ResultTable from_json(const nlohmann::json& j);
  /// Plain-text rendering shaped like the published tables.
  std::string render() const;
};

struct RunHooks {
  hpo::RowObserver observer;  // sees every row the HPO objectives read
  std::function<void(const std::string& task, const CellResult&, double seconds)> on_cell;
};

struct BenchmarkResult {
  std::vector<ResultTable> tables;
  std::map<std::string, hpo::Study> studies;  // key: history_key(...)
  bool all_completed = false;
};

std::string history_key(const std::string& task, hpo::Algorithm a, hpo::SamplerKind s);

/// Seeds used by one task: split, CV folds, final refit of each algorithm, and each study.
struct TaskSeeds {
  std::uint64_t base = 0;
  std::uint64_t split = 0;
  std::uint64_t folds = 0;
  std::uint64_t refit(hpo::Algorithm a) const;
  std::uint64_t study(hpo::Algorithm a, hpo::SamplerKind s) const;
};
TaskSeeds task_seeds(std::uint64_t master, const std::string& task_id);

/// Test-set report. MAPE skips rows whose actual value is zero and counts them.
metrics::Report evaluate(const EncodedDataset& test, std::span<const double> predicted, std::size_t* mape_excluded);

/// Runs every configured cell on a worker pool and returns the merged tables.
/// Writes nothing; see write_outputs.
BenchmarkResult run_benchmark(const BenchmarkConfig& config, const std::vector<TaskData>& tasks,
                              const RunHooks& hooks = {});

/// tables/<task>.json and .txt, history/<task>/<algorithm>__<sampler>.json, run_info.json.
/// Timestamps go only into run_info.json so the tables replay byte-identically.
void write_outputs(const BenchmarkConfig& config, const BenchmarkResult& result, const nlohmann::json& run_info);

std::filesystem::path table_path(const std::filesystem::path& out, const std::string& task, const char* ext);
std::filesystem::path history_path(const std::filesystem::path& out, const std::string& task, hpo::Algorithm a,
                                   hpo::SamplerKind s);

using mofit::read_file;
using mofit::write_file_atomic;

}  // namespace mofit::experiment

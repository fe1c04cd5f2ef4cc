#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>

#include "mofit/experiment/benchmark.hpp"
#include "mofit/experiment/bundle.hpp"

namespace fs = std::filesystem;
using namespace mofit;
using namespace mofit::experiment;

namespace {

struct Options {
  std::string config = MOFIT_DEFAULT_CONFIG;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
};

BenchmarkConfig load_config(const Options& o) {
  auto c = BenchmarkConfig::load(o.config);
  if (const char* p = std::getenv("MOFIT_OBESITY_CSV")) c.obesity_csv = p;
  if (const char* p = std::getenv("MOFIT_BODYFAT_CSV")) c.bodyfat_csv = p;
  if (o.seed) c.seed = *o.seed;
  if (o.budget) c.override_budget(*o.budget);
  if (o.out) c.output_dir = *o.out;
  if (o.threads) c.n_threads = *o.threads;
  return c;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

int cmd_run(const Options& o) {
  const auto config = load_config(o);
  const auto tasks = load_tasks(config);
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  std::mutex log_mutex;
  RunHooks hooks;
  hooks.on_cell = [&](const std::string& task, const CellResult& c, double seconds) {
    std::lock_guard lock(log_mutex);
    std::cerr << std::fixed << std::setprecision(1) << "[" << seconds << "s] " << task << " "
              << hpo::to_string(c.algorithm) << "/" << hpo::to_string(c.sampler) << ": "
              << (c.ok ? "ok" : "FAILED: " + c.error) << "\n";
  };
  const auto result = run_benchmark(config, tasks, hooks);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  nlohmann::json info = {{"started", started},
                         {"finished", utc_now()},
                         {"elapsed_seconds", elapsed},
                         {"all_completed", result.all_completed},
                         {"config", config.to_json()}};
  write_outputs(config, result, info);
  for (const auto& t : result.tables) std::cout << t.render() << "\n";
  std::cout << "wrote " << config.output_dir.string() << " in " << std::fixed << std::setprecision(1) << elapsed
            << " s\n";
  return result.all_completed ? 0 : 1;
}

int cmd_table(const Options& o, const std::string& task, bool as_json) {
  const auto config = load_config(o);
  const auto doc = nlohmann::json::parse(read_file(table_path(config.output_dir, task, ".json")));
  const auto table = ResultTable::from_json(doc);
  std::cout << (as_json ? doc.dump(2) + "\n" : table.render());
  return 0;
}

int cmd_history(const Options& o, const std::string& task, const std::string& algorithm, const std::string& sampler) {
  const auto config = load_config(o);
  const auto path = history_path(config.output_dir, task, hpo::parse_algorithm(algorithm), hpo::parse_sampler(sampler));
  const auto study = hpo::Study::from_json(nlohmann::json::parse(read_file(path)));
  std::cout << "trial,objective,best_so_far\n" << std::setprecision(17);
  for (const auto& row : hpo::history(study)) {
    std::cout << row.trial_id << "," << row.objective << "," << row.best_so_far << "\n";
  }
  return 0;
}

int cmd_export(const Options& o, const std::string& bundle_path) {
  const auto config = load_config(o);
  const auto tasks = load_tasks(config);
  const auto bundle = export_models(config, tasks);
  const fs::path path = bundle_path.empty() ? config.output_dir / "bundle.json" : fs::path(bundle_path);
  save_bundle(bundle, path);
  for (const auto& e : bundle.entries) {
    std::cout << e.role << ": " << hpo::to_string(e.algorithm) << " via " << hpo::to_string(e.sampler) << " test "
              << e.test_metrics.dump() << "\n";
  }
  std::cout << "bundle " << bundle.version() << " -> " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark the five learners under the four HPO samplers and export the deployment models"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "Benchmark configuration file")->capture_default_str();
    sub->add_option("--seed", o.seed, "Master seed override");
    sub->add_option("--budget", o.budget, "Trial budget override for random, TPE and GA");
    sub->add_option("-o,--out", o.out, "Output directory override");
    sub->add_option("-j,--threads", o.threads, "Worker threads (0 = all cores)");
  };

  auto* run = app.add_subcommand("run", "Run every configured cell and write tables and histories");
  add_common(run);

  std::string task;
  bool as_json = false;
  auto* table = app.add_subcommand("table", "Print one task's result table");
  add_common(table);
  table->add_option("task", task, "Task id")->required();
  table->add_flag("--json", as_json, "Print the machine-readable table");

  std::string algorithm, sampler;
  auto* hist = app.add_subcommand("history", "Dump one study's optimization history as CSV");
  add_common(hist);
  hist->add_option("task", task, "Task id")->required();
  hist->add_option("algorithm", algorithm, "Algorithm")->required();
  hist->add_option("sampler", sampler, "Sampler")->required();

  std::string bundle_path;
  auto* exp = app.add_subcommand("export-models", "Refit the deployment models and write the bundle");
  add_common(exp);
  exp->add_option("--bundle", bundle_path, "Bundle path (default: <out>/bundle.json)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(o);
    if (*table) return cmd_table(o, task, as_json);
    if (*hist) return cmd_history(o, task, algorithm, sampler);
    if (*exp) return cmd_export(o, bundle_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

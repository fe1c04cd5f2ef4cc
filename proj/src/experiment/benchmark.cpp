#include "mofit/experiment/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "mofit/parallel.hpp"

namespace mofit::experiment {

namespace fs = std::filesystem;

namespace {

std::size_t positive(const nlohmann::json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<long long>();
  if (v < 1) throw ConfigError(std::string(key) + " must be >= 1");
  return static_cast<std::size_t>(v);
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

// Cheaper cells last so long jobs start first on the pool.
int cost_rank(hpo::Algorithm a) {
  switch (a) {
    case hpo::Algorithm::gbm: return 0;
    case hpo::Algorithm::random_forest: return 1;
    case hpo::Algorithm::extra_trees: return 2;
    case hpo::Algorithm::decision_tree: return 3;
    case hpo::Algorithm::knn: return 4;
  }
  return 5;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

BenchmarkConfig BenchmarkConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  BenchmarkConfig c;
  try {
    if (j.contains("datasets")) {
      const auto& d = j.at("datasets");
      if (d.contains("obesity")) c.obesity_csv = resolve(base_dir, d.at("obesity").get<std::string>());
      if (d.contains("bodyfat")) c.bodyfat_csv = resolve(base_dir, d.at("bodyfat").get<std::string>());
    }
    c.seed = j.value("seed", c.seed);
    c.train_ratio = j.value("train_ratio", c.train_ratio);
    c.k_folds = positive(j, "k_folds", c.k_folds);
    if (j.contains("budgets")) {
      const auto& b = j.at("budgets");
      c.trials = positive(b, "trials", c.trials);
      c.ga_population = positive(b, "ga_population", c.ga_population);
      c.ga_generations = positive(b, "ga_generations", c.ga_generations);
      c.tpe.n_startup = positive(b, "tpe_startup", c.tpe.n_startup);
      c.tpe.gamma = b.value("tpe_gamma", c.tpe.gamma);
      c.tpe.n_candidates = positive(b, "tpe_candidates", c.tpe.n_candidates);
    }
    if (j.contains("tasks")) c.tasks = j.at("tasks").get<std::vector<std::string>>();
    if (j.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : j.at("algorithms")) c.algorithms.push_back(hpo::parse_algorithm(a.get<std::string>()));
    }
    if (j.contains("samplers")) {
      c.samplers.clear();
      for (const auto& s : j.at("samplers")) c.samplers.push_back(hpo::parse_sampler(s.get<std::string>()));
    }
    if (j.contains("search_spaces")) {
      for (const auto& [name, space] : j.at("search_spaces").items()) {
        c.spaces.emplace(hpo::parse_algorithm(name), hpo::SearchSpace::from_json(space));
      }
    }
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    c.n_threads = j.value("threads", c.n_threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid benchmark config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid benchmark config: ") + e.what());
  }
  c.validate(false);
  return c;
}

BenchmarkConfig BenchmarkConfig::load(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

nlohmann::json BenchmarkConfig::to_json() const {
  nlohmann::json j;
  j["datasets"] = {{"obesity", obesity_csv.string()}, {"bodyfat", bodyfat_csv.string()}};
  j["seed"] = seed;
  j["train_ratio"] = train_ratio;
  j["k_folds"] = k_folds;
  j["budgets"] = {{"trials", trials},
                  {"ga_population", ga_population},
                  {"ga_generations", ga_generations},
                  {"tpe_startup", tpe.n_startup},
                  {"tpe_gamma", tpe.gamma},
                  {"tpe_candidates", tpe.n_candidates}};
  j["tasks"] = tasks;
  j["algorithms"] = nlohmann::json::array();
  for (auto a : algorithms) j["algorithms"].push_back(hpo::to_string(a));
  j["samplers"] = nlohmann::json::array();
  for (auto s : samplers) j["samplers"].push_back(hpo::to_string(s));
  j["search_spaces"] = nlohmann::json::object();
  for (const auto& [a, space] : spaces) j["search_spaces"][std::string(hpo::to_string(a))] = space.to_json();
  j["output_dir"] = output_dir.string();
  j["threads"] = n_threads;
  return j;
}

void BenchmarkConfig::validate(bool check_paths) const {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("train_ratio must be in (0, 1)");
  if (k_folds < 2) throw ConfigError("k_folds must be >= 2");
  if (trials < 1 || ga_population < 2 || ga_generations < 1) throw ConfigError("budgets must be >= 1 (population >= 2)");
  if (!(tpe.gamma > 0.0 && tpe.gamma < 1.0)) throw ConfigError("tpe_gamma must be in (0, 1)");
  if (tasks.empty() || algorithms.empty() || samplers.empty()) throw ConfigError("nothing to run");
  for (const auto& t : tasks) {
    if (t != kObesityTask && t != kWeightTask && t != kBodyfatTask) throw ConfigError("unknown task '" + t + "'");
  }
  if (check_paths) {
    const bool obesity = std::any_of(tasks.begin(), tasks.end(), [](const auto& t) { return t != kBodyfatTask; });
    const bool bodyfat = std::any_of(tasks.begin(), tasks.end(), [](const auto& t) { return t == kBodyfatTask; });
    if (obesity && !fs::is_regular_file(obesity_csv)) {
      throw ConfigError("obesity dataset not found: '" + obesity_csv.string() + "'");
    }
    if (bodyfat && !fs::is_regular_file(bodyfat_csv)) {
      throw ConfigError("body-fat dataset not found: '" + bodyfat_csv.string() + "'");
    }
  }
}

void BenchmarkConfig::override_budget(std::size_t budget) {
  if (budget < 1) throw ConfigError("budget must be >= 1");
  trials = budget;
  ga_generations = std::max<std::size_t>(1, budget / ga_population);
}

hpo::SearchSpace BenchmarkConfig::space(hpo::Algorithm a) const {
  const auto it = spaces.find(a);
  return it != spaces.end() ? it->second : hpo::default_space(a);
}

std::size_t BenchmarkConfig::budget_for(hpo::Algorithm a, hpo::SamplerKind s) const {
  switch (s) {
    case hpo::SamplerKind::grid: return space(a).grid_size();
    case hpo::SamplerKind::random:
    case hpo::SamplerKind::tpe: return trials;
    case hpo::SamplerKind::genetic: return ga_population * ga_generations;
  }
  return 0;
}

TaskSeeds task_seeds(std::uint64_t master, const std::string& task_id) {
  TaskSeeds s;
  s.base = derive_seed(master, fnv1a(task_id));
  s.split = derive_seed(s.base, 1);
  s.folds = derive_seed(s.base, 2);
  return s;
}

std::uint64_t TaskSeeds::refit(hpo::Algorithm a) const { return derive_seed(base, 100 + static_cast<std::uint64_t>(a)); }

std::uint64_t TaskSeeds::study(hpo::Algorithm a, hpo::SamplerKind s) const {
  return derive_seed(base, 200 + 8 * static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(s));
}

std::vector<TaskData> prepare_tasks(const BenchmarkConfig& config, const RawTable& obesity, const RawTable& bodyfat) {
  std::vector<TaskData> out;
  for (const auto& id : config.tasks) {
    EncodedDataset ds;
    if (id == kObesityTask) {
      ds = prepare_obesity_classification(obesity);
    } else if (id == kWeightTask) {
      ds = prepare_weight_regression(obesity);
    } else {
      ds = prepare_bodyfat(bodyfat);
    }
    const bool stratified = ds.target.is_classification();
    out.push_back({id, split(ds, config.train_ratio, task_seeds(config.seed, id).split, stratified)});
  }
  return out;
}

std::vector<TaskData> load_tasks(const BenchmarkConfig& config) {
  config.validate(true);
  const bool need_obesity =
      std::any_of(config.tasks.begin(), config.tasks.end(), [](const auto& t) { return t != kBodyfatTask; });
  const bool need_bodyfat =
      std::any_of(config.tasks.begin(), config.tasks.end(), [](const auto& t) { return t == kBodyfatTask; });
  RawTable obesity, bodyfat;
  if (need_obesity) obesity = load_csv_file(config.obesity_csv.string(), SourceId::obesity);
  if (need_bodyfat) bodyfat = load_csv_file(config.bodyfat_csv.string(), SourceId::bodyfat);
  return prepare_tasks(config, obesity, bodyfat);
}

metrics::Report evaluate(const EncodedDataset& test, std::span<const double> predicted, std::size_t* mape_excluded) {
  if (test.target.is_classification()) return metrics::classification_report(test.y, predicted);
  metrics::Report r;
  r.task = metrics::Task::regression;
  r.n = test.size();
  r.rmse = metrics::rmse(test.y, predicted);
  r.mae = metrics::mae(test.y, predicted);
  std::vector<double> actual, pred;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test.y[i] == 0.0) continue;
    actual.push_back(test.y[i]);
    pred.push_back(predicted[i]);
  }
  if (mape_excluded) *mape_excluded = test.size() - actual.size();
  r.mape = actual.empty() ? 0.0 : metrics::mape(actual, pred);
  return r;
}

std::string history_key(const std::string& task, hpo::Algorithm a, hpo::SamplerKind s) {
  return task + "/" + std::string(hpo::to_string(a)) + "__" + std::string(hpo::to_string(s));
}

const CellResult& ResultTable::cell(hpo::Algorithm a, hpo::SamplerKind s) const {
  for (const auto& c : cells) {
    if (c.algorithm == a && c.sampler == s) return c;
  }
  throw std::out_of_range("no cell for " + std::string(hpo::to_string(a)) + "/" + std::string(hpo::to_string(s)));
}

nlohmann::json ResultTable::to_json() const {
  nlohmann::json j;
  j["task"] = task_id;
  j["kind"] = classification ? "classification" : "regression";
  j["metrics"] = classification ? nlohmann::json{"accuracy"} : nlohmann::json{"rmse", "mae", "mape"};
  j["seed"] = seed;
  j["budgets"] = budgets;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json cj;
    cj["algorithm"] = hpo::to_string(c.algorithm);
    cj["sampler"] = hpo::to_string(c.sampler);
    cj["status"] = c.ok ? "complete" : "failed";
    cj["trials"] = c.n_trials;
    if (c.ok) {
      cj["best_params"] = hpo::to_json(c.best_params);
      cj["cv_objective"] = c.cv_objective;
      if (classification) {
        cj["test"] = {{"accuracy", c.test.accuracy}, {"n", c.test.n}};
      } else {
        cj["test"] = {{"rmse", c.test.rmse}, {"mae", c.test.mae}, {"mape", c.test.mape}, {"n", c.test.n}};
        if (c.mape_excluded) cj["test"]["mape_excluded_rows"] = c.mape_excluded;
      }
    } else {
      cj["error"] = c.error;
    }
    j["cells"].push_back(std::move(cj));
  }
  return j;
}

ResultTable ResultTable::from_json(const nlohmann::json& j) {
  ResultTable t;
  t.task_id = j.at("task").get<std::string>();
  t.classification = j.at("kind").get<std::string>() == "classification";
  t.seed = j.at("seed").get<std::uint64_t>();
  t.budgets = j.at("budgets");
  for (const auto& cj : j.at("cells")) {
    CellResult c;
    c.algorithm = hpo::parse_algorithm(cj.at("algorithm").get<std::string>());
    c.sampler = hpo::parse_sampler(cj.at("sampler").get<std::string>());
    c.ok = cj.at("status").get<std::string>() == "complete";
    c.n_trials = cj.at("trials").get<std::size_t>();
    if (c.ok) {
      c.best_params = hpo::params_from_json(cj.at("best_params"));
      c.cv_objective = cj.at("cv_objective").get<double>();
      const auto& test = cj.at("test");
      c.test.n = test.at("n").get<std::size_t>();
      if (t.classification) {
        c.test.task = metrics::Task::classification;
        c.test.accuracy = test.at("accuracy").get<double>();
      } else {
        c.test.task = metrics::Task::regression;
        c.test.rmse = test.at("rmse").get<double>();
        c.test.mae = test.at("mae").get<double>();
        c.test.mape = test.at("mape").get<double>();
        c.mape_excluded = test.value("mape_excluded_rows", std::size_t{0});
      }
    } else {
      c.error = cj.value("error", "");
    }
    t.cells.push_back(std::move(c));
  }
  return t;
}

std::string ResultTable::render() const {
  std::vector<hpo::Algorithm> algs;
  std::vector<hpo::SamplerKind> samplers;
  for (const auto& c : cells) {
    if (std::find(algs.begin(), algs.end(), c.algorithm) == algs.end()) algs.push_back(c.algorithm);
    if (std::find(samplers.begin(), samplers.end(), c.sampler) == samplers.end()) samplers.push_back(c.sampler);
  }
  std::ostringstream out;
  auto block = [&](const char* title, auto value) {
    out << title << "\n" << std::left << std::setw(16) << "algorithm";
    for (auto s : samplers) out << std::right << std::setw(10) << hpo::to_string(s);
    out << "\n";
    for (auto a : algs) {
      out << std::left << std::setw(16) << hpo::to_string(a);
      for (auto s : samplers) {
        const auto& c = cell(a, s);
        std::ostringstream v;
        if (c.ok) {
          v << std::fixed << std::setprecision(4) << value(c);
        } else {
          v << "failed";
        }
        out << std::right << std::setw(10) << v.str();
      }
      out << "\n";
    }
  };
  out << task_id << " (test split, seed " << seed << ")\n\n";
  if (classification) {
    block("accuracy", [](const CellResult& c) { return c.test.accuracy; });
  } else {
    block("rmse", [](const CellResult& c) { return c.test.rmse; });
    out << "\n";
    block("mae", [](const CellResult& c) { return c.test.mae; });
    out << "\n";
    block("mape (fraction)", [](const CellResult& c) { return c.test.mape; });
  }
  return out.str();
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config, const std::vector<TaskData>& tasks, const RunHooks& hooks) {
  config.validate(false);
  struct Job {
    std::size_t task;
    hpo::Algorithm algorithm;
    hpo::SamplerKind sampler;
    std::size_t slot;  // position in the task's table
  };
  std::vector<Job> jobs;
  std::vector<std::vector<CellResult>> cells(tasks.size());
  std::vector<std::vector<hpo::Study>> studies(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (auto a : config.algorithms) {
      for (auto s : config.samplers) jobs.push_back({t, a, s, cells[t].size()}), cells[t].emplace_back();
    }
    studies[t].resize(cells[t].size());
  }
  std::stable_sort(jobs.begin(), jobs.end(),
                   [](const Job& a, const Job& b) { return cost_rank(a.algorithm) < cost_rank(b.algorithm); });

  parallel_for(jobs.size(), config.n_threads, [&](std::size_t j) {
    const auto& job = jobs[j];
    const auto& task = tasks[job.task];
    const auto seeds = task_seeds(config.seed, task.task_id);
    const auto started = std::chrono::steady_clock::now();
    CellResult cell;
    cell.algorithm = job.algorithm;
    cell.sampler = job.sampler;
    hpo::Study study;
    try {
      const hpo::CvObjective cv(job.algorithm, task.split.train, config.k_folds, seeds.folds, hooks.observer);
      const hpo::Objective objective = [&cv](const hpo::Params& p) { return cv(p); };
      const auto space = config.space(job.algorithm);
      const auto seed = seeds.study(job.algorithm, job.sampler);
      const auto dir = cv.direction();
      switch (job.sampler) {
        case hpo::SamplerKind::grid: study = hpo::run_grid(space, objective, dir); break;
        case hpo::SamplerKind::random: study = hpo::run_random(space, objective, config.trials, seed, dir); break;
        case hpo::SamplerKind::genetic: {
          hpo::GeneticOptions o;
          o.population = config.ga_population;
          o.generations = config.ga_generations;
          study = hpo::run_genetic(space, objective, o, seed, dir);
          break;
        }
        case hpo::SamplerKind::tpe: study = hpo::run_tpe(space, objective, config.trials, seed, dir, config.tpe); break;
      }
      cell.n_trials = study.trials.size();
      const auto& best = study.best_trial();
      cell.best_params = best.params;
      cell.cv_objective = best.objective;
      const auto model = hpo::fit_algorithm(job.algorithm, best.params, task.split.train, seeds.refit(job.algorithm));
      const auto predicted = learners::predict_all(model, task.split.test.X);
      cell.test = evaluate(task.split.test, predicted, &cell.mape_excluded);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (hooks.on_cell) hooks.on_cell(task.task_id, cell, seconds);
    cells[job.task][job.slot] = std::move(cell);
    studies[job.task][job.slot] = std::move(study);
  });

  BenchmarkResult result;
  result.all_completed = true;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    ResultTable table;
    table.task_id = tasks[t].task_id;
    table.classification = tasks[t].split.train.target.is_classification();
    table.seed = config.seed;
    table.budgets = nlohmann::json::object();
    for (auto a : config.algorithms) {
      for (auto s : config.samplers) {
        table.budgets[std::string(hpo::to_string(a))][std::string(hpo::to_string(s))] = config.budget_for(a, s);
      }
    }
    std::size_t slot = 0;
    for (auto a : config.algorithms) {
      for (auto s : config.samplers) {
        result.all_completed = result.all_completed && cells[t][slot].ok;
        if (!studies[t][slot].trials.empty()) {
          result.studies.emplace(history_key(table.task_id, a, s), std::move(studies[t][slot]));
        }
        ++slot;
      }
    }
    table.cells = std::move(cells[t]);
    result.tables.push_back(std::move(table));
  }
  return result;
}

fs::path table_path(const fs::path& out, const std::string& task, const char* ext) {
  return out / "tables" / (task + ext);
}

fs::path history_path(const fs::path& out, const std::string& task, hpo::Algorithm a, hpo::SamplerKind s) {
  return out / "history" / task / (std::string(hpo::to_string(a)) + "__" + std::string(hpo::to_string(s)) + ".json");
}

void write_outputs(const BenchmarkConfig& config, const BenchmarkResult& result, const nlohmann::json& run_info) {
  const auto& out = config.output_dir;
  for (const auto& table : result.tables) {
    write_file_atomic(table_path(out, table.task_id, ".json"), table.to_json().dump(2) + "\n");
    write_file_atomic(table_path(out, table.task_id, ".txt"), table.render());
    for (const auto& c : table.cells) {
      const auto it = result.studies.find(history_key(table.task_id, c.algorithm, c.sampler));
      if (it == result.studies.end()) continue;
      auto doc = it->second.to_json();
      doc["task"] = table.task_id;
      doc["algorithm"] = hpo::to_string(c.algorithm);
      write_file_atomic(history_path(out, table.task_id, c.algorithm, c.sampler), doc.dump(2) + "\n");
    }
  }
  write_file_atomic(out / "run_info.json", run_info.dump(2) + "\n");
}

}  // namespace mofit::experiment

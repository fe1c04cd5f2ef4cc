#include "mofit/experiment/bundle.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

namespace mofit::experiment {

namespace fs = std::filesystem;

std::vector<Selection> default_selections() {
  return {
      {"obesity", kObesityTask, hpo::Algorithm::random_forest, std::nullopt},
      {"weight", kWeightTask, hpo::Algorithm::extra_trees, std::nullopt},
      {"bodyfat", kBodyfatTask, hpo::Algorithm::gbm, std::nullopt},
  };
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    char buf[3];
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

namespace {

nlohmann::json content_json(const Bundle& b) {
  nlohmann::json j;
  j["format"] = "mofit-model-bundle";
  j["manifest"] = b.manifest_text;
  j["models"] = nlohmann::json::array();
  for (const auto& e : b.entries) {
    j["models"].push_back({{"role", e.role},
                           {"task", e.task_id},
                           {"algorithm", hpo::to_string(e.algorithm)},
                           {"sampler", hpo::to_string(e.sampler)},
                           {"params", hpo::to_json(e.params)},
                           {"cv_objective", e.cv_objective},
                           {"test_metrics", e.test_metrics},
                           {"schema", e.schema},
                           {"model", learners::to_json(e.model)}});
  }
  return j;
}

nlohmann::json schema_slice(const std::string& manifest_text, const std::string& task_id) {
  const auto doc = nlohmann::json::parse(manifest_text);
  const auto& task = doc.at("tasks").at(task_id);
  const auto& source = doc.at("sources").at(task.at("source").get<std::string>());
  return {{"manifest_version", doc.at("manifest_version")}, {"task", task}, {"source", source}};
}

const TaskData& find_task(const std::vector<TaskData>& tasks, const std::string& id) {
  for (const auto& t : tasks) {
    if (t.task_id == id) return t;
  }
  throw BundleError("task '" + id + "' was not prepared");
}

}  // namespace

std::string Bundle::content_hash() const { return sha256_hex(content_json(*this).dump()); }

std::string Bundle::version() const { return content_hash().substr(0, 12); }

const BundleEntry& Bundle::entry(std::string_view role) const {
  for (const auto& e : entries) {
    if (e.role == role) return e;
  }
  throw BundleError("bundle has no '" + std::string(role) + "' model");
}

nlohmann::json Bundle::to_json() const {
  auto j = content_json(*this);
  const auto hash = sha256_hex(j.dump());
  j["sha256"] = hash;
  j["bundle_version"] = hash.substr(0, 12);
  return j;
}

Bundle Bundle::from_json(const nlohmann::json& doc) {
  Bundle b;
  try {
    if (doc.at("format").get<std::string>() != "mofit-model-bundle") throw BundleError("not a model bundle");
    b.manifest_text = doc.at("manifest").get<std::string>();
    for (const auto& m : doc.at("models")) {
      BundleEntry e;
      e.role = m.at("role").get<std::string>();
      e.task_id = m.at("task").get<std::string>();
      e.algorithm = hpo::parse_algorithm(m.at("algorithm").get<std::string>());
      e.sampler = hpo::parse_sampler(m.at("sampler").get<std::string>());
      e.params = hpo::params_from_json(m.at("params"));
      e.cv_objective = m.at("cv_objective").get<double>();
      e.test_metrics = m.at("test_metrics");
      e.schema = m.at("schema");
      e.model = learners::model_from_json(m.at("model"));
      b.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw BundleError(std::string("malformed bundle: ") + e.what());
  }
  const auto recorded = doc.value("sha256", std::string());
  if (recorded != b.content_hash()) throw BundleError("bundle hash mismatch");
  return b;
}

Bundle export_models(const BenchmarkConfig& config, const std::vector<TaskData>& tasks,
                     const std::vector<Selection>& selections) {
  Bundle bundle;
  bundle.manifest_text = Manifest::builtin().text();
  for (const auto& sel : selections) {
    const auto& task = find_task(tasks, sel.task_id);
    std::vector<hpo::SamplerKind> candidates;
    if (sel.sampler) {
      candidates.push_back(*sel.sampler);
    } else {
      candidates = config.samplers;
    }
    std::optional<hpo::Study> chosen;
    hpo::SamplerKind chosen_sampler = hpo::SamplerKind::grid;
    for (auto s : candidates) {
      const auto path = history_path(config.output_dir, sel.task_id, sel.algorithm, s);
      if (!fs::is_regular_file(path)) continue;
      auto study = hpo::Study::from_json(nlohmann::json::parse(read_file(path)));
      if (study.n_complete() == 0) continue;
      if (!chosen || hpo::better(study.direction, study.best_trial().objective, chosen->best_trial().objective)) {
        chosen = std::move(study);
        chosen_sampler = s;
      }
    }
    if (!chosen) {
      throw BundleError("missing study for " + sel.task_id + "/" + std::string(hpo::to_string(sel.algorithm)) +
                        " under '" + config.output_dir.string() + "'");
    }
    const auto& best = chosen->best_trial();
    BundleEntry e;
    e.role = sel.role;
    e.task_id = sel.task_id;
    e.algorithm = sel.algorithm;
    e.sampler = chosen_sampler;
    e.params = best.params;
    e.cv_objective = best.objective;
    e.schema = schema_slice(bundle.manifest_text, sel.task_id);
    e.model = hpo::fit_algorithm(sel.algorithm, best.params, task.split.train,
                                 task_seeds(config.seed, sel.task_id).refit(sel.algorithm));
    std::size_t excluded = 0;
    const auto report = evaluate(task.split.test, learners::predict_all(e.model, task.split.test.X), &excluded);
    if (report.task == metrics::Task::classification) {
      e.test_metrics = {{"accuracy", report.accuracy}, {"n", report.n}};
    } else {
      e.test_metrics = {{"rmse", report.rmse}, {"mae", report.mae}, {"mape", report.mape}, {"n", report.n}};
    }
    bundle.entries.push_back(std::move(e));
  }
  return bundle;
}

void save_bundle(const Bundle& bundle, const fs::path& path) { write_file_atomic(path, bundle.to_json().dump() + "\n"); }

Bundle load_bundle(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw BundleError(path.string() + ": " + e.what());
  }
  return Bundle::from_json(doc);
}

}  // namespace mofit::experiment

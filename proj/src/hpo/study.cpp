#include "mofit/hpo/study.hpp"

#include <stdexcept>

namespace mofit::hpo {

std::string_view to_string(Direction d) { return d == Direction::maximize ? "maximize" : "minimize"; }

std::string_view to_string(SamplerKind s) {
  switch (s) {
    case SamplerKind::grid: return "grid";
    case SamplerKind::random: return "random";
    case SamplerKind::genetic: return "genetic";
    case SamplerKind::tpe: return "tpe";
  }
  return "";
}

SamplerKind parse_sampler(std::string_view name) {
  for (auto s : {SamplerKind::grid, SamplerKind::random, SamplerKind::genetic, SamplerKind::tpe}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown sampler '" + std::string(name) + "'");
}

const Trial& Study::best_trial() const {
  const Trial* best = nullptr;
  for (const auto& t : trials) {
    if (t.complete() && (!best || better(direction, t.objective, best->objective))) best = &t;
  }
  if (!best) throw std::logic_error("study has no complete trial");
  return *best;
}

std::size_t Study::n_complete() const {
  std::size_t n = 0;
  for (const auto& t : trials) n += t.complete() ? 1 : 0;
  return n;
}

std::vector<HistoryRow> history(const Study& study) {
  std::vector<HistoryRow> rows;
  for (const auto& t : study.trials) {
    if (!t.complete()) continue;
    const double best =
        rows.empty() || better(study.direction, t.objective, rows.back().best_so_far) ? t.objective : rows.back().best_so_far;
    rows.push_back({t.id, t.objective, best});
  }
  if (rows.empty()) throw std::logic_error("study has no complete trial");
  return rows;
}

nlohmann::json Study::to_json() const {
  nlohmann::json j;
  j["sampler"] = to_string(sampler);
  j["direction"] = to_string(direction);
  j["seed"] = seed;
  j["budget"] = budget;
  j["trials"] = nlohmann::json::array();
  for (const auto& t : trials) {
    nlohmann::json tj;
    tj["id"] = t.id;
    tj["params"] = hpo::to_json(t.params);
    tj["status"] = t.complete() ? "complete" : "failed";
    if (t.complete()) {
      tj["objective"] = t.objective;
    } else {
      tj["objective"] = nullptr;
      tj["error"] = t.error;
    }
    j["trials"].push_back(std::move(tj));
  }
  if (n_complete() > 0) {
    j["best_trial"] = best_trial().id;
    auto& h = j["history"] = nlohmann::json::array();
    for (const auto& r : history(*this)) {
      h.push_back({{"trial", r.trial_id}, {"objective", r.objective}, {"best_so_far", r.best_so_far}});
    }
  } else {
    j["best_trial"] = nullptr;
    j["history"] = nlohmann::json::array();
  }
  return j;
}

Study Study::from_json(const nlohmann::json& j) {
  Study s;
  s.sampler = parse_sampler(j.at("sampler").get<std::string>());
  const auto dir = j.at("direction").get<std::string>();
  if (dir != "maximize" && dir != "minimize") throw std::invalid_argument("unknown direction '" + dir + "'");
  s.direction = dir == "maximize" ? Direction::maximize : Direction::minimize;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.budget = j.at("budget").get<std::size_t>();
  for (const auto& tj : j.at("trials")) {
    Trial t;
    t.id = tj.at("id").get<std::size_t>();
    t.params = params_from_json(tj.at("params"));
    t.status = tj.at("status").get<std::string>() == "complete" ? TrialStatus::complete : TrialStatus::failed;
    if (t.complete()) {
      t.objective = tj.at("objective").get<double>();
    } else {
      t.error = tj.value("error", "");
    }
    s.trials.push_back(std::move(t));
  }
  return s;
}

}  // namespace mofit::hpo

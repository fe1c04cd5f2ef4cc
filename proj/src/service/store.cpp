#include "mofit/service/store.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mofit/io.hpp"

namespace mofit::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSnapshot = "store.json";
constexpr const char* kJournal = "journal.jsonl";

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

void require_id(const std::string& id, const char* what) {
  if (!valid_id(id)) {
    throw StoreError(400, std::string(what) + " must be 1-64 characters of [A-Za-z0-9._-]");
  }
}

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) throw StoreError(400, std::string(what) + " must be a finite number > 0");
}

std::string sequence_id(const char* prefix, std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06llu", prefix, static_cast<unsigned long long>(n));
  return buf;
}

json macros_json(const Macros& m) {
  return {{"kcal", m.kcal}, {"protein_g", m.protein_g}, {"carbs_g", m.carbs_g}, {"fat_g", m.fat_g}};
}

Macros macros_from(const json& j) {
  return {j.at("kcal").get<double>(), j.at("protein_g").get<double>(), j.at("carbs_g").get<double>(),
          j.at("fat_g").get<double>()};
}

json food_json(const FoodItem& f) { return {{"food_id", f.food_id}, {"name", f.name}, {"per_100g", macros_json(f.per_100g)}}; }

FoodItem food_from(const json& j) {
  return {j.at("food_id").get<std::string>(), j.at("name").get<std::string>(), macros_from(j.at("per_100g"))};
}

json user_json(const UserProfile& u) {
  return {{"user_id", u.user_id},
          {"start_weight_kg", u.start_weight_kg},
          {"goal_weight_kg", u.goal_weight_kg},
          {"start_date", format_date(u.start_date)},
          {"goal_date", format_date(u.goal_date)}};
}

UserProfile user_from(const json& j) {
  return {j.at("user_id").get<std::string>(), j.at("start_weight_kg").get<double>(),
          j.at("goal_weight_kg").get<double>(), parse_date(j.at("start_date").get<std::string>()),
          parse_date(j.at("goal_date").get<std::string>())};
}

json plan_json(const DietPlan& p) {
  json entries = json::array();
  for (const auto& e : p.entries) entries.push_back({{"food_id", e.food_id}, {"grams", e.grams}});
  return {{"plan_id", p.plan_id}, {"user_id", p.user_id}, {"entries", entries}};
}

DietPlan plan_from(const json& j) {
  DietPlan p{j.at("plan_id").get<std::string>(), j.at("user_id").get<std::string>(), {}};
  for (const auto& e : j.at("entries")) p.entries.push_back({e.at("food_id").get<std::string>(), e.at("grams").get<double>()});
  return p;
}

json reading_json(const ScaleReading& r) {
  return {{"device_id", r.device_id}, {"grams", r.grams}, {"timestamp_ms", r.timestamp_ms}};
}

ScaleReading reading_from(const json& j) {
  return {j.at("device_id").get<std::string>(), j.at("grams").get<double>(), j.at("timestamp_ms").get<std::int64_t>()};
}

void validate_food(const FoodItem& f) {
  require_id(f.food_id, "food_id");
  if (f.name.empty()) throw StoreError(400, "name must not be empty");
  const double values[] = {f.per_100g.kcal, f.per_100g.protein_g, f.per_100g.carbs_g, f.per_100g.fat_g};
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw StoreError(400, "macro values must be finite and >= 0");
  }
}

}  // namespace

std::int64_t parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw StoreError(400, "date '" + text + "' must be YYYY-MM-DD");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw StoreError(400, "date '" + text + "' does not exist");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string format_date(std::int64_t days) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

Macros& Macros::operator+=(const Macros& o) {
  kcal += o.kcal;
  protein_g += o.protein_g;
  carbs_g += o.carbs_g;
  fat_g += o.fat_g;
  return *this;
}

json to_json(const Macros& m) { return macros_json(m); }

Macros FoodItem::for_grams(double grams) const {
  const double f = grams / 100.0;
  return {f * per_100g.kcal, f * per_100g.protein_g, f * per_100g.carbs_g, f * per_100g.fat_g};
}

double UserProfile::target_on(std::int64_t day) const {
  const double t = static_cast<double>(day - start_date) / static_cast<double>(goal_date - start_date);
  return start_weight_kg + (goal_weight_kg - start_weight_kg) * t;
}

std::vector<FoodItem> load_foods(const fs::path& path) {
  const auto doc = json::parse(read_file(path));
  std::vector<FoodItem> out;
  for (const auto& f : doc.at("foods")) {
    out.push_back(food_from(f));
    validate_food(out.back());
  }
  return out;
}

Store::Store(fs::path dir, const std::vector<FoodItem>& seed_foods, std::size_t compact_every)
    : dir_(std::move(dir)), compact_every_(std::max<std::size_t>(1, compact_every)) {
  fs::create_directories(dir_);
  std::uint64_t applied = 0;
  if (fs::exists(dir_ / kSnapshot)) {
    const auto snap = json::parse(read_file(dir_ / kSnapshot));
    state_ = state_from_json(snap);
    applied = snap.value("applied_seq", std::uint64_t{0});
  }
  if (fs::exists(dir_ / kJournal)) {
    std::istringstream lines(read_file(dir_ / kJournal));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      json op;
      try {
        op = json::parse(line);
      } catch (const json::exception&) {
        break;  // torn final write
      }
      if (op.at("seq").get<std::uint64_t>() <= applied) continue;
      apply(state_, op);
      applied = op.at("seq").get<std::uint64_t>();
    }
  }
  state_seq_ = applied;
  std::lock_guard lock(mutex_);
  compact_locked();
  if (state_.foods.empty()) {
    for (const auto& f : seed_foods) {
      validate_food(f);
      commit({{"op", "add_food"}, {"food", food_json(f)}});
    }
  }
}

json Store::state_to_json(const State& s) {
  json j;
  j["foods"] = json::array();
  for (const auto& [id, f] : s.foods) j["foods"].push_back(food_json(f));
  j["users"] = json::array();
  for (const auto& [id, u] : s.users) {
    auto uj = user_json(u);
    uj["progress"] = json::array();
    if (const auto it = s.progress.find(id); it != s.progress.end()) {
      for (const auto& [day, kg] : it->second) uj["progress"].push_back({{"date", format_date(day)}, {"weight_kg", kg}});
    }
    j["users"].push_back(std::move(uj));
  }
  j["plans"] = json::array();
  for (const auto& [id, p] : s.plans) j["plans"].push_back(plan_json(p));
  j["devices"] = json::array();
  for (const auto& [id, readings] : s.devices) {
    json rj = json::array();
    for (const auto& r : readings) rj.push_back({{"grams", r.grams}, {"timestamp_ms", r.timestamp_ms}});
    j["devices"].push_back({{"device_id", id}, {"readings", rj}});
  }
  j["next_user"] = s.next_user;
  j["next_plan"] = s.next_plan;
  return j;
}

Store::State Store::state_from_json(const json& j) {
  State s;
  for (const auto& f : j.at("foods")) {
    auto food = food_from(f);
    s.foods.emplace(food.food_id, std::move(food));
  }
  for (const auto& uj : j.at("users")) {
    auto u = user_from(uj);
    auto& series = s.progress[u.user_id];
    for (const auto& e : uj.at("progress")) series[parse_date(e.at("date").get<std::string>())] = e.at("weight_kg").get<double>();
    s.users.emplace(u.user_id, std::move(u));
  }
  for (const auto& p : j.at("plans")) {
    auto plan = plan_from(p);
    s.plans.emplace(plan.plan_id, std::move(plan));
  }
  for (const auto& d : j.at("devices")) {
    const auto id = d.at("device_id").get<std::string>();
    auto& readings = s.devices[id];
    for (const auto& r : d.at("readings")) {
      readings.push_back({id, r.at("grams").get<double>(), r.at("timestamp_ms").get<std::int64_t>()});
    }
  }
  s.next_user = j.at("next_user").get<std::uint64_t>();
  s.next_plan = j.at("next_plan").get<std::uint64_t>();
  return s;
}

void Store::apply(State& s, const json& op) {
  const auto kind = op.at("op").get<std::string>();
  if (kind == "add_food") {
    auto f = food_from(op.at("food"));
    s.foods.insert_or_assign(f.food_id, std::move(f));
  } else if (kind == "create_user") {
    auto u = user_from(op.at("user"));
    s.progress[u.user_id];
    s.users.insert_or_assign(u.user_id, std::move(u));
    s.next_user = op.at("next_user").get<std::uint64_t>();
  } else if (kind == "progress") {
    s.progress[op.at("user_id").get<std::string>()][parse_date(op.at("date").get<std::string>())] =
        op.at("weight_kg").get<double>();
  } else if (kind == "create_plan") {
    auto p = plan_from(op.at("plan"));
    s.plans.insert_or_assign(p.plan_id, std::move(p));
    s.next_plan = op.at("next_plan").get<std::uint64_t>();
  } else if (kind == "register_device") {
    s.devices[op.at("device_id").get<std::string>()];
  } else if (kind == "reading") {
    auto r = reading_from(op.at("reading"));
    s.devices[r.device_id].push_back(std::move(r));
  } else {
    throw std::runtime_error("unknown journal operation '" + kind + "'");
  }
}

void Store::commit(json op) {
  op["seq"] = state_seq_ + 1;
  journal_ << op.dump() << '\n';
  journal_.flush();
  if (!journal_) throw std::runtime_error("journal write failed in '" + dir_.string() + "'");
  apply(state_, op);
  ++state_seq_;
  if (++since_compact_ >= compact_every_) compact_locked();
}

json Store::snapshot() const {
  std::lock_guard lock(mutex_);
  return state_to_json(state_);
}

void Store::compact() {
  std::lock_guard lock(mutex_);
  compact_locked();
}

void Store::compact_locked() {
  auto snap = state_to_json(state_);
  snap["applied_seq"] = state_seq_;
  write_file_atomic(dir_ / kSnapshot, snap.dump(1) + "\n");
  journal_.close();
  journal_.open(dir_ / kJournal, std::ios::binary | std::ios::trunc);
  if (!journal_) throw std::runtime_error("cannot open journal in '" + dir_.string() + "'");
  since_compact_ = 0;
}

std::vector<FoodItem> Store::foods() const {
  std::lock_guard lock(mutex_);
  std::vector<FoodItem> out;
  for (const auto& [id, f] : state_.foods) out.push_back(f);
  return out;
}

FoodItem Store::food(const std::string& food_id) const {
  std::lock_guard lock(mutex_);
  const auto it = state_.foods.find(food_id);
  if (it == state_.foods.end()) throw StoreError(404, "unknown food '" + food_id + "'");
  return it->second;
}

FoodItem Store::add_food(const FoodItem& food) {
  validate_food(food);
  std::lock_guard lock(mutex_);
  if (state_.foods.contains(food.food_id)) throw StoreError(409, "food '" + food.food_id + "' already exists");
  commit({{"op", "add_food"}, {"food", food_json(food)}});
  return food;
}

UserProfile Store::create_user(UserProfile profile) {
  require_positive(profile.start_weight_kg, "start_weight_kg");
  require_positive(profile.goal_weight_kg, "goal_weight_kg");
  if (profile.start_date >= profile.goal_date) throw StoreError(400, "start_date must be before goal_date");
  std::lock_guard lock(mutex_);
  auto next = state_.next_user;
  if (profile.user_id.empty()) {
    do {
      profile.user_id = sequence_id("user", next++);
    } while (state_.users.contains(profile.user_id));
  } else {
    require_id(profile.user_id, "user_id");
    if (state_.users.contains(profile.user_id)) throw StoreError(409, "user '" + profile.user_id + "' already exists");
  }
  commit({{"op", "create_user"}, {"user", user_json(profile)}, {"next_user", next}});
  return profile;
}

UserProfile Store::user(const std::string& user_id) const {
  std::lock_guard lock(mutex_);
  const auto it = state_.users.find(user_id);
  if (it == state_.users.end()) throw StoreError(404, "unknown user '" + user_id + "'");
  return it->second;
}

void Store::add_progress(const std::string& user_id, std::int64_t day, double weight_kg) {
  require_positive(weight_kg, "actual_weight_kg");
  std::lock_guard lock(mutex_);
  const auto it = state_.users.find(user_id);
  if (it == state_.users.end()) throw StoreError(404, "unknown user '" + user_id + "'");
  const auto& u = it->second;
  if (day < u.start_date || day > u.goal_date) {
    throw StoreError(400, "date " + format_date(day) + " is outside [" + format_date(u.start_date) + ", " +
                              format_date(u.goal_date) + "]");
  }
  if (state_.progress[user_id].contains(day)) {
    throw StoreError(409, "an entry for " + format_date(day) + " already exists");
  }
  commit({{"op", "progress"}, {"user_id", user_id}, {"date", format_date(day)}, {"weight_kg", weight_kg}});
}

ProgressSeries Store::progress_series(const std::string& user_id) const {
  std::lock_guard lock(mutex_);
  const auto it = state_.users.find(user_id);
  if (it == state_.users.end()) throw StoreError(404, "unknown user '" + user_id + "'");
  ProgressSeries s;
  for (const auto& [day, kg] : state_.progress.at(user_id)) {
    s.dates.push_back(day);
    s.actual.push_back(kg);
    s.target.push_back(it->second.target_on(day));
  }
  return s;
}

DietPlan Store::create_plan(const std::string& user_id, const std::vector<PlanEntry>& entries) {
  if (entries.empty()) throw StoreError(400, "a plan needs at least one entry");
  std::lock_guard lock(mutex_);
  if (!state_.users.contains(user_id)) throw StoreError(404, "unknown user '" + user_id + "'");
  for (const auto& e : entries) {
    if (!state_.foods.contains(e.food_id)) throw StoreError(400, "unknown food '" + e.food_id + "'");
    require_positive(e.grams, "grams");
  }
  DietPlan plan{sequence_id("plan", state_.next_plan), user_id, entries};
  commit({{"op", "create_plan"}, {"plan", plan_json(plan)}, {"next_plan", state_.next_plan + 1}});
  return plan;
}

DietPlan Store::plan(const std::string& plan_id) const {
  std::lock_guard lock(mutex_);
  const auto it = state_.plans.find(plan_id);
  if (it == state_.plans.end()) throw StoreError(404, "unknown plan '" + plan_id + "'");
  return it->second;
}

Macros Store::plan_totals(const DietPlan& plan) const {
  Macros total;
  for (const auto& e : plan.entries) total += food(e.food_id).for_grams(e.grams);
  return total;
}

json Store::export_plan(const std::string& plan_id) const {
  const auto p = plan(plan_id);
  json doc;
  doc["document"] = "mofit-diet-plan";
  doc["document_version"] = 1;
  doc["plan_id"] = p.plan_id;
  doc["user_id"] = p.user_id;
  doc["entries"] = json::array();
  for (const auto& e : p.entries) {
    const auto f = food(e.food_id);
    doc["entries"].push_back({{"food_id", f.food_id}, {"name", f.name}, {"grams", e.grams}, {"macros", macros_json(f.for_grams(e.grams))}});
  }
  doc["totals"] = macros_json(plan_totals(p));
  return doc;
}

bool Store::register_device(const std::string& device_id) {
  require_id(device_id, "device_id");
  std::lock_guard lock(mutex_);
  if (state_.devices.contains(device_id)) return false;
  commit({{"op", "register_device"}, {"device_id", device_id}});
  return true;
}

void Store::ingest_reading(const ScaleReading& reading) {
  if (!std::isfinite(reading.grams) || reading.grams < 0.0) throw StoreError(400, "grams must be finite and >= 0");
  std::lock_guard lock(mutex_);
  const auto it = state_.devices.find(reading.device_id);
  if (it == state_.devices.end()) throw StoreError(404, "unknown device '" + reading.device_id + "'");
  if (!it->second.empty() && reading.timestamp_ms <= it->second.back().timestamp_ms) {
    throw StoreError(409, "timestamp " + std::to_string(reading.timestamp_ms) + " is not after the latest reading (" +
                              std::to_string(it->second.back().timestamp_ms) + ")");
  }
  commit({{"op", "reading"}, {"reading", reading_json(reading)}});
}

ScaleReading Store::latest_reading(const std::string& device_id) const {
  std::lock_guard lock(mutex_);
  const auto it = state_.devices.find(device_id);
  if (it == state_.devices.end()) throw StoreError(404, "unknown device '" + device_id + "'");
  if (it->second.empty()) throw StoreError(404, "device '" + device_id + "' has no readings");
  return it->second.back();
}

Macros Store::nutrition_for(const std::string& device_id, const std::string& food_id) const {
  const auto r = latest_reading(device_id);
  return food(food_id).for_grams(r.grams);
}

}  // namespace mofit::service

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mofit::service {

/// Days since 1970-01-01 for a proleptic Gregorian "YYYY-MM-DD"; throws on malformed text.
std::int64_t parse_date(const std::string& text);
std::string format_date(std::int64_t days);

struct Macros {
  double kcal = 0.0;
  double protein_g = 0.0;
  double carbs_g = 0.0;
  double fat_g = 0.0;

  Macros& operator+=(const Macros& o);
  bool operator==(const Macros&) const = default;
};

nlohmann::json to_json(const Macros& m);

struct FoodItem {
  std::string food_id;
  std::string name;
  Macros per_100g;

  /// grams/100 times each per-100 g value.
  Macros for_grams(double grams) const;
};

struct UserProfile {
  std::string user_id;
  double start_weight_kg = 0.0;
  double goal_weight_kg = 0.0;
  std::int64_t start_date = 0;
  std::int64_t goal_date = 0;

  /// Straight line from (start_date, start_weight) to (goal_date, goal_weight).
  double target_on(std::int64_t day) const;
};

struct ProgressSeries {
  std::vector<std::int64_t> dates;
  std::vector<double> actual;
  std::vector<double> target;
};

struct PlanEntry {
  std::string food_id;
  double grams = 0.0;
};

struct DietPlan {
  std::string plan_id;
  std::string user_id;
  std::vector<PlanEntry> entries;
};

struct ScaleReading {
  std::string device_id;
  double grams = 0.0;
  std::int64_t timestamp_ms = 0;
};

/// Error with an HTTP-style status: 400 invalid input, 404 unknown entity, 409 conflict.
class StoreError : public std::runtime_error {
 public:
  StoreError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// File-backed store. Every mutation is appended to a journal before it is applied;
/// the journal is folded into an atomically replaced snapshot on open and every
/// `compact_every` mutations. One mutex serializes all writes.
class Store {
 public:
  /// Opens (or creates) the store in `dir`. Foods from `seed_foods` are added when the
  /// store has none yet.
  explicit Store(std::filesystem::path dir, const std::vector<FoodItem>& seed_foods = {},
                 std::size_t compact_every = 256);

  // Foods.
  std::vector<FoodItem> foods() const;
  FoodItem food(const std::string& food_id) const;
  FoodItem add_food(const FoodItem& food);

  // Users and progress.
  UserProfile create_user(UserProfile profile);
  UserProfile user(const std::string& user_id) const;
  void add_progress(const std::string& user_id, std::int64_t day, double weight_kg);
  ProgressSeries progress_series(const std::string& user_id) const;

  // Diet plans.
  DietPlan create_plan(const std::string& user_id, const std::vector<PlanEntry>& entries);
  DietPlan plan(const std::string& plan_id) const;
  Macros plan_totals(const DietPlan& plan) const;
  nlohmann::json export_plan(const std::string& plan_id) const;

  // Scale devices and readings.
  bool register_device(const std::string& device_id);  // false if already registered
  void ingest_reading(const ScaleReading& reading);
  ScaleReading latest_reading(const std::string& device_id) const;
  Macros nutrition_for(const std::string& device_id, const std::string& food_id) const;

  /// Canonical serialization of the whole state (what the snapshot holds).
  nlohmann::json snapshot() const;
  /// Writes the snapshot and truncates the journal.
  void compact();

 private:
  struct State {
    std::map<std::string, FoodItem> foods;
    std::map<std::string, UserProfile> users;
    std::map<std::string, std::map<std::int64_t, double>> progress;  // user -> day -> kg
    std::map<std::string, DietPlan> plans;
    std::map<std::string, std::vector<ScaleReading>> devices;  // device -> readings in order
    std::uint64_t next_user = 1;
    std::uint64_t next_plan = 1;
  };

  static nlohmann::json state_to_json(const State& s);
  static State state_from_json(const nlohmann::json& j);
  static void apply(State& s, const nlohmann::json& op);
  void commit(nlohmann::json op);  // caller holds mutex_
  void compact_locked();

  std::filesystem::path dir_;
  std::size_t compact_every_;
  std::size_t since_compact_ = 0;
  std::uint64_t state_seq_ = 0;  // last applied journal sequence number
  mutable std::mutex mutex_;
  State state_;
  std::ofstream journal_;
};

std::vector<FoodItem> load_foods(const std::filesystem::path& path);

}  // namespace mofit::service

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mofit/hpo/space.hpp"

namespace mofit::hpo {

enum class Direction { maximize, minimize };
enum class SamplerKind { grid, random, genetic, tpe };
enum class TrialStatus { complete, failed };

std::string_view to_string(Direction d);
std::string_view to_string(SamplerKind s);
SamplerKind parse_sampler(std::string_view name);

/// True when `a` is strictly better than `b` in direction `d`.
inline bool better(Direction d, double a, double b) { return d == Direction::maximize ? a > b : a < b; }

struct Trial {
  std::size_t id = 0;
  Params params;
  double objective = 0.0;  // meaningful only when complete
  TrialStatus status = TrialStatus::complete;
  std::string error;

  bool complete() const { return status == TrialStatus::complete; }
  bool operator==(const Trial&) const = default;
};

struct HistoryRow {
  std::size_t trial_id = 0;
  double objective = 0.0;
  double best_so_far = 0.0;
};

class Study {
 public:
  Direction direction = Direction::maximize;
  SamplerKind sampler = SamplerKind::random;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::vector<Trial> trials;

  /// Best complete trial; the earliest wins ties. Throws if none completed.
  const Trial& best_trial() const;
  std::size_t n_complete() const;

  nlohmann::json to_json() const;
  static Study from_json(const nlohmann::json& j);
  bool operator==(const Study&) const = default;
};

/// Complete trials in id order with the running best. Throws on a study with none.
std::vector<HistoryRow> history(const Study& study);

}  // namespace mofit::hpo

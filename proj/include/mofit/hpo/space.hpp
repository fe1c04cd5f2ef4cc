#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mofit/rng.hpp"

namespace mofit::hpo {

using Value = std::variant<std::int64_t, double, std::string>;
using Params = std::map<std::string, Value>;

std::string to_string(const Value& v);
nlohmann::json to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Params& p);
Params params_from_json(const nlohmann::json& j);

/// Typed access with a clear error when a parameter is absent or has the wrong kind.
/// get_real accepts integers.
std::int64_t get_int(const Params& p, const std::string& name);
double get_real(const Params& p, const std::string& name);
const std::string& get_text(const Params& p, const std::string& name);

struct SpaceError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class ParamSpec {
 public:
  enum class Kind { integer, continuous, categorical, grid_values };

  static ParamSpec integer(std::string name, std::int64_t lo, std::int64_t hi);
  static ParamSpec continuous(std::string name, double lo, double hi, bool log_scale = false);
  static ParamSpec categorical(std::string name, std::vector<Value> values);
  static ParamSpec grid_values(std::string name, std::vector<Value> values);

  /// Explicit points used by grid search; other samplers ignore them.
  ParamSpec& with_grid(std::vector<Value> points);

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  bool log_scale() const { return log_; }
  /// Categorical choices or grid_values list.
  const std::vector<Value>& values() const { return values_; }

  /// Grid points: the explicit grid, else the value list, else every integer in range.
  /// Throws SpaceError for a continuous spec without explicit points.
  std::vector<Value> grid_points() const;

  bool contains(const Value& v) const;
  Value sample(Rng& rng) const;

  /// Numeric kinds map to the sampling axis (log for log-scale) and back.
  double to_axis(const Value& v) const;
  Value from_axis(double x) const;
  double axis_lo() const;
  double axis_hi() const;
  bool numeric() const { return kind_ == Kind::integer || kind_ == Kind::continuous; }

  nlohmann::json to_json() const;
  static ParamSpec from_json(const nlohmann::json& j);

 private:
  ParamSpec(std::string name, Kind kind) : name_(std::move(name)), kind_(kind) {}
  void validate() const;

  std::string name_;
  Kind kind_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  bool log_ = false;
  std::vector<Value> values_;
  std::optional<std::vector<Value>> grid_;
};

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParamSpec> specs);

  const std::vector<ParamSpec>& specs() const { return specs_; }
  const ParamSpec& spec(const std::string& name) const;
  std::size_t size() const { return specs_.size(); }

  /// Product of grid sizes.
  std::size_t grid_size() const;
  bool contains(const Params& p) const;
  Params sample(Rng& rng) const;

  nlohmann::json to_json() const;
  static SearchSpace from_json(const nlohmann::json& j);

 private:
  std::vector<ParamSpec> specs_;
};

}  // namespace mofit::hpo

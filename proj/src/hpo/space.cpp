#include "mofit/hpo/space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mofit::hpo {

std::string to_string(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return nlohmann::json(*d).dump();
  return std::get<std::string>(v);
}

nlohmann::json to_json(const Value& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

Value value_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw SpaceError("parameter value must be a number or a string");
}

nlohmann::json to_json(const Params& p) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : p) j[k] = to_json(v);
  return j;
}

Params params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SpaceError("params must be an object");
  Params p;
  for (const auto& [k, v] : j.items()) p[k] = value_from_json(v);
  return p;
}

namespace {

const Value& lookup(const Params& p, const std::string& name) {
  const auto it = p.find(name);
  if (it == p.end()) throw SpaceError("missing parameter '" + name + "'");
  return it->second;
}

}  // namespace

std::int64_t get_int(const Params& p, const std::string& name) {
  const auto& v = lookup(p, name);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  throw SpaceError("parameter '" + name + "' must be an integer");
}

double get_real(const Params& p, const std::string& name) {
  const auto& v = lookup(p, name);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw SpaceError("parameter '" + name + "' must be numeric");
}

const std::string& get_text(const Params& p, const std::string& name) {
  const auto& v = lookup(p, name);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw SpaceError("parameter '" + name + "' must be text");
}

ParamSpec ParamSpec::integer(std::string name, std::int64_t lo, std::int64_t hi) {
  ParamSpec s(std::move(name), Kind::integer);
  s.lo_ = static_cast<double>(lo);
  s.hi_ = static_cast<double>(hi);
  s.validate();
  return s;
}

ParamSpec ParamSpec::continuous(std::string name, double lo, double hi, bool log_scale) {
  ParamSpec s(std::move(name), Kind::continuous);
  s.lo_ = lo;
  s.hi_ = hi;
  s.log_ = log_scale;
  s.validate();
  return s;
}

ParamSpec ParamSpec::categorical(std::string name, std::vector<Value> values) {
  ParamSpec s(std::move(name), Kind::categorical);
  s.values_ = std::move(values);
  s.validate();
  return s;
}

ParamSpec ParamSpec::grid_values(std::string name, std::vector<Value> values) {
  ParamSpec s(std::move(name), Kind::grid_values);
  s.values_ = std::move(values);
  s.validate();
  return s;
}

ParamSpec& ParamSpec::with_grid(std::vector<Value> points) {
  if (points.empty()) throw SpaceError("grid for '" + name_ + "' is empty");
  for (const auto& p : points) {
    if (!contains(p)) throw SpaceError("grid point " + to_string(p) + " outside '" + name_ + "'");
  }
  grid_ = std::move(points);
  return *this;
}

void ParamSpec::validate() const {
  if (name_.empty()) throw SpaceError("parameter name must be nonempty");
  switch (kind_) {
    case Kind::integer:
    case Kind::continuous:
      if (!(std::isfinite(lo_) && std::isfinite(hi_) && lo_ < hi_)) {
        throw SpaceError("'" + name_ + "' requires lo < hi");
      }
      if (log_ && !(lo_ > 0.0)) throw SpaceError("'" + name_ + "' log scale requires lo > 0");
      break;
    case Kind::categorical:
    case Kind::grid_values: {
      if (values_.empty()) throw SpaceError("'" + name_ + "' value list is empty");
      for (std::size_t i = 0; i < values_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          if (values_[i] == values_[j]) throw SpaceError("'" + name_ + "' lists a value twice");
        }
      }
      break;
    }
  }
}

std::vector<Value> ParamSpec::grid_points() const {
  if (grid_) return *grid_;
  switch (kind_) {
    case Kind::categorical:
    case Kind::grid_values: return values_;
    case Kind::integer: {
      std::vector<Value> out;
      for (auto v = static_cast<std::int64_t>(lo_); v <= static_cast<std::int64_t>(hi_); ++v) out.emplace_back(v);
      return out;
    }
    case Kind::continuous: break;
  }
  throw SpaceError("continuous parameter '" + name_ + "' has no grid values");
}

bool ParamSpec::contains(const Value& v) const {
  switch (kind_) {
    case Kind::integer: {
      const auto* i = std::get_if<std::int64_t>(&v);
      return i && static_cast<double>(*i) >= lo_ && static_cast<double>(*i) <= hi_;
    }
    case Kind::continuous: {
      double x;
      if (const auto* d = std::get_if<double>(&v)) {
        x = *d;
      } else if (const auto* i = std::get_if<std::int64_t>(&v)) {
        x = static_cast<double>(*i);
      } else {
        return false;
      }
      return x >= lo_ && x <= hi_;
    }
    case Kind::categorical:
    case Kind::grid_values: return std::find(values_.begin(), values_.end(), v) != values_.end();
  }
  return false;
}

Value ParamSpec::sample(Rng& rng) const {
  switch (kind_) {
    case Kind::integer: return rng.integer(static_cast<std::int64_t>(lo_), static_cast<std::int64_t>(hi_));
    case Kind::continuous: return from_axis(rng.uniform(axis_lo(), axis_hi()));
    case Kind::categorical:
    case Kind::grid_values: return values_[rng.index(values_.size())];
  }
  return {};
}

double ParamSpec::axis_lo() const {
  if (kind_ == Kind::integer) return lo_ - 0.5;
  return log_ ? std::log(lo_) : lo_;
}

double ParamSpec::axis_hi() const {
  if (kind_ == Kind::integer) return hi_ + 0.5;
  return log_ ? std::log(hi_) : hi_;
}

double ParamSpec::to_axis(const Value& v) const {
  double x = 0.0;
  if (const auto* d = std::get_if<double>(&v)) {
    x = *d;
  } else if (const auto* i = std::get_if<std::int64_t>(&v)) {
    x = static_cast<double>(*i);
  } else {
    throw SpaceError("'" + name_ + "' is not numeric");
  }
  return log_ ? std::log(x) : x;
}

Value ParamSpec::from_axis(double x) const {
  if (kind_ == Kind::integer) {
    const double r = std::clamp(std::round(x), lo_, hi_);
    return static_cast<std::int64_t>(r);
  }
  const double v = log_ ? std::exp(x) : x;
  return std::clamp(v, lo_, hi_);
}

nlohmann::json ParamSpec::to_json() const {
  nlohmann::json j;
  j["name"] = name_;
  switch (kind_) {
    case Kind::integer:
      j["kind"] = "integer";
      j["lo"] = static_cast<std::int64_t>(lo_);
      j["hi"] = static_cast<std::int64_t>(hi_);
      break;
    case Kind::continuous:
      j["kind"] = "continuous";
      j["lo"] = lo_;
      j["hi"] = hi_;
      j["log"] = log_;
      break;
    case Kind::categorical: j["kind"] = "categorical"; break;
    case Kind::grid_values: j["kind"] = "grid_values"; break;
  }
  if (!values_.empty()) {
    j["values"] = nlohmann::json::array();
    for (const auto& v : values_) j["values"].push_back(hpo::to_json(v));
  }
  if (grid_) {
    j["grid"] = nlohmann::json::array();
    for (const auto& v : *grid_) j["grid"].push_back(hpo::to_json(v));
  }
  return j;
}

ParamSpec ParamSpec::from_json(const nlohmann::json& j) {
  const auto name = j.at("name").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  auto values = [&](const char* key) {
    std::vector<Value> out;
    for (const auto& v : j.at(key)) out.push_back(value_from_json(v));
    return out;
  };
  std::optional<ParamSpec> spec;
  if (kind == "integer") {
    spec = integer(name, j.at("lo").get<std::int64_t>(), j.at("hi").get<std::int64_t>());
  } else if (kind == "continuous") {
    spec = continuous(name, j.at("lo").get<double>(), j.at("hi").get<double>(), j.value("log", false));
  } else if (kind == "categorical") {
    spec = categorical(name, values("values"));
  } else if (kind == "grid_values") {
    spec = grid_values(name, values("values"));
  } else {
    throw SpaceError("unknown parameter kind '" + kind + "'");
  }
  if (j.contains("grid")) spec->with_grid(values("grid"));
  return *spec;
}

SearchSpace::SearchSpace(std::vector<ParamSpec> specs) : specs_(std::move(specs)) {
  std::set<std::string> seen;
  for (const auto& s : specs_) {
    if (!seen.insert(s.name()).second) throw SpaceError("duplicate parameter '" + s.name() + "'");
  }
}

const ParamSpec& SearchSpace::spec(const std::string& name) const {
  for (const auto& s : specs_) {
    if (s.name() == name) return s;
  }
  throw SpaceError("unknown parameter '" + name + "'");
}

std::size_t SearchSpace::grid_size() const {
  std::size_t n = 1;
  for (const auto& s : specs_) n *= s.grid_points().size();
  return n;
}

bool SearchSpace::contains(const Params& p) const {
  if (p.size() != specs_.size()) return false;
  for (const auto& s : specs_) {
    const auto it = p.find(s.name());
    if (it == p.end() || !s.contains(it->second)) return false;
  }
  return true;
}

Params SearchSpace::sample(Rng& rng) const {
  Params p;
  for (const auto& s : specs_) p[s.name()] = s.sample(rng);
  return p;
}

nlohmann::json SearchSpace::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : specs_) j.push_back(s.to_json());
  return j;
}

SearchSpace SearchSpace::from_json(const nlohmann::json& j) {
  std::vector<ParamSpec> specs;
  for (const auto& s : j) specs.push_back(ParamSpec::from_json(s));
  return SearchSpace(std::move(specs));
}

}  // namespace mofit::hpo

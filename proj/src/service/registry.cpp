#include "mofit/service/registry.hpp"

#include <algorithm>

namespace mofit::service {

using nlohmann::json;

namespace {

std::string summarize(const std::vector<FieldError>& fields) {
  std::string msg = "invalid input";
  for (std::size_t i = 0; i < fields.size() && i < 3; ++i) msg += (i ? "; " : ": ") + fields[i].field + " " + fields[i].message;
  if (fields.size() > 3) msg += "; ...";
  return msg;
}

// Alternative spellings accepted for the weight endpoint's two-step inputs.
const std::map<std::string, std::string> kAliases = {{"height_m", "Height"}, {"obesity_label", "NObeyesdad"}};

}  // namespace

ValidationError::ValidationError(std::vector<FieldError> fields)
    : std::invalid_argument(summarize(fields)), fields_(std::move(fields)) {}

ModelRegistry::ModelRegistry(experiment::Bundle bundle)
    : bundle_(std::move(bundle)), version_(bundle_.version()), manifest_(Manifest::parse(bundle_.manifest_text)) {
  auto fill = [&](Slot& slot, const char* role, learners::Task expected) {
    const auto& e = bundle_.entry(role);
    slot.task = &manifest_.task(e.task_id);
    slot.source = &manifest_.source(slot.task->source);
    slot.model = e.model;
    if (learners::task_of(slot.model) != expected || learners::n_features(slot.model) != slot.task->n_features()) {
      throw experiment::BundleError(std::string("the '") + role + "' model does not match its schema");
    }
  };
  fill(obesity_, "obesity", learners::Task::classification);
  fill(weight_, "weight", learners::Task::regression);
  fill(bodyfat_, "bodyfat", learners::Task::regression);
}

std::vector<double> ModelRegistry::encode(const Slot& slot, const json& payload) const {
  if (!payload.is_object()) throw ValidationError(std::vector<FieldError>{{"", "request body must be a JSON object"}});
  std::map<std::string, Cell> inputs;
  std::vector<FieldError> errors;
  for (const auto& [key, value] : payload.items()) {
    std::string name = key;
    if (const auto alias = kAliases.find(key); alias != kAliases.end() && !payload.contains(alias->second)) {
      name = alias->second;
    }
    if (value.is_string()) {
      inputs[name] = value.get<std::string>();
    } else if (value.is_number()) {
      inputs[name] = value.get<double>();
    } else {
      errors.push_back({key, "expected a number or a string"});
    }
  }
  auto schema_errors = validate_inputs(*slot.task, *slot.source, inputs);
  errors.insert(errors.end(), schema_errors.begin(), schema_errors.end());
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return encode_inputs(*slot.task, inputs);
}

ObesityPrediction ModelRegistry::predict_obesity(const json& payload) const {
  const auto row = encode(obesity_, payload);
  const auto p = learners::predict(obesity_.model, row);
  const auto& labels = obesity_.task->target.labels;
  ObesityPrediction out;
  out.label = labels.at(p.label);
  for (std::size_t k = 0; k < labels.size(); ++k) out.probabilities.emplace_back(labels[k], p.proba.at(k));
  return out;
}

double ModelRegistry::predict_weight(const json& payload) const {
  return learners::predict(weight_.model, encode(weight_, payload)).value;
}

BodyfatPrediction ModelRegistry::predict_bodyfat(const json& payload) const {
  BodyfatPrediction out;
  out.raw = learners::predict(bodyfat_.model, encode(bodyfat_, payload)).value;
  out.percent = std::clamp(out.raw, kBodyfatMin, kBodyfatMax);
  out.clamped = out.percent != out.raw;
  return out;
}

json ModelRegistry::input_schema() const {
  auto describe = [](const Slot& slot) {
    json fields = json::array();
    for (const auto& f : slot.task->features) {
      const auto& col = slot.source->column(f.column);
      json field = {{"name", f.column}};
      if (f.encoding == Encoding::numeric) {
        field["type"] = "number";
        if (col.range) field["range"] = {col.range->first, col.range->second};
      } else {
        field["type"] = "category";
        field["values"] = f.categories;
      }
      fields.push_back(std::move(field));
    }
    json target = {{"name", slot.task->target.name}};
    if (slot.task->target.is_classification()) {
      target["labels"] = slot.task->target.labels;
    } else {
      target["units"] = slot.task->target.units;
    }
    return json{{"task", slot.task->task_id}, {"fields", fields}, {"target", target}};
  };
  return {{"bundle_version", version_},
          {"manifest_version", manifest_.version()},
          {"obesity", describe(obesity_)},
          {"weight", describe(weight_)},
          {"bodyfat", describe(bodyfat_)}};
}

}  // namespace mofit::service

#include "mofit/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mofit {

namespace detail {
extern const std::string_view kBuiltinManifest;
}

using nlohmann::json;

std::string_view to_string(SourceId id) { return id == SourceId::obesity ? "obesity" : "bodyfat"; }

SourceId source_from_string(std::string_view name) {
  if (name == "obesity") return SourceId::obesity;
  if (name == "bodyfat") return SourceId::bodyfat;
  throw std::invalid_argument("unknown source id '" + std::string(name) + "'");
}

std::string cell_text(const Cell& cell) {
  if (const auto* text = std::get_if<std::string>(&cell)) return *text;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, std::get<double>(cell));
  return std::string(buf, res.ptr);
}

std::string_view to_string(Encoding e) {
  switch (e) {
    case Encoding::numeric: return "numeric";
    case Encoding::binary: return "binary";
    case Encoding::ordinal: return "ordinal";
    case Encoding::one_hot: return "one-hot";
  }
  return "?";
}

static Encoding encoding_from_string(const std::string& s) {
  if (s == "numeric") return Encoding::numeric;
  if (s == "binary") return Encoding::binary;
  if (s == "ordinal") return Encoding::ordinal;
  if (s == "one-hot") return Encoding::one_hot;
  throw std::invalid_argument("unknown encoding '" + s + "'");
}

const ColumnSpec& SourceSchema::column(std::string_view name) const {
  if (auto idx = index_of(name)) return columns[*idx];
  throw std::out_of_range("no column '" + std::string(name) + "' in " + std::string(to_string(id)));
}

std::optional<std::size_t> SourceSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t FeatureSpec::category_index(std::string_view value) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == value) return i;
  }
  throw EncodingError("column '" + column + "': unlisted category '" + std::string(value) + "'");
}

std::size_t TaskSchema::n_features() const {
  std::size_t n = 0;
  for (const auto& f : features) n += f.width();
  return n;
}

std::vector<std::string> TaskSchema::feature_names() const {
  std::vector<std::string> names;
  for (const auto& f : features) {
    if (f.encoding == Encoding::one_hot) {
      for (const auto& c : f.categories) names.push_back(f.column + "=" + c);
    } else {
      names.push_back(f.column);
    }
  }
  return names;
}

std::vector<std::pair<std::size_t, std::size_t>> TaskSchema::one_hot_groups() const {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t pos = 0;
  for (const auto& f : features) {
    if (f.encoding == Encoding::one_hot) groups.emplace_back(pos, pos + f.width());
    pos += f.width();
  }
  return groups;
}

Manifest Manifest::parse(std::string_view json_text) {
  const json doc = json::parse(json_text);
  Manifest m;
  m.text_ = std::string(json_text);
  m.version_ = doc.at("manifest_version").get<std::string>();

  for (const auto& [name, src] : doc.at("sources").items()) {
    SourceSchema schema;
    schema.id = source_from_string(name);
    schema.n_rows = src.at("n_rows").get<std::size_t>();
    for (const auto& col : src.at("columns")) {
      ColumnSpec spec;
      spec.name = col.at("name").get<std::string>();
      const auto type = col.at("type").get<std::string>();
      spec.categorical = type == "category";
      if (spec.categorical) {
        spec.values = col.at("values").get<std::vector<std::string>>();
        if (spec.values.empty()) throw std::invalid_argument("empty category list for " + spec.name);
      } else if (col.contains("range")) {
        const auto r = col.at("range").get<std::vector<double>>();
        spec.range = std::pair{r.at(0), r.at(1)};
      }
      schema.columns.push_back(std::move(spec));
    }
    m.sources_.emplace(schema.id, std::move(schema));
  }

  for (const auto& [task_id, t] : doc.at("tasks").items()) {
    TaskSchema task;
    task.task_id = task_id;
    task.source = source_from_string(t.at("source").get<std::string>());
    const auto& target = t.at("target");
    task.target.name = target.at("name").get<std::string>();
    task.target.columns = target.at("columns").get<std::vector<std::string>>();
    if (target.at("kind").get<std::string>() == "classes") {
      task.target.labels = target.at("labels").get<std::vector<std::string>>();
    } else {
      task.target.units = target.value("units", "");
    }
    task.dropped = t.at("dropped").get<std::vector<std::string>>();
    for (const auto& f : t.at("features")) {
      FeatureSpec spec;
      spec.column = f.at("column").get<std::string>();
      spec.encoding = encoding_from_string(f.at("encoding").get<std::string>());
      if (spec.encoding != Encoding::numeric) {
        spec.categories = f.at("categories").get<std::vector<std::string>>();
      }
      task.features.push_back(std::move(spec));
    }

    // Every feature and target column must exist in the source, and categorical
    // encodings must cover exactly the source's declared values.
    const auto& source = m.sources_.at(task.source);
    for (const auto& f : task.features) {
      const auto& col = source.column(f.column);
      if (f.encoding != Encoding::numeric) {
        auto a = f.categories, b = col.values;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) throw std::invalid_argument("category list mismatch for " + f.column);
      }
    }
    for (const auto& c : task.target.columns) (void)source.column(c);
    m.tasks_.emplace(task_id, std::move(task));
  }
  return m;
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const Manifest& Manifest::builtin() {
  static const Manifest manifest = parse(detail::kBuiltinManifest);
  return manifest;
}

const SourceSchema& Manifest::source(SourceId id) const { return sources_.at(id); }

const TaskSchema& Manifest::task(std::string_view task_id) const {
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw std::out_of_range("unknown task '" + std::string(task_id) + "'");
  return it->second;
}

std::vector<std::string> Manifest::task_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : tasks_) ids.push_back(id);
  return ids;
}

std::vector<FieldError> validate_inputs(const TaskSchema& task, const SourceSchema& source,
                                        const std::map<std::string, Cell>& inputs) {
  std::vector<FieldError> errors;
  for (const auto& feature : task.features) {
    auto it = inputs.find(feature.column);
    if (it == inputs.end()) {
      errors.push_back({feature.column, "missing field"});
      continue;
    }
    const auto& col = source.column(feature.column);
    if (feature.encoding == Encoding::numeric) {
      const auto* v = std::get_if<double>(&it->second);
      if (v == nullptr) {
        errors.push_back({feature.column, "expected a number"});
      } else if (!std::isfinite(*v)) {
        errors.push_back({feature.column, "not finite"});
      } else if (col.range && (*v < col.range->first || *v > col.range->second)) {
        std::ostringstream msg;
        msg << "out of range [" << col.range->first << ", " << col.range->second << "]";
        errors.push_back({feature.column, msg.str()});
      }
    } else {
      const auto* s = std::get_if<std::string>(&it->second);
      if (s == nullptr) {
        errors.push_back({feature.column, "expected one of the listed categories"});
      } else if (std::find(feature.categories.begin(), feature.categories.end(), *s) ==
                 feature.categories.end()) {
        errors.push_back({feature.column, "illegal category '" + *s + "'"});
      }
    }
  }
  return errors;
}

std::vector<double> encode_inputs(const TaskSchema& task, const std::map<std::string, Cell>& inputs) {
  std::vector<double> row;
  row.reserve(task.n_features());
  encode_features(
      task,
      [&](const std::string& name) -> const Cell& {
        auto it = inputs.find(name);
        if (it == inputs.end()) throw EncodingError("missing field '" + name + "'");
        return it->second;
      },
      row);
  return row;
}

}  // namespace mofit

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace mofit {

enum class SourceId { obesity, bodyfat };

std::string_view to_string(SourceId id);
SourceId source_from_string(std::string_view name);

/// A single CSV cell: categorical text or a parsed number.
using Cell = std::variant<std::string, double>;

std::string cell_text(const Cell& cell);

enum class Encoding { numeric, binary, ordinal, one_hot };

std::string_view to_string(Encoding e);

struct ColumnSpec {
  std::string name;
  bool categorical = false;
  std::vector<std::string> values;                  // categorical only
  std::optional<std::pair<double, double>> range;   // numeric only, inclusive
};

struct SourceSchema {
  SourceId id = SourceId::obesity;
  std::size_t n_rows = 0;
  std::vector<ColumnSpec> columns;

  const ColumnSpec& column(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
};

struct FeatureSpec {
  std::string column;
  Encoding encoding = Encoding::numeric;
  std::vector<std::string> categories;  // order matters for binary/ordinal/one-hot

  std::size_t width() const { return encoding == Encoding::one_hot ? categories.size() : 1; }
  /// Position of `value` in `categories`; throws EncodingError when unlisted.
  std::size_t category_index(std::string_view value) const;
};

struct TargetSpec {
  std::string name;
  std::vector<std::string> columns;  // more than one column means "average of"
  std::vector<std::string> labels;   // empty for real-valued targets
  std::string units;

  bool is_classification() const { return !labels.empty(); }
};

/// Per-task encoding contract: which source columns become which features.
struct TaskSchema {
  std::string task_id;
  SourceId source = SourceId::obesity;
  TargetSpec target;
  std::vector<std::string> dropped;
  std::vector<FeatureSpec> features;

  std::size_t n_features() const;
  std::vector<std::string> feature_names() const;
  /// Half-open column ranges [first, last) of every one-hot group in the encoded matrix.
  std::vector<std::pair<std::size_t, std::size_t>> one_hot_groups() const;
};

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldError {
  std::string field;
  std::string message;
};

/// Versioned description of both source tables and the three task encodings.
class Manifest {
 public:
  static Manifest parse(std::string_view json_text);
  static Manifest load(const std::string& path);
  /// The manifest compiled into the library from data/schema_manifest.json.
  static const Manifest& builtin();

  const std::string& version() const { return version_; }
  const std::string& text() const { return text_; }
  const SourceSchema& source(SourceId id) const;
  const TaskSchema& task(std::string_view task_id) const;
  std::vector<std::string> task_ids() const;

 private:
  std::string version_;
  std::string text_;
  std::map<SourceId, SourceSchema> sources_;
  std::map<std::string, TaskSchema, std::less<>> tasks_;
};

/// Encodes one row given a column lookup. Throws EncodingError on a missing column,
/// a type mismatch, or an unlisted category.
template <typename Lookup>
void encode_features(const TaskSchema& task, Lookup&& lookup, std::vector<double>& out);

/// Field-level validation of a named-input payload (used by the service): presence,
/// type, category membership and the manifest's numeric ranges.
std::vector<FieldError> validate_inputs(const TaskSchema& task, const SourceSchema& source,
                                        const std::map<std::string, Cell>& inputs);

std::vector<double> encode_inputs(const TaskSchema& task, const std::map<std::string, Cell>& inputs);

// --- implementation of the template -------------------------------------------------

template <typename Lookup>
void encode_features(const TaskSchema& task, Lookup&& lookup, std::vector<double>& out) {
  for (const auto& feature : task.features) {
    const Cell& cell = lookup(feature.column);
    if (feature.encoding == Encoding::numeric) {
      const auto* number = std::get_if<double>(&cell);
      if (number == nullptr) {
        throw EncodingError("column '" + feature.column + "' expects a number, got '" +
                            std::get<std::string>(cell) + "'");
      }
      out.push_back(*number);
      continue;
    }
    const std::string text = cell_text(cell);
    const std::size_t idx = feature.category_index(text);
    if (feature.encoding == Encoding::one_hot) {
      for (std::size_t k = 0; k < feature.categories.size(); ++k) out.push_back(k == idx ? 1.0 : 0.0);
    } else {
      out.push_back(static_cast<double>(idx));
    }
  }
}

}  // namespace mofit

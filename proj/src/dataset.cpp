#include "mofit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "mofit/rng.hpp"

namespace mofit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// RFC 4180 records: quoted fields may contain commas, doubled quotes and newlines.
std::vector<std::vector<std::string>> parse_records(std::string_view bytes) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const char c = bytes[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      record.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      if (c != '\r') any = true;
    }
  }
  if (quoted) throw LoadError("unterminated quoted field");
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

std::optional<double> parse_number(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

std::size_t RawTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < column_names.size(); ++i) {
    if (column_names[i] == name) return i;
  }
  throw LoadError("no column '" + std::string(name) + "'");
}

RawTable load_csv(std::string_view bytes, SourceId source, const Manifest& manifest) {
  const SourceSchema& schema = manifest.source(source);
  auto records = parse_records(bytes);
  if (records.empty()) throw LoadError("empty CSV");

  RawTable table;
  table.source = source;
  for (auto& name : records.front()) table.column_names.emplace_back(trim(name));
  if (table.column_names.size() != schema.columns.size()) {
    throw LoadError("dimension mismatch: expected " + std::to_string(schema.columns.size()) + " columns, got " +
                    std::to_string(table.column_names.size()));
  }
  // Map every file column to its manifest spec; order in the file is free.
  std::vector<const ColumnSpec*> specs;
  for (const auto& name : table.column_names) {
    auto idx = schema.index_of(name);
    if (!idx) throw LoadError("unexpected column '" + name + "' for source " + std::string(to_string(source)));
    specs.push_back(&schema.columns[*idx]);
  }
  if (records.size() - 1 != schema.n_rows) {
    throw LoadError("dimension mismatch: expected " + std::to_string(schema.n_rows) + " rows, got " +
                    std::to_string(records.size() - 1));
  }

  table.rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != specs.size()) {
      throw LoadError("dimension mismatch at row " + std::to_string(r - 1) + ": " + std::to_string(rec.size()) +
                      " cells");
    }
    std::vector<Cell> row;
    row.reserve(rec.size());
    for (std::size_t c = 0; c < rec.size(); ++c) {
      const auto text = trim(rec[c]);
      if (text.empty()) {
        throw LoadError("missing value at (" + std::to_string(r - 1) + ", " + std::to_string(c) + ")");
      }
      if (specs[c]->categorical) {
        row.emplace_back(std::string(text));
      } else if (auto v = parse_number(text)) {
        row.emplace_back(*v);
      } else {
        throw LoadError("unparseable number '" + std::string(text) + "' at (" + std::to_string(r - 1) + ", " +
                        std::to_string(c) + ")");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

RawTable load_csv_file(const std::string& path, SourceId source, const Manifest& manifest) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_csv(buf.str(), source, manifest);
}

EncodedDataset prepare(const RawTable& table, const TaskSchema& task) {
  if (table.source != task.source) {
    throw std::invalid_argument("task " + task.task_id + " expects source " + std::string(to_string(task.source)));
  }
  EncodedDataset ds;
  ds.feature_names = task.feature_names();
  ds.target.class_labels = task.target.labels;
  ds.target.units = task.target.units;
  const std::size_t n = table.rows.size();
  const std::size_t width = task.n_features();
  ds.X = Matrix(n, width);
  ds.y.resize(n);
  ds.row_ids.resize(n);

  std::vector<std::size_t> feature_cols;
  for (const auto& f : task.features) feature_cols.push_back(table.column_index(f.column));
  std::vector<std::size_t> target_cols;
  for (const auto& c : task.target.columns) target_cols.push_back(table.column_index(c));

  std::vector<double> encoded;
  encoded.reserve(width);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    encoded.clear();
    std::size_t next = 0;
    encode_features(
        task, [&](const std::string&) -> const Cell& { return row[feature_cols[next++]]; }, encoded);
    std::copy(encoded.begin(), encoded.end(), ds.X.row(r).begin());

    if (task.target.is_classification()) {
      const auto label = cell_text(row[target_cols.front()]);
      auto it = std::find(task.target.labels.begin(), task.target.labels.end(), label);
      if (it == task.target.labels.end()) throw EncodingError("unlisted target label '" + label + "'");
      ds.y[r] = static_cast<double>(it - task.target.labels.begin());
    } else {
      double sum = 0.0;
      for (auto c : target_cols) {
        const auto* v = std::get_if<double>(&row[c]);
        if (v == nullptr) throw EncodingError("non-numeric target in row " + std::to_string(r));
        sum += *v;
      }
      ds.y[r] = sum / static_cast<double>(target_cols.size());
    }
    ds.row_ids[r] = r;
  }
  return ds;
}

EncodedDataset prepare_obesity_classification(const RawTable& table, const Manifest& manifest) {
  return prepare(table, manifest.task("obesity_classification"));
}

EncodedDataset prepare_weight_regression(const RawTable& table, const Manifest& manifest) {
  return prepare(table, manifest.task("weight_regression"));
}

EncodedDataset prepare_bodyfat(const RawTable& table, const Manifest& manifest) {
  return prepare(table, manifest.task("bodyfat_regression"));
}

EncodedDataset subset(const EncodedDataset& ds, std::span<const std::size_t> positions) {
  EncodedDataset out;
  out.feature_names = ds.feature_names;
  out.target = ds.target;
  out.X = Matrix(positions.size(), ds.X.cols);
  out.y.reserve(positions.size());
  out.row_ids.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto p = positions[i];
    std::copy_n(ds.X.row(p).begin(), ds.X.cols, out.X.row(i).begin());
    out.y.push_back(ds.y[p]);
    out.row_ids.push_back(ds.row_ids[p]);
  }
  return out;
}

SplitPair split(const EncodedDataset& ds, double ratio, std::uint64_t seed, bool stratified) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0, 1)");
  if (stratified && !ds.target.is_classification()) {
    throw std::invalid_argument("stratified split requires a class target");
  }
  const std::size_t n = ds.size();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio));
  Rng rng(seed);

  std::vector<std::size_t> train, test;
  if (!stratified) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  } else {
    const std::size_t k = ds.target.n_classes();
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(ds.y[i])].push_back(i);

    // Largest-remainder allocation of n_train across classes.
    std::vector<std::size_t> quota(k);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t allocated = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c].empty()) continue;
      if (members[c].size() < 2) {
        throw std::invalid_argument("class '" + ds.target.class_labels[c] + "' has fewer than 2 rows");
      }
      const double share = static_cast<double>(members[c].size()) * static_cast<double>(n_train) /
                           static_cast<double>(n);
      quota[c] = static_cast<std::size_t>(std::floor(share));
      allocated += quota[c];
      remainders.emplace_back(share - std::floor(share), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; allocated < n_train; ++i, ++allocated) ++quota[remainders[i].second];

    for (std::size_t c = 0; c < k; ++c) {
      auto& m = members[c];
      rng.shuffle(std::span(m));
      train.insert(train.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(quota[c]));
      test.insert(test.end(), m.begin() + static_cast<std::ptrdiff_t>(quota[c]), m.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
  }

  SplitPair pair;
  pair.train = subset(ds, train);
  pair.test = subset(ds, test);
  pair.train_indices = std::move(train);
  pair.test_indices = std::move(test);
  pair.seed = seed;
  pair.ratio = ratio;
  return pair;
}

std::size_t count_duplicate_rows(const RawTable& table) {
  std::set<std::vector<std::string>> seen;
  std::size_t dups = 0;
  for (const auto& row : table.rows) {
    std::vector<std::string> key;
    key.reserve(row.size());
    for (const auto& c : row) key.push_back(cell_text(c));
    if (!seen.insert(std::move(key)).second) ++dups;
  }
  return dups;
}

}  // namespace mofit

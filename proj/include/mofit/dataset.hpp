#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mofit/schema.hpp"

namespace mofit {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }

  bool operator==(const Matrix&) const = default;
};

/// Target description carried with every encoded dataset.
struct TargetKind {
  std::vector<std::string> class_labels;  // non-empty => classification
  std::string units;

  bool is_classification() const { return !class_labels.empty(); }
  std::size_t n_classes() const { return class_labels.size(); }
  bool operator==(const TargetKind&) const = default;
};

struct RawTable {
  SourceId source = SourceId::obesity;
  std::vector<std::string> column_names;
  std::vector<std::vector<Cell>> rows;

  std::size_t column_index(std::string_view name) const;
};

/// Numeric features plus target. `row_ids` are indices into the originating RawTable,
/// kept so that subsets can be traced back (used to audit train/test separation).
struct EncodedDataset {
  Matrix X;
  std::vector<double> y;
  std::vector<std::string> feature_names;
  TargetKind target;
  std::vector<std::size_t> row_ids;

  std::size_t size() const { return y.size(); }
  std::size_t n_features() const { return X.cols; }
  bool operator==(const EncodedDataset&) const = default;
};

struct SplitPair {
  EncodedDataset train;
  EncodedDataset test;
  std::vector<std::size_t> train_indices;  // positions in the input dataset
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;
  double ratio = 0.0;
};

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses CSV bytes and checks them against the manifest for `source`: header names,
/// row count and column count, no empty cells, numeric columns parse as numbers.
RawTable load_csv(std::string_view bytes, SourceId source, const Manifest& manifest = Manifest::builtin());
RawTable load_csv_file(const std::string& path, SourceId source, const Manifest& manifest = Manifest::builtin());

/// Generic task encoder driven by the manifest.
EncodedDataset prepare(const RawTable& table, const TaskSchema& task);

EncodedDataset prepare_obesity_classification(const RawTable& table, const Manifest& manifest = Manifest::builtin());
EncodedDataset prepare_weight_regression(const RawTable& table, const Manifest& manifest = Manifest::builtin());
EncodedDataset prepare_bodyfat(const RawTable& table, const Manifest& manifest = Manifest::builtin());

/// Rows selected by position, in the order given.
EncodedDataset subset(const EncodedDataset& ds, std::span<const std::size_t> positions);

/// floor(n * ratio) training rows. Stratified splits allocate each class
/// floor/ceil of its proportional share so per-class counts are within one row.
SplitPair split(const EncodedDataset& ds, double ratio, std::uint64_t seed, bool stratified);

/// Number of rows that exactly repeat an earlier row.
std::size_t count_duplicate_rows(const RawTable& table);

}  // namespace mofit

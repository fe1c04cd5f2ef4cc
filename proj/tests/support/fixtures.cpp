#include "support/fixtures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include "mofit/rng.hpp"

namespace mofit::testing {

namespace {

double round_to(double v, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(v * scale) / scale;
}

double clamp_round(double v, double lo, double hi, int digits) { return round_to(std::clamp(v, lo, hi), digits); }

std::string pick(Rng& rng, const std::vector<std::string>& values, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (u < weights[i]) return values[i];
    u -= weights[i];
  }
  return values.back();
}

}  // namespace

RawTable synthetic_obesity_table(std::uint64_t seed) {
  Rng rng(seed);
  const auto& source = Manifest::builtin().source(SourceId::obesity);
  RawTable table;
  table.source = SourceId::obesity;
  for (const auto& c : source.columns) table.column_names.push_back(c.name);

  const std::vector<std::string> labels = source.column("NObeyesdad").values;
  // Class sizes of the public file.
  const std::array<int, 7> counts{272, 287, 290, 290, 351, 297, 324};
  const std::array<std::pair<double, double>, 7> bmi{{{15.5, 18.4}, {18.6, 24.8}, {25.1, 27.4}, {27.6, 29.9},
                                                      {30.1, 34.9}, {35.1, 39.9}, {40.1, 50.0}}};
  std::vector<int> classes;
  for (int c = 0; c < 7; ++c) classes.insert(classes.end(), static_cast<std::size_t>(counts[c]), c);
  rng.shuffle(std::span(classes));

  for (int c : classes) {
    const double level = c / 6.0;  // 0 = underweight .. 1 = obesity III
    const bool male = rng.bernoulli(c == 5 ? 0.95 : c == 6 ? 0.03 : 0.5);
    const double height = clamp_round(rng.normal(male ? 1.76 : 1.63, 0.07), 1.45, 1.98, 2);
    const double b = rng.uniform(bmi[c].first, bmi[c].second);
    const double weight = round_to(b * height * height, 1);
    const double age = clamp_round(rng.normal(19.0 + 14.0 * level, 3.0 + 3.0 * level), 14, 61, 0);
    const double fcvc = clamp_round(rng.normal(c == 6 ? 3.0 : 2.0 + 0.3 * std::sin(c), 0.35), 1, 3, 2);
    const double ncp = clamp_round(rng.normal(c == 0 ? 3.2 : 2.7 - 0.1 * c, 0.5), 1, 4, 2);
    const double ch2o = clamp_round(rng.normal(1.7 + 0.15 * c, 0.4), 1, 3, 2);
    const double faf = clamp_round(rng.normal(1.6 - 0.2 * c, 0.6), 0, 3, 2);
    const double tue = clamp_round(rng.normal(0.9 - 0.1 * c, 0.4), 0, 2, 2);

    std::vector<Cell> row;
    row.emplace_back(male ? "Male" : "Female");
    row.emplace_back(age);
    row.emplace_back(height);
    row.emplace_back(weight);
    row.emplace_back(rng.bernoulli(0.3 + 0.65 * level) ? "yes" : "no");
    row.emplace_back(rng.bernoulli(0.7 + 0.28 * level) ? "yes" : "no");
    row.emplace_back(fcvc);
    row.emplace_back(ncp);
    row.emplace_back(pick(rng, {"no", "Sometimes", "Frequently", "Always"},
                          {0.03, 0.5 + 0.45 * level, 0.4 - 0.38 * level, 0.07 - 0.06 * level}));
    row.emplace_back(rng.bernoulli(0.02) ? "yes" : "no");
    row.emplace_back(ch2o);
    row.emplace_back(rng.bernoulli(0.1 - 0.09 * level) ? "yes" : "no");
    row.emplace_back(faf);
    row.emplace_back(tue);
    row.emplace_back(pick(rng, {"no", "Sometimes", "Frequently", "Always"},
                          {0.45 - 0.3 * level, 0.5 + 0.3 * level, 0.05, 0.004}));
    row.emplace_back(pick(rng, {"Automobile", "Bike", "Motorbike", "Public_Transportation", "Walking"},
                          {0.1 + 0.25 * std::abs(level - 0.5), 0.01, 0.01, 0.7 - 0.1 * level, 0.2 - 0.18 * level}));
    row.emplace_back(labels[static_cast<std::size_t>(c)]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

RawTable synthetic_bodyfat_table(std::uint64_t seed) {
  Rng rng(seed);
  const auto& source = Manifest::builtin().source(SourceId::bodyfat);
  RawTable table;
  table.source = SourceId::bodyfat;
  for (const auto& c : source.columns) table.column_names.push_back(c.name);

  for (int i = 0; i < 252; ++i) {
    const double age = clamp_round(rng.normal(45, 12.6), 22, 81, 0);
    const double height = clamp_round(rng.normal(70.1, 2.6), 64, 78, 2);
    const double size = rng.normal(0.0, 1.0);
    const double weight = clamp_round(178.9 + 29.0 * size, 118, 363, 2);
    const double adiposity = rng.normal(0.0, 1.0);
    const double abdomen = clamp_round(92.5 + 8.0 * size + 6.0 * adiposity, 69, 148, 1);
    const double bf_true = std::clamp(-38.0 + 0.63 * abdomen - 0.02 * weight + 0.06 * age + rng.normal(0, 3.0), 3.0, 47.0);
    double bf1 = round_to(bf_true + rng.normal(0, 0.2), 1);
    double bf2 = round_to(bf_true + rng.normal(0, 0.3), 1);
    if (i == 0) {
      bf1 = 12.6;
      bf2 = 12.3;
    }
    const double density = round_to(495.0 / ((bf1 + bf2) / 2.0 + 450.0), 4);
    const double ai = round_to(703.0 * weight / (height * height), 1);
    const double ffw = round_to(weight * (1.0 - bf1 / 100.0), 1);

    std::vector<Cell> row;
    row.emplace_back(static_cast<double>(i + 1));
    row.emplace_back(bf1);
    row.emplace_back(bf2);
    row.emplace_back(density);
    row.emplace_back(age);
    row.emplace_back(weight);
    row.emplace_back(height);
    row.emplace_back(ai);
    row.emplace_back(ffw);
    row.emplace_back(round_to(37.9 + 1.8 * size + rng.normal(0, 0.8), 1));   // Neck
    row.emplace_back(round_to(100.8 + 6.5 * size + 3.0 * adiposity, 1));     // Chest
    row.emplace_back(abdomen);
    row.emplace_back(round_to(99.9 + 5.5 * size + 2.0 * adiposity, 1));      // Hip
    row.emplace_back(round_to(59.4 + 4.0 * size + rng.normal(0, 1.5), 1));   // Thigh
    row.emplace_back(round_to(38.6 + 1.8 * size + rng.normal(0, 0.8), 1));   // Knee
    row.emplace_back(round_to(23.1 + 1.0 * size + rng.normal(0, 0.6), 1));   // Ankle
    row.emplace_back(round_to(32.3 + 2.2 * size + rng.normal(0, 1.0), 1));   // Biceps
    row.emplace_back(round_to(28.7 + 1.2 * size + rng.normal(0, 0.9), 1));   // Forearm
    row.emplace_back(round_to(18.2 + 0.6 * size + rng.normal(0, 0.4), 1));   // Wrist
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string to_csv(const RawTable& table) {
  std::ostringstream out;
  for (std::size_t c = 0; c < table.column_names.size(); ++c) out << (c ? "," : "") << table.column_names[c];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << cell_text(row[c]);
    out << "\n";
  }
  return out.str();
}

EncodedDataset make_dataset(const std::vector<std::vector<double>>& rows, const std::vector<double>& y,
                            std::size_t n_classes) {
  EncodedDataset ds;
  ds.X = Matrix(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), ds.X.row(r).begin());
  ds.y = y;
  for (std::size_t k = 0; k < n_classes; ++k) ds.target.class_labels.push_back("c" + std::to_string(k));
  for (std::size_t i = 0; i < ds.X.cols; ++i) ds.feature_names.push_back("x" + std::to_string(i));
  ds.row_ids.resize(y.size());
  std::iota(ds.row_ids.begin(), ds.row_ids.end(), 0);
  return ds;
}

std::string dataset_path(const char* env_var) {
  const char* v = std::getenv(env_var);
  return v ? std::string(v) : std::string();
}

}  // namespace mofit::testing

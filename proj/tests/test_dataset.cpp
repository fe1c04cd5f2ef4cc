#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "mofit/dataset.hpp"
#include "support/fixtures.hpp"

using namespace mofit;

namespace {

const RawTable& obesity() {
  static const RawTable t = load_csv(testing::to_csv(testing::synthetic_obesity_table()), SourceId::obesity);
  return t;
}

const RawTable& bodyfat() {
  static const RawTable t = load_csv(testing::to_csv(testing::synthetic_bodyfat_table()), SourceId::bodyfat);
  return t;
}

std::size_t distinct_values(const RawTable& t, const std::string& column) {
  std::set<std::string> seen;
  const auto c = t.column_index(column);
  for (const auto& row : t.rows) seen.insert(cell_text(row[c]));
  return seen.size();
}

}  // namespace

TEST_CASE("load_csv checks dimensions of both sources") {
  CHECK(obesity().rows.size() == 2111);
  CHECK(obesity().column_names.size() == 17);
  CHECK(bodyfat().rows.size() == 252);
  CHECK(bodyfat().column_names.size() == 19);

  auto csv = testing::to_csv(testing::synthetic_bodyfat_table());
  const auto truncated = csv.substr(0, csv.rfind('\n', csv.size() - 2) + 1);
  CHECK_THROWS_WITH_AS(load_csv(truncated, SourceId::bodyfat), doctest::Contains("dimension mismatch"), LoadError);
  CHECK_THROWS_AS(load_csv(csv, SourceId::obesity), LoadError);
}

TEST_CASE("load_csv rejects blank and unparseable cells") {
  auto table = testing::synthetic_bodyfat_table();
  auto csv = testing::to_csv(table);
  // Blank out the Age cell (column 4) of data row 2.
  std::size_t pos = 0;
  for (int line = 0; line < 3; ++line) pos = csv.find('\n', pos) + 1;
  std::size_t start = pos;
  for (int comma = 0; comma < 4; ++comma) start = csv.find(',', start) + 1;
  const std::size_t end = csv.find(',', start);
  auto blank = csv;
  blank.erase(start, end - start);
  CHECK_THROWS_WITH(load_csv(blank, SourceId::bodyfat), "missing value at (2, 4)");

  auto garbage = csv;
  garbage.replace(start, end - start, "4x");
  CHECK_THROWS_WITH(load_csv(garbage, SourceId::bodyfat), doctest::Contains("unparseable number"));
}

TEST_CASE("load_csv handles quoted fields and CRLF") {
  auto table = testing::synthetic_obesity_table();
  auto csv = testing::to_csv(table);
  std::string crlf;
  for (char c : csv) {
    if (c == '\n') crlf += "\r\n";
    else crlf += c;
  }
  const auto pos = crlf.find("\r\n") + 2;
  crlf.insert(pos, "\"");
  crlf.insert(crlf.find(',', pos), "\"");
  const auto loaded = load_csv(crlf, SourceId::obesity);
  CHECK(loaded.rows.front() == table.rows.front());
}

TEST_CASE("obesity classification encoding") {
  const auto ds = prepare_obesity_classification(obesity());
  const auto& task = Manifest::builtin().task("obesity_classification");

  // Feature count oracle: 14 raw features, two of them expanded to one column per
  // distinct category actually present in the file.
  const std::size_t calc = distinct_values(obesity(), "CALC");
  const std::size_t mtrans = distinct_values(obesity(), "MTRANS");
  CHECK(calc == 4);
  CHECK(mtrans == 5);
  CHECK(ds.n_features() == 14 - 2 + calc + mtrans);
  CHECK(ds.n_features() == 21);
  CHECK(ds.target.n_classes() == 7);
  CHECK(std::find(ds.feature_names.begin(), ds.feature_names.end(), "Weight") == ds.feature_names.end());
  CHECK(std::find(ds.feature_names.begin(), ds.feature_names.end(), "Height") == ds.feature_names.end());

  RawTable one = obesity();
  one.rows.resize(1);
  auto& row = one.rows.front();
  row[one.column_index("CALC")] = std::string("Sometimes");
  row[one.column_index("CAEC")] = std::string("no");
  auto enc = prepare(one, task);
  const auto calc_groups = task.one_hot_groups();
  const auto [c0, c1] = calc_groups.front();
  CHECK(std::vector<double>(enc.X.row(0).begin() + static_cast<long>(c0), enc.X.row(0).begin() + static_cast<long>(c1)) ==
        std::vector<double>{0, 1, 0, 0});
  const auto caec = static_cast<std::size_t>(
      std::find(enc.feature_names.begin(), enc.feature_names.end(), "CAEC") - enc.feature_names.begin());
  CHECK(enc.X(0, caec) == 0.0);
  row[one.column_index("CAEC")] = std::string("Always");
  CHECK(prepare(one, task).X(0, caec) == 3.0);

  row[one.column_index("MTRANS")] = std::string("Teleport");
  CHECK_THROWS_AS(prepare(one, task), EncodingError);
}

TEST_CASE("every one-hot group sums to one and values are finite") {
  for (const auto* id : {"obesity_classification", "weight_regression"}) {
    const auto& task = Manifest::builtin().task(id);
    const auto ds = prepare(obesity(), task);
    for (std::size_t r = 0; r < ds.size(); ++r) {
      for (auto [a, b] : task.one_hot_groups()) {
        double s = 0.0;
        for (auto c = a; c < b; ++c) s += ds.X(r, c);
        REQUIRE(s == 1.0);
      }
    }
    CHECK(std::all_of(ds.X.data.begin(), ds.X.data.end(), [](double v) { return std::isfinite(v); }));
  }
}

TEST_CASE("weight regression adds height and the obesity label") {
  const auto cls = prepare_obesity_classification(obesity());
  const auto reg = prepare_weight_regression(obesity());
  CHECK(reg.n_features() == cls.n_features() + 2);
  CHECK(!reg.target.is_classification());
  CHECK(reg.feature_names.back() == "NObeyesdad");

  const auto label_col = obesity().column_index("NObeyesdad");
  for (std::size_t r = 0; r < obesity().rows.size(); ++r) {
    if (cell_text(obesity().rows[r][label_col]) == "Obesity_Type_I") {
      CHECK(reg.X(r, reg.n_features() - 1) == 4.0);
      break;
    }
  }

  // Oracle: column mean read straight from the table cells.
  const auto wcol = obesity().column_index("Weight");
  double oracle = 0.0;
  for (const auto& row : obesity().rows) oracle += std::get<double>(row[wcol]);
  oracle /= static_cast<double>(obesity().rows.size());
  const double mean = std::accumulate(reg.y.begin(), reg.y.end(), 0.0) / static_cast<double>(reg.size());
  CHECK(mean == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(mean >= 60.0);
  CHECK(mean <= 120.0);
}

TEST_CASE("body fat target is the average of the two estimates") {
  const auto ds = prepare_bodyfat(bodyfat());
  CHECK(ds.size() == 252);
  CHECK(ds.n_features() == 14);
  CHECK(ds.y[0] == doctest::Approx(12.45).epsilon(1e-12));
  for (const auto* dropped : {"BF1", "BF2", "Density", "AI", "FFW"}) {
    CHECK(std::find(ds.feature_names.begin(), ds.feature_names.end(), dropped) == ds.feature_names.end());
  }
  RawTable one = bodyfat();
  one.rows.resize(1);
  one.rows[0][1] = 21.7;
  one.rows[0][2] = 21.7;
  CHECK(prepare_bodyfat(one).y[0] == 21.7);
}

TEST_CASE("encoding is a pure function of the table") {
  CHECK(prepare_weight_regression(obesity()) == prepare_weight_regression(obesity()));
  CHECK(prepare_bodyfat(bodyfat()) == prepare_bodyfat(bodyfat()));
}

TEST_CASE("splits reproduce the published train/test sizes") {
  const auto cls = prepare_obesity_classification(obesity());
  const auto bf = prepare_bodyfat(bodyfat());
  const auto a = split(cls, 0.8, 42, true);
  CHECK(a.train.size() == 1688);
  CHECK(a.test.size() == 423);
  const auto b = split(bf, 0.8, 42, false);
  CHECK(b.train.size() == 201);
  CHECK(b.test.size() == 51);
  const auto w = split(prepare_weight_regression(obesity()), 0.8, 42, false);
  CHECK(w.train.size() == 1688);
  CHECK(w.test.size() == 423);
}

TEST_CASE("split is a deterministic partition") {
  const auto ds = prepare_obesity_classification(obesity());
  for (bool stratified : {false, true}) {
    const auto a = split(ds, 0.8, 9, stratified);
    const auto b = split(ds, 0.8, 9, stratified);
    CHECK(a.train_indices == b.train_indices);
    CHECK(a.test_indices == b.test_indices);
    std::vector<std::size_t> all = a.train_indices;
    all.insert(all.end(), a.test_indices.begin(), a.test_indices.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(ds.size());
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);
    CHECK(split(ds, 0.8, 10, stratified).train_indices != a.train_indices);
  }
}

TEST_CASE("stratified split keeps class proportions within one row") {
  const auto ds = prepare_obesity_classification(obesity());
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto s = split(ds, 0.8, seed, true);
    for (std::size_t k = 0; k < 7; ++k) {
      const auto total = std::count(ds.y.begin(), ds.y.end(), static_cast<double>(k));
      const auto train = std::count(s.train.y.begin(), s.train.y.end(), static_cast<double>(k));
      CHECK(std::abs(static_cast<double>(train) / 1688.0 - static_cast<double>(total) / 2111.0) <= 1.0 / 1688.0);
    }
  }
}

TEST_CASE("split preconditions") {
  auto ds = prepare_obesity_classification(obesity());
  CHECK_THROWS_AS(split(ds, 1.0, 1, false), std::invalid_argument);
  CHECK_THROWS_AS(split(ds, 0.0, 1, false), std::invalid_argument);
  CHECK_THROWS_AS(split(prepare_bodyfat(bodyfat()), 0.8, 1, true), std::invalid_argument);
  // A class with a single row cannot be stratified.
  const auto first0 = static_cast<std::size_t>(std::find(ds.y.begin(), ds.y.end(), 0.0) - ds.y.begin());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.y[i] == 0.0 && i != first0) ds.y[i] = 1.0;
  }
  CHECK_THROWS_WITH(split(ds, 0.8, 1, true), doctest::Contains("fewer than 2 rows"));
}

TEST_CASE("duplicate rows are counted") {
  RawTable t = bodyfat();
  CHECK(count_duplicate_rows(t) == 0);
  t.rows.push_back(t.rows[3]);
  t.rows.push_back(t.rows[3]);
  CHECK(count_duplicate_rows(t) == 2);
}

TEST_CASE("manifest round trip from the shipped file") {
  const auto m = Manifest::load(std::string(MOFIT_DATA_DIR) + "/schema_manifest.json");
  CHECK(m.version() == Manifest::builtin().version());
  CHECK(m.task("weight_regression").n_features() == 23);
  CHECK(m.task("bodyfat_regression").n_features() == 14);
}

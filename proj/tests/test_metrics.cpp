#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mofit/metrics.hpp"
#include "mofit/rng.hpp"

using namespace mofit;
using namespace mofit::metrics;

namespace {

// Independent long-double oracles evaluated term by term.
long double oracle_rmse(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (static_cast<long double>(x[i]) - y[i]) * (static_cast<long double>(x[i]) - y[i]);
  return std::sqrt(s / x.size());
}

long double oracle_mae(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(static_cast<long double>(x[i]) - y[i]);
  return s / x.size();
}

long double oracle_mape(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs((static_cast<long double>(x[i]) - y[i]) / x[i]);
  return s / x.size();
}

}  // namespace

TEST_CASE("accuracy examples") {
  const std::vector<double> a{0, 0, 1, 1};
  CHECK(accuracy(a, a) == 1.0);
  CHECK(accuracy(a, std::vector<double>{0, 0, 1, 0}) == 0.75);
  CHECK(accuracy(std::vector<double>{0, 0, 0}, std::vector<double>{1, 1, 1}) == 0.0);
  CHECK_THROWS_AS(accuracy(a, std::vector<double>{0}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("regression metric examples") {
  const std::vector<double> x{1, 2, 4}, y{2, 2, 2};
  CHECK(mae(x, y) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rmse(x, y) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(rmse(x, y) == doctest::Approx(1.2910).epsilon(1e-4));
  CHECK(mape(x, y) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rmse(x, x) == 0.0);
  CHECK(mae(x, x) == 0.0);
  CHECK(mape(x, x) == 0.0);

  std::vector<double> shifted;
  for (double v : x) shifted.push_back(v - 2.5);
  CHECK(mae(x, shifted) == doctest::Approx(2.5));
  CHECK(rmse(x, shifted) == doctest::Approx(2.5));
}

TEST_CASE("mape rejects zero actual values") {
  CHECK_THROWS_AS(mape(std::vector<double>{1, 0}, std::vector<double>{1, 1}), std::domain_error);
}

TEST_CASE("metrics agree with oracles on random vectors") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng.integer(1, 12));
    std::vector<double> x(n), y(n), tc(n), pc(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(0.5, 100.0) * (rng.bernoulli(0.2) ? -1.0 : 1.0);
      y[i] = rng.uniform(-100.0, 100.0);
      tc[i] = static_cast<double>(rng.integer(0, 3));
      pc[i] = static_cast<double>(rng.integer(0, 3));
    }
    CHECK(std::abs(rmse(x, y) - static_cast<double>(oracle_rmse(x, y))) <= 1e-9);
    CHECK(std::abs(mae(x, y) - static_cast<double>(oracle_mae(x, y))) <= 1e-9);
    CHECK(std::abs(mape(x, y) - static_cast<double>(oracle_mape(x, y))) <= 1e-9);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += tc[i] == pc[i];
    CHECK(accuracy(tc, pc) == static_cast<double>(hits) / static_cast<double>(n));
    CHECK(rmse(x, y) >= mae(x, y));

    // Permutation and duplication invariance.
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(std::span(perm));
    std::vector<double> xp(n), yp(n), xx(x), yy(y);
    for (std::size_t i = 0; i < n; ++i) xp[i] = x[perm[i]], yp[i] = y[perm[i]];
    xx.insert(xx.end(), x.begin(), x.end());
    yy.insert(yy.end(), y.begin(), y.end());
    CHECK(mae(xp, yp) == doctest::Approx(mae(x, y)).epsilon(1e-12));
    CHECK(rmse(xx, yy) == doctest::Approx(rmse(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("rmse equals mae iff all absolute errors are equal") {
  const std::vector<double> x{1, 2, 3}, y{2, 1, 4};
  CHECK(rmse(x, y) == doctest::Approx(mae(x, y)));
  CHECK(rmse(x, std::vector<double>{1, 2, 5}) > mae(x, std::vector<double>{1, 2, 5}));
}

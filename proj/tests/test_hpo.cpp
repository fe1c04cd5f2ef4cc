#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "mofit/hpo/objective.hpp"
#include "mofit/hpo/samplers.hpp"
#include "mofit/metrics.hpp"
#include "support/fixtures.hpp"

using namespace mofit;
using namespace mofit::hpo;

namespace {

std::vector<Value> ints(std::initializer_list<std::int64_t> xs) { return {xs.begin(), xs.end()}; }

SearchSpace mixed_space() {
  return SearchSpace({
      ParamSpec::integer("depth", 2, 9).with_grid(ints({2, 5})),
      ParamSpec::continuous("rate", 1e-3, 1e-1, true).with_grid({Value(0.01), Value(0.1)}),
      ParamSpec::continuous("frac", 0.2, 0.8).with_grid({Value(0.5)}),
      ParamSpec::categorical("mode", {Value(std::string("a")), Value(std::string("b")), Value(std::string("c"))}),
      ParamSpec::grid_values("size", ints({16, 32, 64})),
  });
}

double mixed_objective(const Params& p) {
  const double mode = get_text(p, "mode") == "b" ? 1.0 : 0.0;
  return -std::pow(get_real(p, "depth") - 6, 2) - std::pow(std::log10(get_real(p, "rate")) + 2, 2) -
         std::pow(get_real(p, "frac") - 0.3, 2) + mode + get_real(p, "size") / 64.0;
}

std::vector<Study> every_sampler(const SearchSpace& space, const Objective& f, std::uint64_t seed, Direction d) {
  GeneticOptions ga;
  ga.population = 8;
  ga.generations = 5;
  TpeOptions tpe;
  tpe.n_startup = 5;
  return {run_grid(space, f, d), run_random(space, f, 30, seed, d), run_genetic(space, f, ga, seed, d),
          run_tpe(space, f, 30, seed, d, tpe)};
}

// Prefix-scan oracle, independent of history().
std::vector<double> prefix_best(const Study& s) {
  std::vector<double> out;
  for (const auto& t : s.trials) {
    if (!t.complete()) continue;
    double best = t.objective;
    for (const auto& u : s.trials) {
      if (u.id > t.id || !u.complete()) continue;
      best = s.direction == Direction::maximize ? std::max(best, u.objective) : std::min(best, u.objective);
    }
    out.push_back(best);
  }
  return out;
}

double quadratic(const Params& p) { return std::pow(get_real(p, "p") - 3.0, 2); }

const SearchSpace& quadratic_space() {
  static const SearchSpace s({ParamSpec::continuous("p", 0.0, 10.0)});
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("param spec validation") {
  CHECK_THROWS_AS(ParamSpec::integer("a", 3, 3), SpaceError);
  CHECK_THROWS_AS(ParamSpec::continuous("a", 1.0, 0.5), SpaceError);
  CHECK_THROWS_AS(ParamSpec::continuous("a", 0.0, 1.0, true), SpaceError);
  CHECK_THROWS_AS(ParamSpec::categorical("a", {}), SpaceError);
  CHECK_THROWS_AS(ParamSpec::grid_values("a", ints({1, 1})), SpaceError);
  CHECK_THROWS_AS(ParamSpec::integer("a", 0, 5).with_grid(ints({6})), SpaceError);
  CHECK_THROWS_AS(SearchSpace({ParamSpec::integer("a", 0, 1), ParamSpec::integer("a", 0, 2)}), SpaceError);
  CHECK(ParamSpec::integer("a", 0, 3).grid_points().size() == 4);
  CHECK_THROWS_AS(ParamSpec::continuous("a", 0.0, 1.0).grid_points(), SpaceError);
}

TEST_CASE("grid search enumerates the cartesian product once in order") {
  const SearchSpace space({ParamSpec::grid_values("a", ints({1, 2})), ParamSpec::grid_values("b", ints({10, 20, 30}))});
  const auto s = run_grid(space, [](const Params& p) { return get_real(p, "a") * get_real(p, "b"); }, Direction::maximize);
  REQUIRE(s.trials.size() == 6);
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::vector<std::pair<std::int64_t, std::int64_t>> order;
  for (const auto& t : s.trials) {
    const auto key = std::make_pair(get_int(t.params, "a"), get_int(t.params, "b"));
    CHECK(seen.insert(key).second);
    order.push_back(key);
  }
  CHECK(std::is_sorted(order.begin(), order.end()));
  CHECK(get_int(s.best_trial().params, "a") == 2);
  CHECK(get_int(s.best_trial().params, "b") == 30);

  const SearchSpace single({ParamSpec::grid_values("a", ints({7}))});
  const auto one = run_grid(single, [](const Params&) { return 1.0; }, Direction::minimize);
  REQUIRE(one.trials.size() == 1);
  CHECK(one.best_trial().id == 0);

  const SearchSpace three({ParamSpec::grid_values("a", ints({1, 2, 3}))});
  const auto q = run_grid(three, [](const Params& p) { return -std::pow(get_real(p, "a") - 2, 2); }, Direction::maximize);
  CHECK(get_int(q.best_trial().params, "a") == 2);

  const SearchSpace bad({ParamSpec::continuous("x", 0.0, 1.0)});
  CHECK_THROWS_AS(run_grid(bad, [](const Params&) { return 0.0; }, Direction::minimize), SpaceError);
}

TEST_CASE("grid trial count equals the product of grid sizes for every default space") {
  for (auto a : kAllAlgorithms) {
    const auto space = default_space(a);
    std::size_t product = 1;
    for (const auto& spec : space.specs()) product *= spec.grid_points().size();
    CHECK(space.grid_size() == product);
    CHECK(product >= 40);
    CHECK(product <= 60);
    std::atomic<std::size_t> calls{0};
    const auto s = run_grid(space, [&](const Params& p) {
      ++calls;
      CHECK(space.contains(p));
      return 0.0;
    }, Direction::maximize, 4);
    CHECK(s.trials.size() == product);
    CHECK(calls.load() == product);
    std::set<std::string> distinct;
    for (const auto& t : s.trials) distinct.insert(to_json(t.params).dump());
    CHECK(distinct.size() == product);
  }
}

TEST_CASE("random search is bounded and reproducible") {
  const auto space = mixed_space();
  const auto s = run_random(space, mixed_objective, 10, 42, Direction::maximize);
  CHECK(s.trials.size() == 10);
  for (const auto& t : s.trials) CHECK(space.contains(t.params));
  CHECK(run_random(space, mixed_objective, 10, 42, Direction::maximize) == s);
  CHECK(run_random(space, mixed_objective, 10, 42, Direction::maximize, 4) == s);
  CHECK_FALSE(run_random(space, mixed_objective, 10, 43, Direction::maximize) == s);
}

TEST_CASE("log-uniform sampling has the log-midpoint median") {
  const SearchSpace space({ParamSpec::continuous("lr", 1e-3, 1e-1, true)});
  const auto s = run_random(space, [](const Params&) { return 0.0; }, 1000, 5, Direction::minimize);
  std::vector<double> values;
  for (const auto& t : s.trials) values.push_back(get_real(t.params, "lr"));
  const double m = median(values);
  CHECK(m >= 8e-3);
  CHECK(m <= 1.2e-2);

  // Direct simulation with an unrelated generator.
  std::mt19937 gen(99);
  std::uniform_real_distribution<double> u(std::log(1e-3), std::log(1e-1));
  std::vector<double> direct(1000);
  for (auto& v : direct) v = std::exp(u(gen));
  CHECK(std::abs(std::log(m) - std::log(median(direct))) < 0.25);
}

TEST_CASE("every sampler stays in bounds, replays, and keeps best_trial consistent") {
  const auto space = mixed_space();
  for (auto d : {Direction::maximize, Direction::minimize}) {
    const auto studies = every_sampler(space, mixed_objective, 17, d);
    const auto again = every_sampler(space, mixed_objective, 17, d);
    for (std::size_t i = 0; i < studies.size(); ++i) {
      const auto& s = studies[i];
      CAPTURE(to_string(s.sampler));
      CHECK(s == again[i]);
      for (const auto& t : s.trials) CHECK(space.contains(t.params));
      for (std::size_t j = 0; j < s.trials.size(); ++j) CHECK(s.trials[j].id == j);

      const Trial* best = nullptr;
      for (const auto& t : s.trials) {
        if (!best || better(d, t.objective, best->objective)) best = &t;
      }
      CHECK(s.best_trial().id == best->id);

      const auto h = history(s);
      const auto oracle = prefix_best(s);
      REQUIRE(h.size() == oracle.size());
      for (std::size_t j = 0; j < h.size(); ++j) {
        CHECK(h[j].best_so_far == oracle[j]);
        if (j > 0) CHECK(!better(d, h[j - 1].best_so_far, h[j].best_so_far));
      }
      CHECK(h.back().best_so_far == s.best_trial().objective);
    }
  }
}

TEST_CASE("history examples") {
  Study s;
  s.direction = Direction::minimize;
  for (double v : {5.0, 3.0, 4.0}) s.trials.push_back({.id = s.trials.size(), .params = {}, .objective = v});
  const auto h = history(s);
  REQUIRE(h.size() == 3);
  CHECK(h[0].best_so_far == 5.0);
  CHECK(h[1].best_so_far == 3.0);
  CHECK(h[2].best_so_far == 3.0);

  s.trials.resize(1);
  CHECK(history(s).size() == 1);
  CHECK(history(s)[0].best_so_far == 5.0);

  s.trials.clear();
  CHECK_THROWS(history(s));
  CHECK_THROWS(s.best_trial());
}

TEST_CASE("failed trials are recorded and excluded") {
  const SearchSpace space({ParamSpec::grid_values("a", ints({1, 2, 3, 4}))});
  const auto s = run_grid(space, [](const Params& p) {
    if (get_int(p, "a") == 4) throw std::runtime_error("boom");
    if (get_int(p, "a") == 3) return std::nan("");
    return get_real(p, "a");
  }, Direction::maximize);
  REQUIRE(s.trials.size() == 4);
  CHECK(s.trials[3].status == TrialStatus::failed);
  CHECK(s.trials[3].error == "boom");
  CHECK(s.trials[2].status == TrialStatus::failed);
  CHECK(s.n_complete() == 2);
  CHECK(get_int(s.best_trial().params, "a") == 2);
  CHECK(history(s).size() == 2);

  // TPE must keep going with failures in its history.
  const auto t = run_tpe(quadratic_space(), [](const Params& p) {
    if (get_real(p, "p") > 8.0) throw std::runtime_error("too big");
    return quadratic(p);
  }, 30, 3, Direction::minimize);
  CHECK(t.trials.size() == 30);
  for (const auto& tr : t.trials) {
    if (!tr.complete()) CHECK(get_real(tr.params, "p") > 8.0);
  }
}

TEST_CASE("study export round-trips") {
  const auto space = mixed_space();
  for (const auto& s : every_sampler(space, mixed_objective, 8, Direction::maximize)) {
    const auto doc = s.to_json();
    CHECK(Study::from_json(nlohmann::json::parse(doc.dump())) == s);
    CHECK(doc["history"].size() == s.n_complete());
    CHECK(doc["best_trial"] == s.best_trial().id);
  }
  CHECK(SearchSpace::from_json(space.to_json()).to_json() == space.to_json());
}

TEST_CASE("genetic algorithm: budget, elitism and convergence") {
  const SearchSpace space({ParamSpec::integer("a", 0, 100)});
  const auto f = [](const Params& p) { return -std::pow(get_real(p, "a") - 5.0, 2); };

  // Exhaustive enumeration gives the reference optimum.
  std::int64_t arg = 0;
  for (std::int64_t a = 0; a <= 100; ++a) {
    if (f({{"a", a}}) > f({{"a", arg}})) arg = a;
  }
  REQUIRE(arg == 5);

  GeneticOptions o;
  o.population = 10;
  o.generations = 10;
  std::size_t hits = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = run_genetic(space, f, o, seed, Direction::maximize);
    REQUIRE(s.trials.size() == 100);
    double prev = -INFINITY;
    for (std::size_t g = 0; g < o.generations; ++g) {
      double best = -INFINITY;
      for (std::size_t i = 0; i < o.population; ++i) best = std::max(best, s.trials[g * o.population + i].objective);
      CHECK(best >= prev);
      prev = best;
    }
    hits += std::abs(get_int(s.best_trial().params, "a") - arg) <= 2 ? 1 : 0;
  }
  // Resampling mutation explores the 101 values slowly: about three seeds in four
  // reach the band at this budget.
  CHECK(hits >= 130);

  // Minimization keeps a non-increasing generation best.
  const auto m = run_genetic(space, [&](const Params& p) { return -f(p); }, o, 1, Direction::minimize);
  double prev = INFINITY;
  for (std::size_t g = 0; g < o.generations; ++g) {
    double best = INFINITY;
    for (std::size_t i = 0; i < o.population; ++i) best = std::min(best, m.trials[g * o.population + i].objective);
    CHECK(best <= prev);
    prev = best;
  }
}

TEST_CASE("genetic algorithm without variation sources copies its population") {
  const auto space = mixed_space();
  const Params member{{"depth", std::int64_t{4}},
                      {"rate", 0.02},
                      {"frac", 0.5},
                      {"mode", std::string("c")},
                      {"size", std::int64_t{32}}};
  GeneticOptions o;
  o.population = 6;
  o.generations = 4;
  o.mutation = 0.0;
  o.initial.assign(6, member);
  std::atomic<int> calls{0};
  const auto s = run_genetic(space, [&](const Params& p) {
    ++calls;
    return mixed_objective(p);
  }, o, 9, Direction::maximize);
  CHECK(s.trials.size() == 24);
  for (const auto& t : s.trials) CHECK(t.params == member);
  // The elite is carried with its recorded fitness.
  CHECK(calls.load() == 6 + 3 * 5);
  CHECK_THROWS_AS(run_genetic(space, mixed_objective, GeneticOptions{.population = 1}, 0, Direction::maximize),
                  std::invalid_argument);
}

TEST_CASE("tpe startup phase equals random search") {
  const auto space = mixed_space();
  TpeOptions o;
  o.n_startup = 12;
  const auto t = run_tpe(space, mixed_objective, 12, 4, Direction::maximize, o);
  const auto r = run_random(space, mixed_objective, 12, 4, Direction::maximize);
  CHECK(t.trials == r.trials);
  CHECK_THROWS_AS(run_tpe(space, mixed_objective, 5, 4, Direction::maximize, {.n_startup = 0}), std::invalid_argument);
  CHECK_THROWS_AS(run_tpe(space, mixed_objective, 5, 4, Direction::maximize, {.gamma = 1.0}), std::invalid_argument);
}

TEST_CASE("tpe matches or beats random search on the 1-D quadratic") {
  std::vector<double> tpe_best, random_best;
  std::size_t in_band = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto t = run_tpe(quadratic_space(), quadratic, 50, seed, Direction::minimize);
    const auto r = run_random(quadratic_space(), quadratic, 50, seed, Direction::minimize);
    tpe_best.push_back(t.best_trial().objective);
    random_best.push_back(r.best_trial().objective);
    const double p = get_real(t.best_trial().params, "p");
    in_band += p >= 2.5 && p <= 3.5 ? 1 : 0;
  }
  CHECK(in_band >= 90);
  CHECK(median(tpe_best) <= median(random_best));
}

TEST_CASE("tpe handles categorical and integer parameters") {
  const SearchSpace space({ParamSpec::integer("n", 0, 20),
                           ParamSpec::categorical("c", {Value(std::string("x")), Value(std::string("y")),
                                                        Value(std::string("z")), Value(std::string("w"))})});
  const auto f = [](const Params& p) { return std::abs(get_real(p, "n") - 13) + (get_text(p, "c") == "z" ? 0 : 5); };
  std::size_t solved = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = run_tpe(space, f, 40, seed, Direction::minimize);
    for (const auto& t : s.trials) CHECK(space.contains(t.params));
    solved += s.best_trial().objective <= 1.0 ? 1 : 0;
  }
  CHECK(solved >= 16);
}

TEST_CASE("folds partition the rows") {
  const auto ds = testing::make_dataset({{0}, {1}, {2}, {3}}, {0, 1, 0, 1}, 2);
  const auto folds = make_folds(ds, 2, 1);
  REQUIRE(folds.size() == 2);
  CHECK(folds[0].size() == 2);
  CHECK(folds[1].size() == 2);
  std::vector<std::size_t> all(folds[0]);
  all.insert(all.end(), folds[1].begin(), folds[1].end());
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3});
  for (const auto& f : folds) CHECK(ds.y[f[0]] != ds.y[f[1]]);

  const auto reg = testing::make_dataset({{0}, {1}, {2}, {3}}, {0.5, 1.5, 2.5, 3.5}, 0);
  CHECK(make_folds(reg, 2, 1)[0].size() == 2);
  CHECK_THROWS_AS(make_folds(ds, 1, 1), FoldError);
  CHECK_THROWS_AS(make_folds(ds, 5, 1), FoldError);
  const auto rare = testing::make_dataset({{0}, {1}, {2}, {3}}, {0, 0, 0, 1}, 2);
  CHECK_THROWS_AS(make_folds(rare, 2, 1), FoldError);
}

TEST_CASE("constant predictions on balanced binary folds score 0.5") {
  // With k equal to the fit size, uniform KNN sees a 2-2 tie and predicts class 0.
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 8; ++i) {
    rows.push_back({static_cast<double>(i)});
    y.push_back(i % 2);
  }
  const CvObjective cv(Algorithm::knn, testing::make_dataset(rows, y, 2), 2, 3);
  CHECK(cv.direction() == Direction::maximize);
  CHECK(cv({{"k", std::int64_t{4}}, {"weighting", std::string("uniform")}}) == 0.5);
}

TEST_CASE("cv objective is deterministic, reads only training rows, and tracks held-out accuracy") {
  const auto ds = prepare_obesity_classification(testing::synthetic_obesity_table());
  const auto sp = split(ds, 0.8, 2024, true);
  std::set<std::size_t> test_ids(sp.test.row_ids.begin(), sp.test.row_ids.end());
  std::set<std::size_t> seen;
  std::mutex m;
  const CvObjective cv(Algorithm::random_forest, sp.train, 3, 11, [&](std::span<const std::size_t> ids) {
    std::lock_guard lock(m);
    seen.insert(ids.begin(), ids.end());
  });
  const Params p{{"n_trees", std::int64_t{60}},
                 {"max_depth", std::int64_t{12}},
                 {"min_samples_split", std::int64_t{2}},
                 {"max_features", std::string("sqrt")}};
  const double estimate = cv(p);
  CHECK(cv(p) == estimate);
  CHECK(seen == std::set<std::size_t>(sp.train.row_ids.begin(), sp.train.row_ids.end()));
  for (auto id : seen) CHECK(test_ids.count(id) == 0);

  const auto model = fit_algorithm(Algorithm::random_forest, p, sp.train, 11);
  const double held_out = metrics::accuracy(sp.test.y, learners::predict_all(model, sp.test.X));
  CHECK(std::abs(estimate - held_out) <= 0.05);
}

TEST_CASE("regression cv minimizes rmse") {
  const auto ds = prepare_bodyfat(testing::synthetic_bodyfat_table());
  const CvObjective cv(Algorithm::knn, ds, 3, 5);
  CHECK(cv.direction() == Direction::minimize);
  const double a = cv({{"k", std::int64_t{5}}, {"weighting", std::string("uniform")}});
  CHECK(a > 0.0);
  CHECK(std::isfinite(a));
  CHECK_THROWS_AS(cv({{"k", std::int64_t{5}}}), SpaceError);
}

TEST_CASE("every algorithm fits from its default space samples") {
  const auto ds = prepare_bodyfat(testing::synthetic_bodyfat_table());
  Rng rng(1);
  for (auto a : kAllAlgorithms) {
    const auto space = default_space(a);
    CHECK(parse_algorithm(to_string(a)) == a);
    for (int i = 0; i < 3; ++i) {
      const auto p = space.sample(rng);
      const auto m = fit_algorithm(a, p, ds, 7);
      CHECK(learners::predict_all(m, ds.X).size() == ds.size());
    }
  }
}

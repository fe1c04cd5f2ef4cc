#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "mofit/hpo/space.hpp"
#include "mofit/hpo/study.hpp"

namespace mofit::hpo {

/// Must be safe to call concurrently when n_threads > 1. An exception marks the
/// trial failed; the study continues.
using Objective = std::function<double(const Params&)>;

/// Full Cartesian product in lexicographic order of spec order (last spec varies fastest).
Study run_grid(const SearchSpace& space, const Objective& objective, Direction direction, std::size_t n_threads = 1);

Study run_random(const SearchSpace& space, const Objective& objective, std::size_t n_trials, std::uint64_t seed,
                 Direction direction, std::size_t n_threads = 1);

struct GeneticOptions {
  std::size_t population = 10;
  std::size_t generations = 5;
  std::size_t tournament = 3;
  std::size_t elite = 1;
  double mutation = 0.2;   // per-gene resampling probability
  double crossover = 0.5;  // per-gene probability of taking the second parent
  std::vector<Params> initial;  // optional generation-0 members; the rest are random
  std::size_t n_threads = 1;
};

/// Elite members are carried into the next generation with their recorded fitness
/// and appear again as trials; the objective is not re-evaluated for them.
Study run_genetic(const SearchSpace& space, const Objective& objective, const GeneticOptions& options,
                  std::uint64_t seed, Direction direction);

struct TpeOptions {
  std::size_t n_startup = 10;
  double gamma = 0.25;
  std::size_t n_candidates = 24;
};

/// Independent (per-parameter) tree-structured Parzen estimator.
Study run_tpe(const SearchSpace& space, const Objective& objective, std::size_t n_trials, std::uint64_t seed,
              Direction direction, const TpeOptions& options = {});

}  // namespace mofit::hpo

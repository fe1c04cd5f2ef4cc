#include "mofit/hpo/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>

#include "mofit/parallel.hpp"

namespace mofit::hpo {

namespace {

void evaluate_one(const Objective& objective, Trial& t) {
  try {
    const double v = objective(t.params);
    if (!std::isfinite(v)) throw std::runtime_error("objective returned a non-finite value");
    t.objective = v;
    t.status = TrialStatus::complete;
  } catch (const std::exception& e) {
    t.objective = 0.0;
    t.status = TrialStatus::failed;
    t.error = e.what();
  }
}

void evaluate(const Objective& objective, std::span<Trial> batch, std::size_t n_threads) {
  parallel_for(batch.size(), n_threads, [&](std::size_t i) { evaluate_one(objective, batch[i]); });
}

Study make_study(SamplerKind sampler, Direction direction, std::uint64_t seed, std::size_t budget) {
  Study s;
  s.sampler = sampler;
  s.direction = direction;
  s.seed = seed;
  s.budget = budget;
  return s;
}

// Failed trials rank below every complete one.
double fitness(const Trial& t, Direction d) {
  if (t.complete()) return t.objective;
  return d == Direction::maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
}

}  // namespace

Study run_grid(const SearchSpace& space, const Objective& objective, Direction direction, std::size_t n_threads) {
  std::vector<std::vector<Value>> axes;
  for (const auto& s : space.specs()) axes.push_back(s.grid_points());
  const std::size_t total = space.grid_size();

  Study study = make_study(SamplerKind::grid, direction, 0, total);
  study.trials.resize(total);
  std::vector<std::size_t> digit(axes.size(), 0);
  for (std::size_t id = 0; id < total; ++id) {
    auto& t = study.trials[id];
    t.id = id;
    for (std::size_t a = 0; a < axes.size(); ++a) t.params[space.specs()[a].name()] = axes[a][digit[a]];
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++digit[a] < axes[a].size()) break;
      digit[a] = 0;
    }
  }
  evaluate(objective, study.trials, n_threads);
  return study;
}

Study run_random(const SearchSpace& space, const Objective& objective, std::size_t n_trials, std::uint64_t seed,
                 Direction direction, std::size_t n_threads) {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  Study study = make_study(SamplerKind::random, direction, seed, n_trials);
  Rng rng(seed);
  study.trials.resize(n_trials);
  for (std::size_t i = 0; i < n_trials; ++i) {
    study.trials[i].id = i;
    study.trials[i].params = space.sample(rng);
  }
  evaluate(objective, study.trials, n_threads);
  return study;
}

Study run_genetic(const SearchSpace& space, const Objective& objective, const GeneticOptions& o, std::uint64_t seed,
                  Direction direction) {
  if (o.population < 2) throw std::invalid_argument("population must be >= 2");
  if (o.generations < 1) throw std::invalid_argument("generations must be >= 1");
  if (o.tournament < 1) throw std::invalid_argument("tournament size must be >= 1");
  if (o.elite >= o.population) throw std::invalid_argument("elite count must be below the population size");
  if (!(o.mutation >= 0.0 && o.mutation <= 1.0) || !(o.crossover >= 0.0 && o.crossover <= 1.0)) {
    throw std::invalid_argument("mutation and crossover must be probabilities");
  }
  if (o.initial.size() > o.population) throw std::invalid_argument("more initial members than the population size");

  Study study = make_study(SamplerKind::genetic, direction, seed, o.population * o.generations);
  Rng rng(seed);

  // A member is a chromosome plus, for carried-over elites, its already known result.
  struct Member {
    Params genes;
    std::optional<Trial> known;
  };
  std::vector<Member> population;
  for (const auto& p : o.initial) {
    if (!space.contains(p)) throw std::invalid_argument("initial member outside the search space");
    population.push_back({p, std::nullopt});
  }
  while (population.size() < o.population) population.push_back({space.sample(rng), std::nullopt});

  for (std::size_t gen = 0; gen < o.generations; ++gen) {
    const std::size_t first = study.trials.size();
    std::vector<Trial> batch(o.population);
    std::vector<std::size_t> fresh;
    for (std::size_t i = 0; i < o.population; ++i) {
      auto& t = batch[i];
      if (population[i].known) {
        t = *population[i].known;
      } else {
        t.params = population[i].genes;
        fresh.push_back(i);
      }
      t.id = first + i;
    }
    parallel_for(fresh.size(), o.n_threads, [&](std::size_t j) { evaluate_one(objective, batch[fresh[j]]); });
    study.trials.insert(study.trials.end(), batch.begin(), batch.end());
    if (gen + 1 == o.generations) break;

    std::vector<std::size_t> rank(o.population);
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
      return better(direction, fitness(batch[a], direction), fitness(batch[b], direction));
    });
    auto tournament = [&]() -> const Params& {
      std::size_t best = rng.index(o.population);
      for (std::size_t k = 1; k < o.tournament; ++k) {
        const std::size_t c = rng.index(o.population);
        const double fc = fitness(batch[c], direction), fb = fitness(batch[best], direction);
        if (better(direction, fc, fb) || (fc == fb && c < best)) best = c;
      }
      return batch[best].params;
    };

    std::vector<Member> next;
    for (std::size_t e = 0; e < o.elite; ++e) next.push_back({batch[rank[e]].params, batch[rank[e]]});
    while (next.size() < o.population) {
      const Params& a = tournament();
      const Params& b = tournament();
      Params child;
      for (const auto& spec : space.specs()) {
        const auto& name = spec.name();
        child[name] = rng.bernoulli(o.crossover) ? b.at(name) : a.at(name);
        if (o.mutation > 0.0 && rng.bernoulli(o.mutation)) child[name] = spec.sample(rng);
      }
      next.push_back({std::move(child), std::nullopt});
    }
    population = std::move(next);
  }
  return study;
}

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Mixture of Gaussians truncated to [lo, hi] on the sampling axis: one kernel per
// observation plus a broad prior kernel centred on the range, all equally weighted.
class Parzen {
 public:
  Parzen(std::vector<double> points, double lo, double hi) : lo_(lo), hi_(hi) {
    std::sort(points.begin(), points.end());
    const double width = hi - lo;
    const double floor_bw = width / std::min(100.0, static_cast<double>(points.size()) + 1.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double left = points[i] - (i == 0 ? lo : points[i - 1]);
      const double right = (i + 1 == points.size() ? hi : points[i + 1]) - points[i];
      add(points[i], std::clamp(std::max(left, right), floor_bw, width));
    }
    add(lo + width / 2.0, width);
  }

  double sample(Rng& rng) const {
    const auto& [mu, sigma, mass] = kernels_[rng.index(kernels_.size())];
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double x = rng.normal(mu, sigma);
      if (x >= lo_ && x <= hi_) return x;
    }
    return rng.uniform(lo_, hi_);
  }

  double log_density(double x) const {
    double hi = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(kernels_.size());
    for (const auto& [mu, sigma, mass] : kernels_) {
      const double z = (x - mu) / sigma;
      const double t = -0.5 * z * z - kLogSqrt2Pi - std::log(sigma) - std::log(mass);
      terms.push_back(t);
      hi = std::max(hi, t);
    }
    double s = 0.0;
    for (double t : terms) s += std::exp(t - hi);
    return hi + std::log(s) - std::log(static_cast<double>(kernels_.size()));
  }

 private:
  struct Kernel {
    double mu, sigma, mass;
  };

  void add(double mu, double sigma) {
    const double mass = std::max(normal_cdf((hi_ - mu) / sigma) - normal_cdf((lo_ - mu) / sigma), 1e-300);
    kernels_.push_back({mu, sigma, mass});
  }

  double lo_, hi_;
  std::vector<Kernel> kernels_;
};

Value suggest_numeric(const ParamSpec& spec, const std::vector<const Trial*>& good,
                      const std::vector<const Trial*>& bad, std::size_t n_candidates, Rng& rng) {
  auto axis = [&](const std::vector<const Trial*>& set) {
    std::vector<double> out;
    for (const auto* t : set) out.push_back(spec.to_axis(t->params.at(spec.name())));
    return out;
  };
  const Parzen l(axis(good), spec.axis_lo(), spec.axis_hi());
  const Parzen g(axis(bad), spec.axis_lo(), spec.axis_hi());
  double best_x = 0.0, best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n_candidates; ++c) {
    const double x = l.sample(rng);
    const double s = l.log_density(x) - g.log_density(x);
    if (c == 0 || s > best_score) {
      best_score = s;
      best_x = x;
    }
  }
  return spec.from_axis(best_x);
}

Value suggest_choice(const ParamSpec& spec, const std::vector<const Trial*>& good, const std::vector<const Trial*>& bad,
                     std::size_t n_candidates, Rng& rng) {
  const auto& values = spec.values();
  auto weights = [&](const std::vector<const Trial*>& set) {
    std::vector<double> w(values.size(), 1.0);
    for (const auto* t : set) {
      const auto it = std::find(values.begin(), values.end(), t->params.at(spec.name()));
      if (it != values.end()) w[static_cast<std::size_t>(it - values.begin())] += 1.0;
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
    return w;
  };
  const auto pl = weights(good), pg = weights(bad);
  std::size_t best = 0;
  double best_ratio = -1.0;
  for (std::size_t c = 0; c < n_candidates; ++c) {
    double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < pl.size() && u >= pl[k]) u -= pl[k++];
    const double ratio = pl[k] / pg[k];
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = k;
    }
  }
  return values[best];
}

}  // namespace

Study run_tpe(const SearchSpace& space, const Objective& objective, std::size_t n_trials, std::uint64_t seed,
              Direction direction, const TpeOptions& o) {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  if (o.n_startup < 1) throw std::invalid_argument("n_startup must be >= 1");
  if (!(o.gamma > 0.0 && o.gamma < 1.0)) throw std::invalid_argument("gamma must be in (0, 1)");
  if (o.n_candidates < 1) throw std::invalid_argument("n_candidates must be >= 1");

  Study study = make_study(SamplerKind::tpe, direction, seed, n_trials);
  Rng rng(seed);
  for (std::size_t i = 0; i < n_trials; ++i) {
    std::vector<const Trial*> done;
    for (const auto& t : study.trials) {
      if (t.complete()) done.push_back(&t);
    }
    Trial t;
    t.id = i;
    if (i < o.n_startup || done.size() < 2) {
      t.params = space.sample(rng);
    } else {
      std::stable_sort(done.begin(), done.end(),
                       [&](const Trial* a, const Trial* b) { return better(direction, a->objective, b->objective); });
      const auto n_good = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::ceil(o.gamma * static_cast<double>(done.size()))), 1, done.size() - 1);
      const std::vector<const Trial*> good(done.begin(), done.begin() + static_cast<std::ptrdiff_t>(n_good));
      const std::vector<const Trial*> bad(done.begin() + static_cast<std::ptrdiff_t>(n_good), done.end());
      for (const auto& spec : space.specs()) {
        t.params[spec.name()] = spec.numeric() ? suggest_numeric(spec, good, bad, o.n_candidates, rng)
                                               : suggest_choice(spec, good, bad, o.n_candidates, rng);
      }
    }
    evaluate_one(objective, t);
    study.trials.push_back(std::move(t));
  }
  return study;
}

}  // namespace mofit::hpo

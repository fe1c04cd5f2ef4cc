#include "support/bundle_fixture.hpp"

#include "support/fixtures.hpp"

namespace mofit::testing {

experiment::BenchmarkConfig fixture_config(const std::filesystem::path& out) {
  using hpo::ParamSpec;
  auto ints = [](std::initializer_list<std::int64_t> xs) { return std::vector<hpo::Value>(xs.begin(), xs.end()); };
  experiment::BenchmarkConfig c;
  c.seed = 5;
  c.trials = 3;
  c.output_dir = out;
  c.algorithms = {hpo::Algorithm::random_forest, hpo::Algorithm::extra_trees, hpo::Algorithm::gbm};
  c.samplers = {hpo::SamplerKind::grid, hpo::SamplerKind::random};
  const hpo::SearchSpace forest({
      ParamSpec::integer("n_trees", 10, 30).with_grid(ints({20})),
      ParamSpec::integer("max_depth", 8, 30).with_grid(ints({12, 30})),
      ParamSpec::integer("min_samples_split", 2, 4).with_grid(ints({2})),
      ParamSpec::categorical("max_features", {hpo::Value(std::string("sqrt")), hpo::Value(std::string("all"))}),
  });
  c.spaces.emplace(hpo::Algorithm::random_forest, forest);
  c.spaces.emplace(hpo::Algorithm::extra_trees, forest);
  c.spaces.emplace(hpo::Algorithm::gbm, hpo::SearchSpace({
                                            ParamSpec::integer("n_rounds", 20, 60).with_grid(ints({40})),
                                            ParamSpec::continuous("learning_rate", 0.05, 0.3, true)
                                                .with_grid({hpo::Value(0.1), hpo::Value(0.2)}),
                                            ParamSpec::integer("max_depth", 2, 4).with_grid(ints({3})),
                                            ParamSpec::continuous("lambda", 0.5, 2.0).with_grid({hpo::Value(1.0)}),
                                            ParamSpec::continuous("subsample", 0.8, 1.0).with_grid({hpo::Value(1.0)}),
                                        }));
  c.n_threads = 4;
  return c;
}

FixtureBundle make_fixture_bundle(const std::filesystem::path& out) {
  FixtureBundle f;
  const auto& c = f.config = fixture_config(out);
  f.tasks = experiment::prepare_tasks(c, synthetic_obesity_table(), synthetic_bodyfat_table());
  experiment::write_outputs(c, experiment::run_benchmark(c, f.tasks), {});
  f.bundle = experiment::export_models(c, f.tasks);
  return f;
}

}  // namespace mofit::testing

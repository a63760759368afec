#include "smfpca/orthonorm.hpp"
#include "smfpca/pipeline.hpp"
#include "smfpca/simgen.hpp"
#include "smfpca/ufpca.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <random>

using namespace smfpca;

namespace {

const SimulatedData& scenario_data(int index) {
  static std::map<int, SimulatedData> cache;
  auto it = cache.find(index);
  if (it == cache.end()) {
    ScenarioConfig cfg = scenario(index);
    cfg.seed = 1;
    it = cache.emplace(index, generate(cfg)).first;
  }
  return it->second;
}

UnivariateSample centered_first_variable(int index) {
  const SimulatedData& sim = scenario_data(index);
  UnivariateSample s = extract_variable(sim.data, 0);
  for (auto& x : s)
    for (Eigen::Index j = 0; j < x.size(); ++j) x.y[j] -= sim_mean(0, x.t[j]);
  return s;
}

}  // namespace

static void BM_WeightedMgs(benchmark::State& state) {
  const auto h = static_cast<Eigen::Index>(state.range(0));
  const QuadratureGrid g = build_grid({0.0, 1.0}, static_cast<std::size_t>(h));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Eigen::MatrixXd raw(h, 4);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_mgs(raw, g));
}
BENCHMARK(BM_WeightedMgs)->Arg(101)->Arg(1001);

static void BM_NllGradient(benchmark::State& state) {
  const UnivariateSample s = centered_first_variable(static_cast<int>(state.range(0)));
  const BasisSystem b = eval_basis({BasisKind::BSpline, 8, 4, {0.0, 1.0}}, build_grid({0.0, 1.0}, 101));
  const NllObjective obj(s, b);
  const UnivariateParams p = initial_params(s, b, 3, 0);
  UnivariateParams grad;
  for (auto _ : state) benchmark::DoNotOptimize(obj.value_and_gradient(p, grad));
}
BENCHMARK(BM_NllGradient)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);

static void BM_FitUnivariate(benchmark::State& state) {
  const UnivariateSample s = centered_first_variable(2);
  const BasisSystem b = eval_basis({BasisKind::BSpline, 8, 4, {0.0, 1.0}}, build_grid({0.0, 1.0}, 101));
  for (auto _ : state) benchmark::DoNotOptimize(fit(s, b, 3));
}
BENCHMARK(BM_FitUnivariate)->Unit(benchmark::kMillisecond);

static void BM_Pipeline(benchmark::State& state) {
  const SimulatedData& sim = scenario_data(2);
  for (auto _ : state) benchmark::DoNotOptimize(fit_pipeline(sim.data));
}
BENCHMARK(BM_Pipeline)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK_MAIN();

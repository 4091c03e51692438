#include <benchmark/benchmark.h>

#include <roaid/estimator.hpp>

using namespace roaid;

namespace {

VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

const RegionSpec kRegion{2, 1.5};

DataSet dataset(int n) { return sample_dataset(example_system(), {v2(1, -1), v2(-1, -1)}, n, 10.0, 1e-3, 0); }

void BM_KernelMixedSecond(benchmark::State& state) {
  const KernelSpec k = KernelSpec::gaussian(1.0);
  const VectorXd x = v2(0.3, -0.2), y = v2(-0.7, 0.9);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_mixed_second(k, 0, 1, x, y));
}
BENCHMARK(BM_KernelMixedSecond);

void BM_AssembleGram(benchmark::State& state) {
  const int nr = static_cast<int>(state.range(0));
  const DataSet d = dataset(19);
  const Centers c(2, d.x, generate_polar_grid(kRegion, nr, 20).points);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_gram(KernelSpec::gaussian(1.0), c).K.data());
  state.counters["m"] = static_cast<double>(c.m());
}
BENCHMARK(BM_AssembleGram)->Arg(5)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_FitConstrained(benchmark::State& state) {
  const DataSet d = dataset(19);
  const GridSet g = generate_polar_grid(kRegion, static_cast<int>(state.range(0)), 20);
  FitConfig c;
  c.lambda = 1e-4;
  for (auto _ : state) benchmark::DoNotOptimize(fit(d, kRegion, g, KernelSpec::gaussian(2.0), c).A.data());
}
BENCHMARK(BM_FitConstrained)->Arg(5)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_FitAblation(benchmark::State& state) {
  const DataSet d = dataset(19);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit(d, kRegion, {}, KernelSpec::gaussian(2.0), FitConfig::ablation(1e-4)).A.data());
}
BENCHMARK(BM_FitAblation)->Unit(benchmark::kMillisecond);

void BM_GreedyCover(benchmark::State& state) {
  const double alpha = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(greedy_cover_grid(kRegion, alpha, 0.3).size());
}
BENCHMARK(BM_GreedyCover)->Arg(2)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Integrate(benchmark::State& state) {
  const VectorField f = example_system();
  for (auto _ : state) benchmark::DoNotOptimize(integrate(f, v2(1, -1), 10.0, 1e-3).states.size());
}
BENCHMARK(BM_Integrate)->Unit(benchmark::kMillisecond);

void BM_RSquaredLattice(benchmark::State& state) {
  const VectorField f = example_system();
  for (auto _ : state) benchmark::DoNotOptimize(r_squared(f, f, EvalBox::unit(2), 51));
}
BENCHMARK(BM_RSquaredLattice)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

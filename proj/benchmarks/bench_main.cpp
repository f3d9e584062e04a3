#include <benchmark/benchmark.h>

#include "aoidrift/analytic.hpp"
#include "aoidrift/dtmc.hpp"
#include "aoidrift/model.hpp"
#include "aoidrift/sim.hpp"

namespace {

using namespace aoidrift;

const Channel kChannel{0.5};
const DriftModel kPositive{CategoricalPositive{4, 0.1}};
const DriftModel kTernary{Ternary{0.2, 0.5, 0.3}};

void BM_SimulateSlots(benchmark::State& state) {
  const long slots = state.range(0);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const RunStats stats = run(kPositive, kChannel, slots, seed++);
    benchmark::DoNotOptimize(stats.mean_aoi);
  }
  state.SetItemsProcessed(state.iterations() * slots);
}
BENCHMARK(BM_SimulateSlots)->Arg(10'000)->Arg(100'000)->Arg(1'000'000);

void BM_ChainBuild(benchmark::State& state) {
  const long i_max = state.range(0);
  for (auto _ : state) {
    const TransitionMatrix m = build_chain(kTernary, kChannel, i_max);
    benchmark::DoNotOptimize(m.size());
  }
}
BENCHMARK(BM_ChainBuild)->Arg(64)->Arg(256)->Arg(1024);

void BM_ChainSolvePower(benchmark::State& state) {
  const TransitionMatrix m = build_chain(kTernary, kChannel, state.range(0));
  for (auto _ : state) {
    const StationarySolution sol = stationary(m);
    benchmark::DoNotOptimize(sol.pi.data());
  }
}
BENCHMARK(BM_ChainSolvePower)->Arg(64)->Arg(256)->Arg(1024);

void BM_ChainSolveDirect(benchmark::State& state) {
  const TransitionMatrix m = build_chain(kTernary, kChannel, state.range(0));
  for (auto _ : state) {
    const StationarySolution sol =
        stationary(m, 1e-12, 1'000'000, SolveMethod::direct_linear);
    benchmark::DoNotOptimize(sol.pi.data());
  }
}
BENCHMARK(BM_ChainSolveDirect)->Arg(64)->Arg(256);

void BM_AnalyticPmf(benchmark::State& state) {
  for (auto _ : state) {
    const AoiPmf pmf = aoi_pmf(kTernary, kChannel);
    benchmark::DoNotOptimize(pmf.total_mass());
  }
}
BENCHMARK(BM_AnalyticPmf);

void BM_AnalyticMeanGrid(benchmark::State& state) {
  for (auto _ : state) {
    double acc = 0.0;
    for (int k = 1; k <= 8; ++k) {
      acc += avg_aoi(DriftModel{CategoricalPositive{k, 0.1}}, kChannel);
    }
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_AnalyticMeanGrid);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "uavplan/harness.hpp"
#include "uavplan/queueing.hpp"
#include "uavplan/ra_opt.hpp"
#include "uavplan/scheduler.hpp"

using namespace uavplan;

namespace {

RaInstance instance_for(int clusters, int rbs) {
  RadioParams radio;
  radio.total_rbs = rbs;
  return run_pipeline(generate_scenario(1, clusters, 1, 10, radio)).instance;
}

void BM_SolveReduced(benchmark::State& state) {
  const auto inst = instance_for(static_cast<int>(state.range(0)), 24);
  for (auto _ : state) benchmark::DoNotOptimize(solve_reduced(inst));
}
BENCHMARK(BM_SolveReduced)->Arg(5)->Arg(20)->Arg(80);

void BM_SolveKkt(benchmark::State& state) {
  const auto inst = instance_for(static_cast<int>(state.range(0)), 24);
  for (auto _ : state) benchmark::DoNotOptimize(solve_kkt(inst));
}
BENCHMARK(BM_SolveKkt)->Arg(5)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const auto scenario = generate_scenario(1, 20, 1, 10);
  const auto rates = arrival_rates(scenario);
  const auto plan = find_dwell(rates, min_uavs(rates));
  SimulationOptions opt;
  opt.horizon = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(scenario, plan->dwell, opt));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 20);
}
BENCHMARK(BM_Simulate)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& state) {
  const auto scenario = generate_scenario(1, static_cast<int>(state.range(0)), 1, 10);
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(scenario));
}
BENCHMARK(BM_Pipeline)->Arg(20)->Arg(80);

}  // namespace

BENCHMARK_MAIN();

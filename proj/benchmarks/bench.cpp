#include <benchmark/benchmark.h>

#include "dchmac/analysis.hpp"
#include "dchmac/config.hpp"
#include "dchmac/grid.hpp"
#include "dchmac/mac.hpp"
#include "dchmac/random.hpp"
#include "dchmac/simulator.hpp"

using namespace dchmac;

static void BM_SolveMarkov(benchmark::State& st) {
  int W = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(solve_markov(W, 5, 0.6, 4).tau);
}
BENCHMARK(BM_SolveMarkov)->Arg(16)->Arg(64)->Arg(1024);

static void BM_GridSchedule(benchmark::State& st) {
  int x = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(grid_schedule(x).L);
}
BENCHMARK(BM_GridSchedule)->DenseRange(2, 8, 3);

static void BM_AllocateSlots(benchmark::State& st) {
  RandomStream rng(7);
  ReservationTable t;
  for (int cid = 3; cid < 3 + st.range(0); ++cid) {
    auto kind = rng.bernoulli(0.5) ? TransferKind::Intra : TransferKind::Inter;
    t.demands.push_back({static_cast<NodeId>(cid), static_cast<Cid>(cid), 0, kind,
                         static_cast<int>(rng.range(1, 4))});
  }
  HeadIds heads{0, 1, 0};
  for (auto _ : st) benchmark::DoNotOptimize(allocate_slots(t, 50, heads).intra_used);
}
BENCHMARK(BM_AllocateSlots)->Arg(10)->Arg(50);

static void BM_Run(benchmark::State& st) {
  auto p = static_cast<Protocol>(st.range(0));
  ValidatedConfig cfg = validate_config(ScenarioConfig{});
  for (auto _ : st) {
    benchmark::DoNotOptimize(run(cfg, p, 20, RunOptions{.keep_trace = false}).throughput_total);
  }
  st.SetLabel(std::string(to_string(p)));
}
BENCHMARK(BM_Run)
    ->Arg(static_cast<int>(Protocol::DCHMAC))
    ->Arg(static_cast<int>(Protocol::FMMAC))
    ->Arg(static_cast<int>(Protocol::FLAT80211))
    ->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();

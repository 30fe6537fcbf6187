#include <benchmark/benchmark.h>

#include "wlanfair/analytic.hpp"
#include "wlanfair/fairness.hpp"
#include "wlanfair/sim.hpp"

using namespace wlanfair;

namespace {

NetworkScenario mixed_three() {
    NetworkScenario sc;
    const char* ids[] = {"fast1", "fast2", "slow"};
    const double rates[] = {11e6, 11e6, 1e6};
    const double lambdas[] = {500, 500, 1000};
    for (int j = 0; j < 3; ++j) {
        StationConfig st;
        st.id = ids[j];
        st.rate_bps = rates[j];
        st.lambda_pkt_s = lambdas[j];
        sc.stations.push_back(st);
    }
    return sc;
}

void BM_SolveEquilibrium(benchmark::State& state) {
    NetworkScenario sc = mixed_three();
    for (auto _ : state) {
        EquilibriumSolution eq = solve_equilibrium(sc);
        benchmark::DoNotOptimize(eq.aggregate_bps);
    }
}
BENCHMARK(BM_SolveEquilibrium);

void BM_OptimizeMlpf(benchmark::State& state) {
    NetworkScenario sc = mixed_three();
    for (auto _ : state) {
        AllocationResult r = optimize(sc, Criterion::MLPF);
        benchmark::DoNotOptimize(r.aggregate_bps);
    }
}
BENCHMARK(BM_OptimizeMlpf);

void BM_ExpectedSlot(benchmark::State& state) {
    NetworkScenario sc = mixed_three();
    DurationClassing cl = classify_stations(sc);
    std::vector<double> taus = {0.02, 0.03, 0.01};
    for (auto _ : state) {
        SlotTimeBreakdown slot = expected_slot(taus, sc, cl);
        benchmark::DoNotOptimize(slot.t_av_us);
    }
}
BENCHMARK(BM_ExpectedSlot);

void BM_Simulate10s(benchmark::State& state) {
    NetworkScenario sc = mixed_three();
    std::uint64_t slots = 0;
    for (auto _ : state) {
        SimResult r = simulate(sc, 10.0, 42);
        slots += r.slots_total;
        benchmark::DoNotOptimize(r.aggregate_bps);
    }
    state.SetItemsProcessed(static_cast<int64_t>(slots));
}
BENCHMARK(BM_Simulate10s)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();

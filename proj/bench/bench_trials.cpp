// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "tdsim/experiments.hpp"
#include "tdsim/mapping.hpp"

#ifdef TDSIM_HAVE_OPENMP
#include <omp.h>
#endif

using namespace tdsim;

namespace {

Execution exec_of(const benchmark::State& state) {
    return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void label(benchmark::State& state) {
#ifdef TDSIM_HAVE_OPENMP
    state.SetLabel(state.range(0) == 0 ? "serial" : "omp x" + std::to_string(omp_get_max_threads()));
#else
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel (no OpenMP)");
#endif
}

void BM_RunCell(benchmark::State& state) {
    ExperimentPlan plan;
    plan.trials_per_cell = 2000;
    const CellSpec cell{AttackKind::A1, preset_by_name("c-lightning"), "c-lightning", BackendKind::FullNode};
    for (auto _ : state) benchmark::DoNotOptimize(run_cell(cell, plan, 42, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * plan.trials_per_cell);
    label(state);
}
BENCHMARK(BM_RunCell)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FailureSweep(benchmark::State& state) {
    const SimTime delays[] = {1170, 1470, 1770};
    const long trials = 5000;
    for (auto _ : state) benchmark::DoNotOptimize(failure_sweep(delays, 144, trials, 42, {}, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * trials * 3);
    label(state);
}
BENCHMARK(BM_FailureSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_OriginInference(benchmark::State& state) {
    const SybilPool pool{50, 100, 8, 0.0};
    const long trials = 200'000;
    for (auto _ : state) {
        benchmark::DoNotOptimize(state.range(0) == 0 ? simulate_origin_inference_serial(pool, trials, 42)
                                                     : simulate_origin_inference(pool, trials, 42));
    }
    state.SetItemsProcessed(state.iterations() * trials);
    label(state);
}
BENCHMARK(BM_OriginInference)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

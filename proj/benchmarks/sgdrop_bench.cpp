#include <benchmark/benchmark.h>

#include "sgdrop/dynamics.hpp"
#include "sgdrop/interference.hpp"
#include "sgdrop/reference_integrator.hpp"
#include "sgdrop/schedule.hpp"

using namespace sgdrop;

namespace {

void BM_BuildSchedule(benchmark::State& state) {
    const auto s = paper_preset();
    for (auto _ : state) benchmark::DoNotOptimize(build_schedule(s));
}
BENCHMARK(BM_BuildSchedule)->Unit(benchmark::kMillisecond);

void BM_SimulateBranches(benchmark::State& state) {
    const auto s = paper_preset();
    const auto sched = build_schedule(s);
    for (auto _ : state) benchmark::DoNotOptimize(simulate_branches(s, sched));
    state.counters["segments"] = static_cast<double>(simulate_branches(s, sched).segments);
}
BENCHMARK(BM_SimulateBranches)->Unit(benchmark::kMillisecond);

void BM_ReferenceIntegrator(benchmark::State& state) {
    const auto s = paper_preset();
    const auto sched = build_schedule(s);
    const double relTol = state.range(0) == 0 ? 1e-8 : 1e-10;
    for (auto _ : state) benchmark::DoNotOptimize(integrate_reference(s, sched, relTol));
}
BENCHMARK(BM_ReferenceIntegrator)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_NumericPhase(benchmark::State& state) {
    auto s = paper_preset();
    s.frame.phi = 500e-6;
    const auto r = simulate_branches(s, build_schedule(s));
    const auto model = gravity_model_for(s);
    for (auto _ : state) benchmark::DoNotOptimize(numeric_phase(r, s, model));
}
BENCHMARK(BM_NumericPhase)->Unit(benchmark::kMicrosecond);

void BM_NumericFringe(benchmark::State& state) {
    const auto s = paper_preset();
    const auto workers = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(fringe_scan(s, -500e-6, 500e-6, 32, PhaseMode::Numeric,
                                             InterferometerVariant::TwoOscillation, workers));
}
BENCHMARK(BM_NumericFringe)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

} // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "reddsc/donor_pool.hpp"
#include "reddsc/inference.hpp"
#include "reddsc/simulate.hpp"
#include "reddsc/solver.hpp"

using namespace reddsc;

namespace {

Scenario scenario_with(int n_donors, int years) {
    ScenarioSpec spec;
    spec.seed = 7;
    spec.n_donors = n_donors;
    spec.first_year = 2000;
    spec.last_year = 2000 + years;
    spec.effect_start_year = 2000 + years - 4;
    spec.donor_process.noise_scale = 0.3;
    return generate(spec);
}

FitConfig bench_cfg(Year train_end) {
    FitConfig cfg;
    cfg.train_end_year = train_end;
    cfg.solver_tol = 1e-9;
    cfg.max_iter = 100'000;
    return cfg;
}

}  // namespace

static void BM_FitScm(benchmark::State& state) {
    const Scenario s = scenario_with(static_cast<int>(state.range(0)), 20);
    const auto donors = panel_ptrs(s.panels.donors);
    const auto& project = s.panels.projects.front().panel;
    const FitConfig cfg = bench_cfg(2012);
    for (auto _ : state) {
        ScFit f = fit_scm(project, donors, cfg);
        benchmark::DoNotOptimize(f.weights.data());
    }
}
BENCHMARK(BM_FitScm)->Arg(4)->Arg(16)->Arg(64);

static void BM_FitAscmAutoLambda(benchmark::State& state) {
    const Scenario s = scenario_with(static_cast<int>(state.range(0)), 20);
    const auto donors = panel_ptrs(s.panels.donors);
    const auto& project = s.panels.projects.front().panel;
    const FitConfig cfg = bench_cfg(2012);
    for (auto _ : state) {
        ScFit f = fit_ascm(project, donors, cfg);
        benchmark::DoNotOptimize(f.weights.data());
    }
}
BENCHMARK(BM_FitAscmAutoLambda)->Arg(4)->Arg(16);

static void BM_JackknifeBands(benchmark::State& state) {
    const Scenario s = scenario_with(static_cast<int>(state.range(0)), 16);
    const auto donors = panel_ptrs(s.panels.donors);
    const auto& project = s.panels.projects.front();
    const FitConfig cfg = bench_cfg(2008);
    for (auto _ : state) {
        JackknifeBands b = jackknife_plus_bands(project.panel, project.meta, donors, cfg);
        benchmark::DoNotOptimize(b.lower.size());
    }
}
BENCHMARK(BM_JackknifeBands)->Arg(5)->Arg(10);

static void BM_FilterDonors(benchmark::State& state) {
    const Scenario s = scenario_with(static_cast<int>(state.range(0)), 16);
    const auto donors = panel_ptrs(s.panels.donors);
    const auto& project = s.panels.projects.front();
    FilterConfig cfg;
    cfg.min_donors = 2;
    for (auto _ : state) {
        DonorSelection sel = filter_donors(project.panel, project.meta, donors, cfg);
        benchmark::DoNotOptimize(sel.selected.size());
    }
}
BENCHMARK(BM_FilterDonors)->Arg(16)->Arg(128);

BENCHMARK_MAIN();

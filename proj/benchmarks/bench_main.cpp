#include <benchmark/benchmark.h>

#include "hpdr/mlp.hpp"
#include "hpdr/model.hpp"
#include "hpdr/psc.hpp"
#include "hpdr/scenario.hpp"
#include "hpdr/simulate.hpp"
#include "hpdr/solver.hpp"

namespace {

void bm_step_temperature(benchmark::State& state) {
    const double cap = hpdr::thermal_capacity(hpdr::BuildingSpec{});
    double t = 22.0;
    for (auto _ : state) {
        t = hpdr::step_temperature(t, 3022.5, 3000.0, 22.5, cap);
        benchmark::DoNotOptimize(t);
    }
}
BENCHMARK(bm_step_temperature);

void bm_price_factor(benchmark::State& state) {
    std::vector<double> prices(hpdr::kSlotsPerWeek);
    for (int i = 0; i < hpdr::kSlotsPerWeek; ++i)
        prices[std::size_t(i)] = 0.2 + 0.1 * ((i / 2) % 24);
    int t = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(hpdr::price_factor(prices, t));
        t = (t + 1) % hpdr::kSlotsPerWeek;
    }
}
BENCHMARK(bm_price_factor);

void bm_solve_week(benchmark::State& state) {
    const hpdr::WeekData week = hpdr::synth_week(1);
    const hpdr::BuildingSpec building;
    hpdr::HeatPumpSpec hp;
    hp.p_max_w = 12000.0;
    hpdr::SolverConfig cfg;
    cfg.temp_resolution_k = 1e-3 * double(state.range(0));
    for (auto _ : state) {
        const hpdr::Schedule s = hpdr::solve_optimal(week, building, hp, cfg);
        benchmark::DoNotOptimize(s.total_cost);
    }
}
BENCHMARK(bm_solve_week)->Arg(10)->Arg(2)->Unit(benchmark::kMillisecond);

void bm_simulate_week(benchmark::State& state) {
    const hpdr::WeekData week = hpdr::synth_week(1);
    const hpdr::BuildingSpec building;
    hpdr::HeatPumpSpec hp;
    hp.p_max_w = 12000.0;
    for (auto _ : state) {
        hpdr::ConventionalController ctrl(21.0, 22.0);
        const hpdr::SimulationResult r = hpdr::simulate_week(ctrl, week, building, hp);
        benchmark::DoNotOptimize(r.total_cost);
    }
}
BENCHMARK(bm_simulate_week)->Unit(benchmark::kMillisecond);

void bm_mlp_forward(benchmark::State& state) {
    const hpdr::MlpModel m = hpdr::init_model(hpdr::MlpSpec{}, 1);
    std::vector<double> features = {0.4, 0.6, 0.5, 0.0, 1.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(hpdr::forward(m, features));
        features[2] = features[2] < 1.0 ? features[2] + 1e-4 : 0.0;
    }
}
BENCHMARK(bm_mlp_forward);

}  // namespace

BENCHMARK_MAIN();

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "hpdr/solver.hpp"
#include "support.hpp"

using namespace hpdr;
using testsupport::demanding_week;
using testsupport::random_tiny_instance;

namespace {

// 4 slots of 42 h; 0.9 K demand drop per slot against a [20, 24] band forces
// exactly one full-power slot, and prices 1..4 pin it to the first.
testsupport::TinyInstance forced_single_heat_toy() {
    testsupport::TinyInstance ti;
    ti.week.slot_duration_s = kSecondsPerWeek / 4;
    ti.week.price_eur_kwh = {1.0, 2.0, 3.0, 4.0};
    ti.week.heat_demand_wh.assign(4, 56700.0);
    ti.week.inflexible_w.assign(4, 0.0);
    ti.week.outside_temp_c.assign(4, 5.0);

    ti.hp.p_max_w = 1000.0;
    ti.hp.mod_min = 0.5;
    ti.hp.cop_table = {{20.0, 3.0}, {40.0, 3.0}};

    ti.building.ufh_volume_m3 = 94.5;  // capacity 2.268e8 J/K
    ti.building.temp_min_c = 20.0;
    ti.building.temp_max_c = 24.0;
    ti.building.initial_temp_c = 22.0;
    ti.building.ufh_loss_w = 0.0;

    ti.cfg.temp_resolution_k = 1e-6;
    ti.cfg.modulation_grid = {0.0, 0.5, 1.0};
    return ti;
}

}  // namespace

TEST_CASE("default modulation grid") {
    const auto g = SolverConfig::default_grid(0.2);
    REQUIRE(g.size() == 10);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 1.0);
    CHECK(g[1] == doctest::Approx(0.2));
    for (std::size_t i = 1; i < g.size(); ++i) {
        CHECK(g[i] > g[i - 1]);
        CHECK((g[i] == 0.0 || g[i] >= 0.2));
    }
    CHECK(SolverConfig::default_grid(1.0) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("zero demand week is served without heating") {
    WeekData w;
    w.slot_duration_s = kDefaultSlotSeconds;
    for (int t = 0; t < kSlotsPerWeek; ++t) {
        w.price_eur_kwh.push_back(((t / 2) % 2) ? 0.4 : 0.2);
        w.heat_demand_wh.push_back(0.0);
        w.inflexible_w.push_back(500.0);
        w.outside_temp_c.push_back(2.0);
    }
    BuildingSpec b;
    HeatPumpSpec hp = HeatPumpSpec::aggregated(12000.0);

    const Schedule s = solve_optimal(w, b, hp);
    REQUIRE(int(s.x.size()) == kSlotsPerWeek);
    for (double x : s.x) CHECK(x == 0.0);
    CHECK(s.switch_offs_total == 0);

    double inflexible_only = 0.0;
    for (int t = 0; t < kSlotsPerWeek; ++t)
        inflexible_only += slot_cost(0.0, hp, 500.0, w.slot_duration_s,
                                     w.price_eur_kwh[std::size_t(t)]);
    CHECK(s.total_cost == doctest::Approx(inflexible_only).epsilon(1e-12));

    // 45 W of losses drain about 0.18 K over the week; the band is never at risk
    CHECK(std::abs(s.temp_trace.back() - (22.0 - 0.18)) < 0.01);
    for (int t = 1; t < kSlotsPerWeek; ++t)
        CHECK(s.temp_trace[std::size_t(t)] < s.temp_trace[std::size_t(t) - 1]);
    CHECK(validate_schedule(s, w, b, hp).empty());
}

TEST_CASE("forced heating lands in the cheapest slot") {
    const auto ti = forced_single_heat_toy();
    const Schedule s = solve_optimal(ti.week, ti.building, ti.hp, ti.cfg);
    CHECK(s.x[0] == 1.0);
    CHECK(s.x[1] == 0.0);
    CHECK(s.x[2] == 0.0);
    CHECK(s.x[3] == 0.0);
    // 1 kW electrical for 42 h at 1 EUR/kWh
    CHECK(s.total_cost == doctest::Approx(42.0));
    CHECK(s.switch_offs_total == 1);
    CHECK(std::abs(s.temp_trace[0] - 23.1) < 1e-9);

    const Schedule o = enumerate_oracle(ti.week, ti.building, ti.hp, ti.cfg);
    CHECK(o.total_cost == s.total_cost);
    CHECK(o.x == s.x);
}

TEST_CASE("oracle resolves cost ties lexicographically") {
    auto ti = forced_single_heat_toy();
    // two slots, one of which must carry at least half power; equal prices
    ti.week.slot_duration_s = kSecondsPerWeek / 2;
    ti.week.price_eur_kwh = {2.0, 2.0};
    ti.week.heat_demand_wh.assign(2, 40000.0);
    ti.week.inflexible_w.assign(2, 0.0);
    ti.week.outside_temp_c.assign(2, 5.0);
    ti.building.initial_temp_c = 21.0;

    const Schedule o = enumerate_oracle(ti.week, ti.building, ti.hp, ti.cfg);
    // (0, 0.5) and (0.5, 0) cost the same; the lexicographically smaller wins
    CHECK(o.x[0] == 0.0);
    CHECK(o.x[1] == doctest::Approx(0.5));
}

TEST_CASE("solver matches exhaustive enumeration on random instances") {
    int feasible = 0, infeasible = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        CAPTURE(seed);
        const auto ti = random_tiny_instance(seed);
        Schedule oracle;
        bool oracle_feasible = true;
        try {
            oracle = enumerate_oracle(ti.week, ti.building, ti.hp, ti.cfg);
        } catch (const InfeasibleError&) {
            oracle_feasible = false;
        }
        if (oracle_feasible) {
            ++feasible;
            const Schedule dp = solve_optimal(ti.week, ti.building, ti.hp, ti.cfg);
            CHECK(dp.total_cost == oracle.total_cost);
            CHECK(validate_schedule(dp, ti.week, ti.building, ti.hp).empty());
        } else {
            ++infeasible;
            CHECK_THROWS_AS((void)solve_optimal(ti.week, ti.building, ti.hp, ti.cfg),
                            InfeasibleError);
        }
    }
    // the generator is tuned to exercise both outcomes
    CHECK(feasible >= 20);
    CHECK(infeasible >= 1);
}

TEST_CASE("full-scale weekly solve respects every constraint") {
    const WeekData w = demanding_week();
    REQUIRE(validate_week_data(w).empty());
    BuildingSpec b;
    HeatPumpSpec hp = HeatPumpSpec::aggregated(12000.0);

    const Schedule s = solve_optimal(w, b, hp);
    CHECK(validate_schedule(s, w, b, hp).empty());
    CHECK(s.switch_offs_total <= hp.max_switch_offs);
    CHECK(s.total_cost > 0.0);

    SUBCASE("deterministic across repeated solves") {
        const Schedule again = solve_optimal(w, b, hp);
        CHECK(again.x == s.x);
        CHECK(again.total_cost == s.total_cost);
    }
    SUBCASE("insensitive to the bin resolution") {
        SolverConfig coarse;
        coarse.temp_resolution_k = 0.05;
        const Schedule c = solve_optimal(w, b, hp, coarse);
        CHECK(std::abs(c.total_cost - s.total_cost) / s.total_cost < 0.005);
    }
    SUBCASE("comfort margin tightens the effective band") {
        SolverConfig m;
        m.comfort_margin_k = 0.11;
        const Schedule t = solve_optimal(w, b, hp, m);
        for (double temp : t.temp_trace) {
            CHECK(temp >= b.temp_min_c + 0.11);
            CHECK(temp <= b.temp_max_c - 0.11);
        }
        CHECK(t.total_cost >= s.total_cost - 1e-9);
    }
}

TEST_CASE("impossible demand reports the first dead slot") {
    WeekData w = demanding_week();
    for (auto& d : w.heat_demand_wh) d = 25000.0;  // above full-power output
    BuildingSpec b;
    HeatPumpSpec hp = HeatPumpSpec::aggregated(12000.0);
    try {
        (void)solve_optimal(w, b, hp);
        FAIL("expected infeasibility");
    } catch (const InfeasibleError& e) {
        CHECK(e.constraint == "temperature_band");
        CHECK(e.slot >= 0);
        CHECK(e.slot < 40);  // the slab holds roughly a dozen slots of reserve
    }
}

TEST_CASE("oracle rejects oversized inputs") {
    auto ti = random_tiny_instance(7);
    ti.cfg.modulation_grid = {0.0, 0.5, 0.6, 0.7, 0.8, 1.0};
    CHECK_THROWS_AS((void)enumerate_oracle(ti.week, ti.building, ti.hp, ti.cfg),
                    std::invalid_argument);

    WeekData w;
    w.slot_duration_s = kSecondsPerWeek / 12;
    for (int t = 0; t < 12; ++t) {
        w.price_eur_kwh.push_back(0.3);
        w.heat_demand_wh.push_back(0.0);
        w.inflexible_w.push_back(0.0);
        w.outside_temp_c.push_back(5.0);
    }
    BuildingSpec b;
    HeatPumpSpec hp;
    CHECK_THROWS_AS((void)enumerate_oracle(w, b, hp), std::invalid_argument);
}

TEST_CASE("schedule validation flags tampering") {
    const auto ti = forced_single_heat_toy();
    const Schedule good = solve_optimal(ti.week, ti.building, ti.hp, ti.cfg);
    REQUIRE(validate_schedule(good, ti.week, ti.building, ti.hp).empty());

    SUBCASE("modulation below the floor") {
        Schedule bad = good;
        bad.x[1] = 0.1;
        CHECK_FALSE(validate_schedule(bad, ti.week, ti.building, ti.hp).empty());
    }
    SUBCASE("temperature trace drift") {
        Schedule bad = good;
        bad.temp_trace[0] += 0.01;
        CHECK_FALSE(validate_schedule(bad, ti.week, ti.building, ti.hp).empty());
    }
    SUBCASE("switch-off trace inconsistency") {
        Schedule bad = good;
        bad.switched_off[1] = 0;
        bad.switch_offs_total = 0;
        CHECK_FALSE(validate_schedule(bad, ti.week, ti.building, ti.hp).empty());
    }
    SUBCASE("wrong total cost") {
        Schedule bad = good;
        bad.total_cost += 0.5;
        CHECK_FALSE(validate_schedule(bad, ti.week, ti.building, ti.hp).empty());
    }
}

TEST_CASE("schedule cost accumulation") {
    WeekData w;
    w.slot_duration_s = kDefaultSlotSeconds;
    for (int t = 0; t < kSlotsPerWeek; ++t) {
        w.price_eur_kwh.push_back(0.30);
        w.heat_demand_wh.push_back(0.0);
        w.inflexible_w.push_back(500.0);
        w.outside_temp_c.push_back(2.0);
    }
    HeatPumpSpec hp;  // 3 kW

    Schedule s;
    s.x.assign(std::size_t(kSlotsPerWeek), 0.0);
    s.x[0] = 1.0;
    CHECK(schedule_cost(s, w, hp) == doctest::Approx(0.525 + 335 * 0.075));

    WeekData doubled = w;
    for (auto& p : doubled.price_eur_kwh) p *= 2.0;
    CHECK(schedule_cost(s, doubled, hp) ==
          doctest::Approx(2.0 * schedule_cost(s, w, hp)));

    s.x.pop_back();
    CHECK_THROWS_AS((void)schedule_cost(s, w, hp), std::invalid_argument);
}

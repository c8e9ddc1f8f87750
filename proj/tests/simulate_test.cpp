#include "hpdr/simulate.hpp"

#include <cmath>
#include <limits>

#include "doctest.h"
#include "support.hpp"

using namespace hpdr;

namespace {

class ConstController : public Controller {
  public:
    explicit ConstController(double x) : x_(x) {}
    double decide(const Observation&) override { return x_; }
    std::string name() const override { return "const"; }

  private:
    double x_;
};

class NanController : public Controller {
  public:
    double decide(const Observation&) override { return std::numeric_limits<double>::quiet_NaN(); }
    std::string name() const override { return "nan"; }
};

Observation obs_at(double temp_c, std::span<const double> prices, std::size_t slot = 0,
                   bool running = false) {
    Observation o;
    o.slot = slot;
    o.building_temp_c = temp_c;
    o.prices = prices;
    o.hp_running = running;
    return o;
}

// constant-output network: zero weights everywhere, output bias = value
MlpModel const_net(double value, const NormParams& norm) {
    MlpModel m = init_model({5, 1, 1, 1}, 0);
    for (auto& layer : m.weights) std::fill(layer.begin(), layer.end(), 0.0);
    m.biases.back()[0] = value;
    m.norm_checksum = norm.checksum();
    return m;
}

WeekData flat_week(double price, double demand_wh, double inflexible_w) {
    WeekData w;
    w.slot_duration_s = kDefaultSlotSeconds;
    w.price_eur_kwh.assign(kSlotsPerWeek, price);
    w.heat_demand_wh.assign(kSlotsPerWeek, demand_wh);
    w.inflexible_w.assign(kSlotsPerWeek, inflexible_w);
    w.outside_temp_c.assign(kSlotsPerWeek, 5.0);
    return w;
}

}  // namespace

TEST_CASE("conventional thermostat follows its hysteresis band") {
    ConventionalController c;
    const std::vector<double> prices{0.3, 0.3};
    CHECK(c.decide(obs_at(20.9, prices)) == 1.0);
    CHECK(c.decide(obs_at(22.1, prices, 0, true)) == 0.0);
    CHECK(c.decide(obs_at(21.5, prices, 0, true)) == 1.0);
    CHECK(c.decide(obs_at(21.5, prices, 0, false)) == 0.0);
    CHECK(c.decide(obs_at(21.0, prices, 0, false)) == 1.0);
    CHECK(c.decide(obs_at(22.0, prices, 0, true)) == 0.0);
    CHECK_THROWS_AS(ConventionalController(22.0, 21.0), std::invalid_argument);
}

TEST_CASE("psc controller composes the factors on the live state") {
    const BuildingSpec b;
    const HeatPumpSpec hp;
    PscController c(b, hp);
    const std::vector<double> rising{0.10, 0.50, 0.90};
    CHECK(c.decide(obs_at(b.temp_max_c, rising)) == 0.0);  // full storage wins over any price
    CHECK(c.decide(obs_at(b.temp_min_c, rising)) == 1.0);  // cheapest slot, empty storage
    const std::vector<double> flat{0.30, 0.30, 0.30};
    CHECK(c.decide(obs_at(22.0, flat)) == 0.0);  // no price spread, rule stays off
}

TEST_CASE("replaying an optimal schedule reproduces its trace and cost") {
    SolverConfig margin_cfg;
    margin_cfg.comfort_margin_k = 0.11;  // keeps the replay clear of the guard margin

    SUBCASE("tiny instance") {
        const testsupport::TinyInstance ti = testsupport::random_tiny_instance(1);
        SolverConfig cfg = ti.cfg;
        cfg.comfort_margin_k = 0.11;
        const Schedule s = solve_optimal(ti.week, ti.building, ti.hp, cfg);
        ScheduleReplayController replay(s);
        const SimulationResult res = simulate_week(replay, ti.week, ti.building, ti.hp);
        REQUIRE(res.schedule.x.size() == s.x.size());
        for (std::size_t t = 0; t < s.x.size(); ++t) {
            CHECK(res.schedule.x[t] == s.x[t]);
            CHECK(res.schedule.temp_trace[t] == s.temp_trace[t]);
        }
        CHECK(res.total_cost == s.total_cost);
        CHECK(res.switch_offs_total == s.switch_offs_total);
    }
    SUBCASE("full-scale week") {
        const WeekData week = testsupport::demanding_week();
        const BuildingSpec b;
        const HeatPumpSpec hp = HeatPumpSpec::aggregated(12000.0);
        const Schedule s = solve_optimal(week, b, hp, margin_cfg);
        ScheduleReplayController replay(s);
        const SimulationResult res = simulate_week(replay, week, b, hp);
        double worst = 0.0;
        for (std::size_t t = 0; t < s.x.size(); ++t)
            worst = std::max(worst, std::abs(res.schedule.temp_trace[t] - s.temp_trace[t]));
        CHECK(worst <= 1e-6);
        CHECK(res.total_cost == s.total_cost);
        CHECK(res.comfort_violations == 0);
    }
}

TEST_CASE("always-off on a zero-demand week pays for inflexible load only") {
    const WeekData week = flat_week(0.25, 0.0, 400.0);
    const BuildingSpec b;
    const HeatPumpSpec hp;
    ConstController off(0.0);
    const SimulationResult res = simulate_week(off, week, b, hp);

    double expected = 0.0;
    for (std::size_t t = 0; t < week.num_slots(); ++t)
        expected += slot_cost(0.0, hp, 400.0, week.slot_duration_s, 0.25);
    CHECK(res.total_cost == expected);
    // slab loses 45 W against 1.512e8 J/K, about 0.18 K over the week
    CHECK(res.comfort_violations == 0);
    CHECK(res.switch_offs_total == 0);
    for (const TraceRow& row : res.trace) CHECK(row.x == 0.0);
}

TEST_CASE("always-on is capped at the ceiling by the guard layer") {
    WeekData week = flat_week(0.25, 0.0, 0.0);
    const BuildingSpec b;
    HeatPumpSpec hp;
    hp.p_max_w = 1000.0;  // one slot moves the slab well below the guard margin
    ConstController on(1.0);
    const SimulationResult res = simulate_week(on, week, b, hp);

    bool any_capped = false;
    double max_temp = b.initial_temp_c;
    for (std::size_t t = 0; t < res.trace.size(); ++t) {
        max_temp = std::max(max_temp, res.trace[t].temp_c);
        const double entering = t == 0 ? b.initial_temp_c : res.trace[t - 1].temp_c;
        if (entering >= b.temp_max_c - 0.1) {
            CHECK(res.schedule.x[t] == 0.0);
            any_capped = true;
        }
    }
    CHECK(any_capped);
    CHECK(max_temp <= b.temp_max_c);
    CHECK(res.comfort_violations == 0);
}

TEST_CASE("the zero network behaves exactly like an always-off proposal") {
    const WeekData week = testsupport::demanding_week();
    const BuildingSpec b;
    const HeatPumpSpec hp = HeatPumpSpec::aggregated(12000.0);
    NormParams norm{-10.0, 15.0, 4.0};

    PscAnnController ann(const_net(0.0, norm), norm, b);
    ConstController off(0.0);
    const SimulationResult ra = simulate_week(ann, week, b, hp);
    const SimulationResult rb = simulate_week(off, week, b, hp);
    CHECK(ra.total_cost == rb.total_cost);
    CHECK(ra.schedule.x == rb.schedule.x);
    CHECK(ra.schedule.temp_trace == rb.schedule.temp_trace);
}

TEST_CASE("network outputs are clamped and then quantized by the guards") {
    NormParams norm{-10.0, 15.0, 4.0};
    const BuildingSpec b;
    const std::vector<double> prices{0.3, 0.3};

    PscAnnController hot(const_net(1.7, norm), norm, b);
    CHECK(hot.decide(obs_at(22.0, prices)) == 1.0);

    PscAnnController cold(const_net(-0.4, norm), norm, b);
    CHECK(cold.decide(obs_at(22.0, prices)) == 0.0);

    SUBCASE("sub-minimum outputs land on the modulation floor in simulation") {
        PscAnnController weak(const_net(0.15, norm), norm, b);
        const WeekData week = flat_week(0.25, 1500.0, 0.0);
        const HeatPumpSpec hp;
        const SimulationResult res = simulate_week(weak, week, b, hp);
        bool saw_floor = false;
        for (double x : res.schedule.x) {
            CHECK(x != 0.15);  // raw proposals never reach the plant
            if (x == hp.mod_min) saw_floor = true;
        }
        CHECK(saw_floor);
    }
}

TEST_CASE("normalization checksum mismatch is a configuration error") {
    NormParams train_norm{-10.0, 15.0, 4.0};
    NormParams other{-12.0, 15.0, 4.0};
    const BuildingSpec b;
    CHECK_THROWS_AS(PscAnnController(const_net(0.0, train_norm), other, b),
                    std::invalid_argument);
}

TEST_CASE("non-finite controller output aborts the simulation with the slot") {
    const WeekData week = flat_week(0.25, 0.0, 0.0);
    NanController c;
    const BuildingSpec b;
    const HeatPumpSpec hp;
    try {
        simulate_week(c, week, b, hp);
        FAIL("expected abort");
    } catch (const SimulationAbort& e) {
        CHECK(e.slot == 0);
        CHECK(e.controller == "nan");
        CHECK(std::string(e.what()).find("slot 0") != std::string::npos);
    }
}

TEST_CASE("controllers cannot react to future demand") {
    const WeekData week_a = testsupport::demanding_week();
    WeekData week_b = week_a;
    for (std::size_t t = 150; t < week_b.num_slots(); ++t)
        week_b.heat_demand_wh[t] = 0.5 * week_b.heat_demand_wh[t] + 100.0;

    const BuildingSpec b;
    const HeatPumpSpec hp = HeatPumpSpec::aggregated(12000.0);
    PscController ca(b, hp);
    PscController cb(b, hp);
    const SimulationResult ra = simulate_week(ca, week_a, b, hp);
    const SimulationResult rb = simulate_week(cb, week_b, b, hp);
    for (std::size_t t = 0; t < 150; ++t) {
        CHECK(ra.schedule.x[t] == rb.schedule.x[t]);
        CHECK(ra.schedule.temp_trace[t] == rb.schedule.temp_trace[t]);
    }
}

TEST_CASE("simulations are reproducible and internally consistent") {
    const WeekData week = testsupport::demanding_week();
    const BuildingSpec b;
    const HeatPumpSpec hp = HeatPumpSpec::aggregated(12000.0);
    PscController c1(b, hp);
    PscController c2(b, hp);
    const SimulationResult a = simulate_week(c1, week, b, hp);
    const SimulationResult b2 = simulate_week(c2, week, b, hp);
    CHECK(a.total_cost == b2.total_cost);
    CHECK(a.schedule.x == b2.schedule.x);
    CHECK(a.schedule.temp_trace == b2.schedule.temp_trace);

    CHECK(a.total_cost == schedule_cost(a.schedule, week, hp));
    int violations = 0;
    for (const TraceRow& row : a.trace) {
        CHECK(row.h_on == (row.x > 0.0));
        if (row.temp_c < b.temp_min_c || row.temp_c > b.temp_max_c) ++violations;
    }
    CHECK(violations == a.comfort_violations);
    CHECK(a.trace.size() == week.num_slots());
}

TEST_CASE("guarded controllers respect band margin and switch-off budget at scale") {
    const WeekData week = testsupport::demanding_week();
    const BuildingSpec b;
    const HeatPumpSpec hp = HeatPumpSpec::aggregated(12000.0);

    ConventionalController conv;
    PscController psc(b, hp);
    for (Controller* c : {static_cast<Controller*>(&conv), static_cast<Controller*>(&psc)}) {
        const SimulationResult res = simulate_week(*c, week, b, hp);
        for (double temp : res.schedule.temp_trace) {
            CHECK(temp >= b.temp_min_c - 0.1);
            CHECK(temp <= b.temp_max_c + 0.1);
        }
        CHECK(res.switch_offs_total <= hp.max_switch_offs);
    }
}

TEST_CASE("improvement over the conventional baseline in percent") {
    const Improvement imp = cost_improvement(234.90, 202.44);
    CHECK(imp.defined);
    CHECK(imp.pct == doctest::Approx(13.82).epsilon(1e-3));

    CHECK(cost_improvement(100.0, 100.0).pct == 0.0);
    CHECK(cost_improvement(100.0, 120.0).pct == doctest::Approx(-20.0));
    CHECK_FALSE(cost_improvement(0.0, 50.0).defined);
}

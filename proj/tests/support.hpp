#ifndef HPDR_TESTS_SUPPORT_HPP
#define HPDR_TESTS_SUPPORT_HPP

#include <cmath>
#include <random>

#include "hpdr/model.hpp"
#include "hpdr/rng.hpp"
#include "hpdr/solver.hpp"

namespace hpdr::testsupport {

struct TinyInstance {
    WeekData week;
    BuildingSpec building;
    HeatPumpSpec hp;
    SolverConfig cfg;
};

// Seeded scheduling instance small enough for exhaustive enumeration.
// Slot duration stretches so that any horizon still covers one week, and the
// solver runs on a hash-map state space at 1 nK resolution, where bin merging
// of genuinely different temperatures is out of reach.
inline TinyInstance random_tiny_instance(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    using rng::uniform;
    using rng::uniform_int;

    TinyInstance ti;
    const int z = int(uniform_int(gen, 2, 8));
    ti.week.slot_duration_s = kSecondsPerWeek / z;
    const int dt = ti.week.slot_duration_s;

    ti.hp.p_max_w = uniform(gen, 800.0, 1600.0);
    ti.hp.mod_min = 0.5;
    ti.hp.max_switch_offs = int(uniform_int(gen, 0, 3));

    ti.building.temp_min_c = uniform(gen, 19.5, 20.5);
    ti.building.temp_max_c = ti.building.temp_min_c + uniform(gen, 1.8, 3.0);
    ti.building.ufh_loss_w = uniform(gen, 0.0, 60.0);

    // size the slab so one full-power slot moves the temperature by 0.4..1.0 K
    const double full_heat_wh = ti.hp.p_max_w * 3.3 * double(dt) / 3600.0;
    const double dt_full = uniform(gen, 0.4, 1.0);
    ti.building.ufh_volume_m3 =
        3600.0 * full_heat_wh / dt_full / (ti.building.concrete_density *
                                           ti.building.concrete_specific_heat);
    ti.building.initial_temp_c =
        uniform(gen, ti.building.temp_min_c + 0.4, ti.building.temp_max_c - 0.4);

    for (int t = 0; t < z; ++t) {
        ti.week.price_eur_kwh.push_back(uniform(gen, 0.05, 0.60));
        ti.week.outside_temp_c.push_back(uniform(gen, -5.0, 10.0));
        // occasional spikes above full-power output keep a share of the
        // instances infeasible, which both solvers must agree on
        const double frac = (uniform(gen, 0.0, 1.0) < 0.12) ? uniform(gen, 1.0, 1.6)
                                                            : uniform(gen, 0.0, 0.7);
        ti.week.heat_demand_wh.push_back(frac * full_heat_wh);
        ti.week.inflexible_w.push_back(uniform(gen, 0.0, 400.0));
    }

    // every seventh instance starves: sustained demand above full-power output
    // with little stored reserve, so both solvers must report infeasibility
    if (seed % 7 == 0) {
        ti.building.initial_temp_c = ti.building.temp_min_c + uniform(gen, 0.3, 0.6);
        for (auto& d : ti.week.heat_demand_wh) d = uniform(gen, 1.5, 2.0) * full_heat_wh;
    }

    ti.cfg.temp_resolution_k = 1e-9;
    ti.cfg.modulation_grid = {0.0, 0.5, 1.0};
    return ti;
}

// Full-length week exercising the solver at scale: two daily price peaks and
// a cold-night demand swing, matched to a 12 kW aggregated pump.
inline WeekData demanding_week() {
    WeekData w;
    w.slot_duration_s = kDefaultSlotSeconds;
    for (int t = 0; t < kSlotsPerWeek; ++t) {
        const int hour = (t / 2) % 24;
        const int day = t / 48;
        const double morning = std::exp(-0.5 * std::pow((hour - 8.0) / 2.0, 2.0));
        const double evening = std::exp(-0.5 * std::pow((hour - 19.0) / 2.5, 2.0));
        w.price_eur_kwh.push_back(0.18 + 0.16 * morning + 0.20 * evening +
                                  0.01 * (day % 3));
        const double outside =
            2.5 - 5.5 * std::sin(2.0 * 3.14159265358979 * (hour - 14.0) / 24.0) *
                      (0.8 + 0.05 * day);
        w.outside_temp_c.push_back(outside);
        w.heat_demand_wh.push_back(std::max(0.0, 320.0 * (18.0 - outside)));
        w.inflexible_w.push_back(350.0 + 250.0 * evening);
    }
    return w;
}

}  // namespace hpdr::testsupport

#endif

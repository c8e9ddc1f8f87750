#ifndef HPDR_SCENARIO_HPP
#define HPDR_SCENARIO_HPP

#include <cstdint>
#include <vector>

#include "hpdr/model.hpp"

namespace hpdr {

/// Shape parameters of a synthetic winter week.
struct SynthProfile {
    int slot_duration_s = kDefaultSlotSeconds;
    double outside_min_c = -5.0;
    double outside_max_c = 10.0;
    /// Demand is proportional to max(0, demand_ref_c - outside), then scaled
    /// so the week sums to target_weekly_kwh.
    double demand_ref_c = 18.0;
    double target_weekly_kwh = 1730.769;
    double price_base_eur_kwh = 0.20;
    double price_peak_eur_kwh = 0.15;
    double price_noise_eur_kwh = 0.03;  ///< one draw per hour, same within the hour
    double inflexible_base_w = 300.0;
    double inflexible_peak_w = 400.0;
};

/// Deterministic synthetic week: sinusoidal outside temperature with smooth
/// seeded noise, demand affine in the heating deficit, a two-peak hourly
/// tariff, and morning/evening inflexible load.
WeekData synth_week(std::uint64_t seed, const SynthProfile& profile = {});

struct ClusterSpec {
    double base_demand_kwh_m2 = 50.0;
    int num_buildings = 6;
    int max_shift_slots = 24;
    double demand_tolerance_kwh_m2 = 5.0;
    std::uint64_t seed = 1;
};

/// One cluster member. shift and scale derive from (cluster seed, id) only,
/// so a building keeps its demand character across different base weeks.
struct ClusterBuilding {
    int id = 0;
    std::uint64_t seed = 0;
    int shift_slots = 0;
    double scale = 1.0;
    double annual_demand_kwh_m2 = 0.0;
    WeekData week;
};

struct Cluster {
    ClusterSpec spec;
    std::vector<ClusterBuilding> buildings;
};

/// Buildings that share the base week's tariff and weather but differ in
/// demand: a seeded circular shift plus a seeded scale factor that keeps the
/// annual specific demand within the tolerance band.
Cluster make_cluster(const WeekData& base_week, const ClusterSpec& spec);

/// base * area * week_weight; the default weight spreads the annual demand
/// over a 26-week heating season.
double annual_to_weekly_target(double base_kwh_m2, double area_m2, double week_weight = 1.0 / 26.0);

}  // namespace hpdr

#endif

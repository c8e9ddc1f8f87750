#include "hpdr/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hpdr/rng.hpp"

namespace hpdr {

namespace {

constexpr double kPi = 3.14159265358979323846;

double day_peak(double hour_of_day, double center, double sigma) {
    const double d = (hour_of_day - center) / sigma;
    return std::exp(-0.5 * d * d);
}

}  // namespace

WeekData synth_week(std::uint64_t seed, const SynthProfile& profile) {
    if (profile.slot_duration_s <= 0 || kSecondsPerWeek % profile.slot_duration_s != 0)
        throw std::invalid_argument("synth_week: slot duration must divide one week");
    if (!(profile.outside_max_c > profile.outside_min_c))
        throw std::invalid_argument("synth_week: empty outside-temperature band");
    if (profile.target_weekly_kwh < 0.0)
        throw std::invalid_argument("synth_week: negative weekly target");
    if (profile.price_base_eur_kwh - profile.price_noise_eur_kwh <= 0.0)
        throw std::invalid_argument("synth_week: price noise swallows the base price");

    const int dt = profile.slot_duration_s;
    const int z = kSecondsPerWeek / dt;
    std::mt19937_64 gen(seed);

    // smooth noise: one control point per six hours, linear in between
    const int stride = std::max(1, 21600 / dt);
    const int n_points = z / stride + 2;
    std::vector<double> points(static_cast<std::size_t>(n_points), 0.0);
    const double noise_amp = 0.15 * (profile.outside_max_c - profile.outside_min_c);
    for (double& p : points) p = rng::uniform(gen, -noise_amp, noise_amp);

    // one tariff step per hour, drawn for all 168 hours of the week
    std::vector<double> hourly_price(168);
    for (std::size_t h = 0; h < hourly_price.size(); ++h) {
        const double hod = double(h % 24);
        const double shape = profile.price_base_eur_kwh +
                             profile.price_peak_eur_kwh *
                                 (0.8 * day_peak(hod, 8.0, 2.0) + day_peak(hod, 19.0, 2.5));
        hourly_price[h] = std::max(
            0.01, shape + rng::uniform(gen, -profile.price_noise_eur_kwh,
                                       profile.price_noise_eur_kwh));
    }

    WeekData w;
    w.slot_duration_s = dt;
    const double mid = 0.5 * (profile.outside_min_c + profile.outside_max_c);
    const double amp = 0.4 * (profile.outside_max_c - profile.outside_min_c);
    double raw_sum = 0.0;
    for (int t = 0; t < z; ++t) {
        const double hod = double(std::int64_t(t) * dt % 86400) / 3600.0;
        const int seg = t / stride;
        const double frac = double(t % stride) / double(stride);
        const double noise = points[std::size_t(seg)] * (1.0 - frac) +
                             points[std::size_t(seg) + 1] * frac;
        const double outside =
            std::clamp(mid + amp * std::sin(2.0 * kPi * (hod - 8.0) / 24.0) + noise,
                       profile.outside_min_c, profile.outside_max_c);
        w.outside_temp_c.push_back(outside);
        const double deficit = std::max(0.0, profile.demand_ref_c - outside);
        w.heat_demand_wh.push_back(deficit);
        raw_sum += deficit;

        const std::size_t hour = std::size_t(std::int64_t(t) * dt / 3600) % hourly_price.size();
        w.price_eur_kwh.push_back(hourly_price[hour]);
        w.inflexible_w.push_back(profile.inflexible_base_w +
                                 profile.inflexible_peak_w *
                                     (0.7 * day_peak(hod, 7.5, 1.5) + day_peak(hod, 19.5, 2.0)));
    }

    if (profile.target_weekly_kwh > 0.0) {
        if (raw_sum <= 0.0)
            throw std::invalid_argument(
                "synth_week: outside band never falls below the demand reference");
        const double scale = profile.target_weekly_kwh * 1000.0 / raw_sum;
        for (double& d : w.heat_demand_wh) d *= scale;
    } else {
        for (double& d : w.heat_demand_wh) d = 0.0;
    }
    return w;
}

Cluster make_cluster(const WeekData& base_week, const ClusterSpec& spec) {
    const std::vector<std::string> issues = validate_week_data(base_week);
    if (!issues.empty())
        throw std::invalid_argument("make_cluster: invalid base week: " + issues.front());
    const int z = int(base_week.num_slots());
    if (spec.num_buildings < 1) throw std::invalid_argument("make_cluster: no buildings");
    if (spec.max_shift_slots < 0 || spec.max_shift_slots >= z)
        throw std::invalid_argument("make_cluster: shift must stay below the horizon");
    if (!(spec.base_demand_kwh_m2 > 0.0))
        throw std::invalid_argument("make_cluster: base demand must be positive");
    if (spec.demand_tolerance_kwh_m2 < 0.0 ||
        spec.demand_tolerance_kwh_m2 >= spec.base_demand_kwh_m2)
        throw std::invalid_argument("make_cluster: tolerance must lie in [0, base demand)");

    Cluster cluster;
    cluster.spec = spec;
    const double rel = spec.demand_tolerance_kwh_m2 / spec.base_demand_kwh_m2;
    for (int i = 0; i < spec.num_buildings; ++i) {
        ClusterBuilding b;
        b.id = i;
        b.seed = rng::derive(spec.seed, {std::uint64_t(i)});
        std::mt19937_64 gen(b.seed);
        b.shift_slots = int(rng::uniform_int(gen, -spec.max_shift_slots, spec.max_shift_slots));
        b.scale = rng::uniform(gen, 1.0 - rel, 1.0 + rel);
        b.annual_demand_kwh_m2 = spec.base_demand_kwh_m2 * b.scale;

        b.week = base_week;
        for (int t = 0; t < z; ++t) {
            const int src = ((t - b.shift_slots) % z + z) % z;
            b.week.heat_demand_wh[std::size_t(t)] =
                base_week.heat_demand_wh[std::size_t(src)] * b.scale;
        }
        cluster.buildings.push_back(std::move(b));
    }
    return cluster;
}

double annual_to_weekly_target(double base_kwh_m2, double area_m2, double week_weight) {
    if (!(week_weight > 0.0) || week_weight > 1.0)
        throw std::invalid_argument("annual_to_weekly_target: weight must lie in (0, 1]");
    if (base_kwh_m2 < 0.0 || area_m2 < 0.0)
        throw std::invalid_argument("annual_to_weekly_target: negative inputs");
    return base_kwh_m2 * area_m2 * week_weight;
}

}  // namespace hpdr

#include "hpdr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "hpdr/rng.hpp"

namespace hpdr {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

std::uint64_t fnv_mix(std::uint64_t h, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

std::uint64_t NormParams::checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    h = fnv_mix(h, t_out_min);
    h = fnv_mix(h, t_out_max);
    h = fnv_mix(h, starts_max);
    return h;
}

RunStats run_statistics(const Schedule& s, std::size_t t, std::size_t window_slots) {
    if (t >= s.on.size()) throw std::out_of_range("run_statistics: slot outside schedule");
    return run_statistics(s.on, t, window_slots);
}

RunStats run_statistics(const std::vector<std::uint8_t>& on_history, std::size_t t,
                        std::size_t window_slots) {
    if (t > on_history.size()) throw std::out_of_range("run_statistics: slot beyond history");
    if (window_slots == 0) throw std::invalid_argument("run_statistics: empty window");
    RunStats r;
    r.hp_running = t > 0 && on_history[t - 1] != 0;
    const std::size_t lo = t > window_slots ? t - window_slots : 0;
    for (std::size_t u = lo; u + 1 <= t; ++u) {
        const bool prev_on = u > 0 && on_history[u - 1] != 0;
        if (on_history[u] != 0 && !prev_on) ++r.starts_today;
    }
    return r;
}

std::size_t day_window_slots(int slot_duration_s) {
    if (slot_duration_s <= 0) throw std::invalid_argument("day_window_slots: nonpositive duration");
    const std::size_t w = std::size_t(86400 / slot_duration_s);
    return w == 0 ? 1 : w;
}

std::vector<FeatureRow> extract_features(const Schedule& s, const WeekData& week,
                                         const BuildingSpec& b, const HeatPumpSpec& hp,
                                         const PscOptions& opt) {
    const std::vector<std::string> violations = validate_schedule(s, week, b, hp);
    if (!violations.empty())
        throw std::invalid_argument("extract_features: invalid schedule: " + violations.front());

    const std::size_t z = week.num_slots();
    const std::size_t window = day_window_slots(week.slot_duration_s);
    std::vector<FeatureRow> rows;
    rows.reserve(z);
    for (std::size_t t = 0; t < z; ++t) {
        const double temp_entering = t == 0 ? b.initial_temp_c : s.temp_trace[t - 1];
        const RunStats stats = run_statistics(s, t, window);
        FeatureRow r;
        r.price_factor = price_factor(week.price_eur_kwh, t, opt);
        r.storage_factor = storage_factor(temp_entering, b.temp_min_c, b.temp_max_c);
        r.outside_temp = week.outside_temp_c[t];
        r.starts_today = double(stats.starts_today);
        r.hp_running = stats.hp_running ? 1.0 : 0.0;
        r.label = s.x[t];
        rows.push_back(r);
    }
    return rows;
}

NormParams fit_normalization(const std::vector<FeatureRow>& training_rows) {
    if (training_rows.empty()) throw std::invalid_argument("fit_normalization: no rows");
    NormParams p;
    p.t_out_min = training_rows.front().outside_temp;
    p.t_out_max = training_rows.front().outside_temp;
    p.starts_max = 1.0;
    for (const FeatureRow& r : training_rows) {
        p.t_out_min = std::min(p.t_out_min, r.outside_temp);
        p.t_out_max = std::max(p.t_out_max, r.outside_temp);
        p.starts_max = std::max(p.starts_max, r.starts_today);
    }
    return p;
}

double normalize_temp(const NormParams& p, double temp_c) {
    const double span = p.t_out_max - p.t_out_min;
    if (!(span > 0.0)) return 0.5;  // degenerate training column
    return clamp01((temp_c - p.t_out_min) / span);
}

double denormalize_temp(const NormParams& p, double v) {
    return p.t_out_min + v * (p.t_out_max - p.t_out_min);
}

double normalize_starts(const NormParams& p, double count) {
    return clamp01(count / p.starts_max);
}

double denormalize_starts(const NormParams& p, double v) { return v * p.starts_max; }

void normalize_rows(std::vector<FeatureRow>& rows, const NormParams& p) {
    for (FeatureRow& r : rows) {
        r.outside_temp = normalize_temp(p, r.outside_temp);
        r.starts_today = normalize_starts(p, r.starts_today);
    }
}

std::pair<std::vector<FeatureRow>, std::vector<FeatureRow>> split_train_val(
    const std::vector<FeatureRow>& rows, double ratio, std::uint64_t seed) {
    if (rows.empty()) throw std::invalid_argument("split_train_val: no rows");
    if (!(ratio > 0.0) || !(ratio < 1.0))
        throw std::invalid_argument("split_train_val: ratio must lie in (0, 1)");
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 gen(seed);
    rng::shuffle(order, gen);
    const std::size_t n_train = std::size_t(std::ceil(ratio * double(rows.size())));
    std::pair<std::vector<FeatureRow>, std::vector<FeatureRow>> out;
    out.first.reserve(n_train);
    out.second.reserve(rows.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_train ? out.first : out.second).push_back(rows[order[i]]);
    return out;
}

std::vector<double> feature_vector(const FeatureRow& r) {
    return {r.price_factor, r.storage_factor, r.outside_temp, r.starts_today, r.hp_running};
}

SampleSet to_samples(const std::vector<FeatureRow>& rows) {
    SampleSet set;
    set.reserve(rows.size());
    for (const FeatureRow& r : rows) set.push_back({feature_vector(r), r.label});
    return set;
}

}  // namespace hpdr

#include "hpdr/psc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hpdr {

double price_factor(std::span<const double> prices, int t, const PscOptions& opt) {
    if (t < 0 || std::size_t(t) >= prices.size())
        throw std::out_of_range("price_factor: slot index outside series");
    if (opt.window_slots <= 0)
        throw std::invalid_argument("price_factor: window must be positive");

    const int last = std::min(int(prices.size()) - 1, t + opt.window_slots);
    const int count = last - t;
    if (count <= 0) return 0.0;

    const double p = prices[std::size_t(t)];
    int above = 0;
    for (int k = t + 1; k <= last; ++k) {
        const double q = prices[std::size_t(k)];
        if (opt.strictly_greater ? q > p : q >= p) ++above;
    }
    return double(above) / double(count);
}

double storage_factor(double temp_c, double temp_min_c, double temp_max_c) {
    if (!(temp_max_c > temp_min_c))
        throw std::invalid_argument("storage_factor: degenerate temperature band");
    return std::clamp((temp_c - temp_min_c) / (temp_max_c - temp_min_c), 0.0, 1.0);
}

double psc_modulation(double pf, double sf, double mod_min) {
    if (!(pf >= 0.0 && pf <= 1.0) || !(sf >= 0.0 && sf <= 1.0))
        throw std::domain_error("psc_modulation: factors outside [0, 1]");
    if (!(mod_min > 0.0 && mod_min <= 1.0))
        throw std::invalid_argument("psc_modulation: mod_min outside (0, 1]");

    const double raw = pf * (1.0 - sf);
    if (raw < 0.5 * mod_min) return 0.0;
    return std::clamp(raw, mod_min, 1.0);
}

double oriented_storage_factor(double temp_c, const BuildingSpec& b, const PscOptions& opt) {
    const double charge = storage_factor(temp_c, b.temp_min_c, b.temp_max_c);
    return opt.storage_is_charge ? charge : 1.0 - charge;
}

double psc_modulation_oriented(double pf, double sf_oriented, double mod_min,
                               const PscOptions& opt) {
    // the rule is written for charge orientation; headroom is its mirror
    const double charge = opt.storage_is_charge ? sf_oriented : 1.0 - sf_oriented;
    return psc_modulation(pf, charge, mod_min);
}

double guard_rules(double proposed_x, const ThermalState& state,
                   const BuildingSpec& b, const HeatPumpSpec& hp, double margin_k) {
    if (!std::isfinite(proposed_x) || proposed_x < 0.0 || proposed_x > 1.0)
        throw std::domain_error("guard_rules: proposed modulation outside [0, 1]");
    if (margin_k < 0.0)
        throw std::invalid_argument("guard_rules: margin must be >= 0");

    if (state.building_temp_c <= b.temp_min_c + margin_k) return 1.0;
    if (state.building_temp_c >= b.temp_max_c - margin_k) return 0.0;

    double x = proposed_x;
    if (state.hp_on && state.switch_offs_used >= hp.max_switch_offs)
        x = std::max(x, hp.mod_min);
    if (x > 0.0 && x < hp.mod_min)
        x = (x < 0.5 * hp.mod_min) ? 0.0 : hp.mod_min;  // tie goes to mod_min
    return x;
}

}  // namespace hpdr

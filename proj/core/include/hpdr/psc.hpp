#ifndef HPDR_PSC_HPP
#define HPDR_PSC_HPP

#include <span>

#include "hpdr/model.hpp"

namespace hpdr {

/// Knobs of the price-storage heuristic. Defaults match the reference rule.
struct PscOptions {
    int window_slots = 48;           ///< lookahead for the price factor (24 h)
    bool strictly_greater = true;    ///< count p > p_t; false counts p >= p_t
    bool storage_is_charge = true;   ///< factor reads 1 = full; false: 1 = empty
};

/// Share of upcoming prices above the current one, in [0, 1].
/// The window is truncated at the series end; the last slot yields 0.
double price_factor(std::span<const double> prices, int t, const PscOptions& opt = {});

/// Fill level of the thermal band: 0 at temp_min, 1 at temp_max, clamped.
double storage_factor(double temp_c, double temp_min_c, double temp_max_c);

/// Heuristic modulation from the two factors (storage in charge orientation).
/// Values below half the minimum modulation collapse to off.
double psc_modulation(double pf, double sf, double mod_min);

/// storage_factor with orientation applied, for logging and model features.
double oriented_storage_factor(double temp_c, const BuildingSpec& b, const PscOptions& opt);

/// The heuristic rule on an orientation-adjusted storage factor.
double psc_modulation_oriented(double pf, double sf_oriented, double mod_min,
                               const PscOptions& opt);

/// Safety layer between any controller and the plant. Override order:
/// comfort floor, comfort ceiling, switch-off budget, modulation quantization.
double guard_rules(double proposed_x, const ThermalState& state,
                   const BuildingSpec& b, const HeatPumpSpec& hp,
                   double margin_k = 0.1);

}  // namespace hpdr

#endif

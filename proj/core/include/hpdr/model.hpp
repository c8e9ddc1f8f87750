#ifndef HPDR_MODEL_HPP
#define HPDR_MODEL_HPP

#include <string>
#include <vector>

namespace hpdr {

inline constexpr int kSecondsPerWeek = 7 * 24 * 3600;
inline constexpr int kDefaultSlotSeconds = 1800;
inline constexpr int kSlotsPerWeek = kSecondsPerWeek / kDefaultSlotSeconds;  // 336

/// One COP sample at a given temperature lift (supply minus outside).
struct CopPoint {
    double lift_k;
    double cop;
};

struct HeatPumpSpec {
    double p_max_w = 3000.0;        ///< max electrical draw of the unit(s)
    double mod_min = 0.2;           ///< smallest nonzero modulation
    int max_switch_offs = 28;       ///< weekly on->off budget
    double supply_temp_c = 30.0;    ///< underfloor heating supply temperature
    std::vector<CopPoint> cop_table = {{20.0, 4.0}, {30.0, 3.25}, {40.0, 2.5}};

    /// n identical units driven in lockstep behave like one scaled unit.
    static HeatPumpSpec aggregated(double total_p_max_w) {
        HeatPumpSpec hp;
        hp.p_max_w = total_p_max_w;
        return hp;
    }
};

struct BuildingSpec {
    double living_area_m2 = 900.0;
    double ufh_volume_m3 = 63.0;            ///< concrete volume of the floor heating
    double concrete_density = 2400.0;       ///< kg/m^3
    double concrete_specific_heat = 1000.0; ///< J/(kg K)
    double temp_min_c = 20.5;
    double temp_max_c = 23.5;
    double ufh_loss_w = 45.0;               ///< constant distribution loss
    double initial_temp_c = 22.0;
    double annual_demand_kwh_m2 = 50.0;     ///< specific space heating demand
};

/// One week of exogenous series at fixed slot resolution.
/// Prices are hourly in origin, so all slots of one hour carry the same value.
struct WeekData {
    int slot_duration_s = kDefaultSlotSeconds;
    std::vector<double> price_eur_kwh;   ///< per slot, > 0
    std::vector<double> heat_demand_wh;  ///< per slot, >= 0
    std::vector<double> inflexible_w;    ///< mean non-HP electrical load, >= 0
    std::vector<double> outside_temp_c;  ///< per slot

    int num_slots() const { return int(price_eur_kwh.size()); }
};

/// Simulator-authoritative state entering a slot, before the slot's action.
struct ThermalState {
    int slot = 0;
    double building_temp_c = 22.0;
    bool hp_on = false;        ///< pump ran during the previous slot
    int switch_offs_used = 0;  ///< completed on->off transitions this week
    int starts_today = 0;      ///< off->on transitions in the trailing day
};

/// Heat capacity of the floor slab in J/K.
double thermal_capacity(const BuildingSpec& b);

/// Piecewise-linear COP over temperature lift, clamped at the table ends.
double cop_at(const HeatPumpSpec& hp, double outside_temp_c);

/// Thermal energy delivered in one slot, Wh.
double heat_output(const HeatPumpSpec& hp, double x, double cop, int dt_s);

/// Temperature after one slot given the slot's energy balance in Wh.
double step_temperature(double temp_c, double heat_in_wh, double demand_wh,
                        double loss_wh, double capacity_j_per_k);

/// Distribution loss of one slot, Wh.
double slot_loss_wh(const BuildingSpec& b, int dt_s);

/// Electricity cost of one slot in EUR: HP draw plus inflexible load.
double slot_cost(double x, const HeatPumpSpec& hp, double inflexible_w,
                 int dt_s, double price_eur_kwh);

/// All violated well-formedness rules, one message each; empty means valid.
std::vector<std::string> validate_week_data(const WeekData& w);

}  // namespace hpdr

#endif

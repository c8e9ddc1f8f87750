#include "hpdr/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hpdr {

double thermal_capacity(const BuildingSpec& b) {
    if (b.ufh_volume_m3 <= 0.0 || b.concrete_density <= 0.0 || b.concrete_specific_heat <= 0.0)
        throw std::invalid_argument("thermal_capacity: volume, density and specific heat must be positive");
    return b.ufh_volume_m3 * b.concrete_density * b.concrete_specific_heat;
}

double cop_at(const HeatPumpSpec& hp, double outside_temp_c) {
    const auto& tab = hp.cop_table;
    if (tab.empty()) throw std::invalid_argument("cop_at: empty COP table");
    for (std::size_t i = 0; i + 1 < tab.size(); ++i) {
        if (tab[i + 1].lift_k <= tab[i].lift_k)
            throw std::invalid_argument("cop_at: COP table lifts must be strictly increasing");
        if (tab[i + 1].cop > tab[i].cop)
            throw std::invalid_argument("cop_at: COP must be non-increasing in lift");
    }
    for (const auto& p : tab)
        if (p.cop <= 1.0) throw std::invalid_argument("cop_at: COP must exceed 1");

    const double lift = hp.supply_temp_c - outside_temp_c;
    if (lift <= tab.front().lift_k) return tab.front().cop;
    if (lift >= tab.back().lift_k) return tab.back().cop;
    std::size_t i = 0;
    while (lift > tab[i + 1].lift_k) ++i;
    const double w = (lift - tab[i].lift_k) / (tab[i + 1].lift_k - tab[i].lift_k);
    return tab[i].cop + w * (tab[i + 1].cop - tab[i].cop);
}

double heat_output(const HeatPumpSpec& hp, double x, double cop, int dt_s) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("heat_output: modulation outside [0, 1]");
    if (dt_s <= 0) throw std::invalid_argument("heat_output: slot duration must be positive");
    return x * hp.p_max_w * cop * (double(dt_s) / 3600.0);
}

double step_temperature(double temp_c, double heat_in_wh, double demand_wh,
                        double loss_wh, double capacity_j_per_k) {
    if (capacity_j_per_k <= 0.0)
        throw std::invalid_argument("step_temperature: capacity must be positive");
    // energy bookkeeping is in joules; series are Wh, hence the 3600
    return temp_c + 3600.0 * (heat_in_wh - demand_wh - loss_wh) / capacity_j_per_k;
}

double slot_loss_wh(const BuildingSpec& b, int dt_s) {
    return b.ufh_loss_w * double(dt_s) / 3600.0;
}

double slot_cost(double x, const HeatPumpSpec& hp, double inflexible_w,
                 int dt_s, double price_eur_kwh) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("slot_cost: modulation outside [0, 1]");
    if (dt_s <= 0) throw std::invalid_argument("slot_cost: slot duration must be positive");
    const double kw = (x * hp.p_max_w + inflexible_w) / 1000.0;
    return kw * (double(dt_s) / 3600.0) * price_eur_kwh;
}

std::vector<std::string> validate_week_data(const WeekData& w) {
    std::vector<std::string> out;
    auto fail = [&out](const std::string& msg) { out.push_back(msg); };

    const std::size_t n = w.price_eur_kwh.size();
    if (n == 0) fail("price_eur_kwh: empty series");
    if (w.slot_duration_s <= 0) fail("slot_duration_s: must be positive");

    auto check_len = [&](const char* name, std::size_t len) {
        if (len != n) {
            std::ostringstream os;
            os << name << ": length " << len << " != " << n;
            fail(os.str());
        }
    };
    check_len("heat_demand_wh", w.heat_demand_wh.size());
    check_len("inflexible_w", w.inflexible_w.size());
    check_len("outside_temp_c", w.outside_temp_c.size());

    if (w.slot_duration_s > 0 && n > 0 &&
        std::int64_t(n) * w.slot_duration_s != kSecondsPerWeek) {
        std::ostringstream os;
        os << "duration: " << n << " slots of " << w.slot_duration_s
           << " s do not cover one week";
        fail(os.str());
    }

    for (std::size_t t = 0; t < n; ++t) {
        if (!(w.price_eur_kwh[t] > 0.0)) {
            std::ostringstream os;
            os << "price_eur_kwh[" << t << "]: must be > 0";
            fail(os.str());
        }
    }
    auto check_nonneg = [&](const char* name, const std::vector<double>& v) {
        for (std::size_t t = 0; t < v.size() && t < n; ++t) {
            if (!(v[t] >= 0.0)) {
                std::ostringstream os;
                os << name << "[" << t << "]: must be >= 0";
                fail(os.str());
            }
        }
    };
    check_nonneg("heat_demand_wh", w.heat_demand_wh);
    check_nonneg("inflexible_w", w.inflexible_w);

    // tariffs are hourly: all slots of one hour must share a price
    if (w.slot_duration_s > 0 && w.slot_duration_s < 3600 && 3600 % w.slot_duration_s == 0) {
        const std::size_t per_hour = std::size_t(3600 / w.slot_duration_s);
        for (std::size_t t = 0; t + 1 < n; ++t) {
            if ((t + 1) % per_hour != 0 && w.price_eur_kwh[t + 1] != w.price_eur_kwh[t]) {
                std::ostringstream os;
                os << "price_eur_kwh[" << t + 1 << "]: differs within hour "
                   << t / per_hour;
                fail(os.str());
            }
        }
    }
    return out;
}

}  // namespace hpdr

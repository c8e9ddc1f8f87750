#include "hpdr/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace hpdr {

ConventionalController::ConventionalController(double on_below_c, double off_above_c)
    : on_below_c_(on_below_c), off_above_c_(off_above_c) {
    if (!(on_below_c < off_above_c))
        throw std::invalid_argument("conventional: on threshold must lie below off threshold");
}

double ConventionalController::decide(const Observation& obs) {
    if (obs.building_temp_c <= on_below_c_) return 1.0;
    if (obs.building_temp_c >= off_above_c_) return 0.0;
    return obs.hp_running ? 1.0 : 0.0;
}

PscController::PscController(const BuildingSpec& b, const HeatPumpSpec& hp, PscOptions opt)
    : building_(b), hp_(hp), opt_(opt) {}

double PscController::decide(const Observation& obs) {
    const double pf = price_factor(obs.prices, int(obs.slot), opt_);
    const double sf = storage_factor(obs.building_temp_c, building_.temp_min_c,
                                     building_.temp_max_c);
    return psc_modulation(pf, sf, hp_.mod_min);
}

PscAnnController::PscAnnController(MlpModel model, NormParams norm, const BuildingSpec& b,
                                   PscOptions opt)
    : model_(std::move(model)), norm_(norm), building_(b), opt_(opt) {
    if (model_.norm_checksum != norm_.checksum())
        throw std::invalid_argument(
            "psc_ann: model was trained with a different feature normalization");
}

double PscAnnController::decide(const Observation& obs) {
    const double pf = price_factor(obs.prices, int(obs.slot), opt_);
    const double sf = storage_factor(obs.building_temp_c, building_.temp_min_c,
                                     building_.temp_max_c);
    const std::vector<double> features{pf, sf, normalize_temp(norm_, obs.outside_temp_c),
                                       normalize_starts(norm_, double(obs.starts_today)),
                                       obs.hp_running ? 1.0 : 0.0};
    const double raw = forward(model_, features);
    if (!std::isfinite(raw)) return raw;  // simulate_week turns this into an abort
    return std::min(1.0, std::max(0.0, raw));
}

ScheduleReplayController::ScheduleReplayController(Schedule schedule, std::string name)
    : schedule_(std::move(schedule)), name_(std::move(name)) {}

double ScheduleReplayController::decide(const Observation& obs) {
    if (obs.slot >= schedule_.x.size())
        throw std::out_of_range("replay: slot beyond the stored schedule");
    return schedule_.x[obs.slot];
}

SimulationAbort::SimulationAbort(std::size_t slot_, const std::string& controller_,
                                 const std::string& why)
    : std::runtime_error("simulation aborted at slot " + std::to_string(slot_) + " (" +
                         controller_ + "): " + why),
      slot(slot_),
      controller(controller_) {}

SimulationResult simulate_week(Controller& controller, const WeekData& week,
                               const BuildingSpec& b, const HeatPumpSpec& hp,
                               double guard_margin_k) {
    const std::vector<std::string> issues = validate_week_data(week);
    if (!issues.empty())
        throw std::invalid_argument("simulate_week: invalid week: " + issues.front());

    const std::size_t z = week.num_slots();
    const int dt = week.slot_duration_s;
    const double capacity = thermal_capacity(b);
    const double loss_wh = slot_loss_wh(b, dt);
    const std::size_t window = day_window_slots(dt);

    SimulationResult res;
    res.schedule.x.reserve(z);
    res.schedule.on.reserve(z);
    res.schedule.switched_off.reserve(z);
    res.schedule.temp_trace.reserve(z);
    res.trace.reserve(z);

    double temp = b.initial_temp_c;
    bool running = false;
    int so_used = 0;

    for (std::size_t t = 0; t < z; ++t) {
        const RunStats stats = run_statistics(res.schedule.on, t, window);

        Observation obs;
        obs.slot = t;
        obs.building_temp_c = temp;
        obs.outside_temp_c = week.outside_temp_c[t];
        obs.prices = week.price_eur_kwh;
        obs.starts_today = stats.starts_today;
        obs.switch_offs_used = so_used;
        obs.hp_running = running;

        const double proposed = controller.decide(obs);
        if (!std::isfinite(proposed))
            throw SimulationAbort(t, controller.name(), "non-finite action");

        ThermalState state;
        state.slot = int(t);
        state.building_temp_c = temp;
        state.hp_on = running;
        state.switch_offs_used = so_used;
        state.starts_today = stats.starts_today;
        const double x = guard_rules(proposed, state, b, hp, guard_margin_k);

        const bool on = x > 0.0;
        const bool switched_off = running && !on;
        so_used += switched_off ? 1 : 0;
        const double heat = heat_output(hp, x, cop_at(hp, week.outside_temp_c[t]), dt);
        const double cost = slot_cost(x, hp, week.inflexible_w[t], dt, week.price_eur_kwh[t]);
        temp = step_temperature(temp, heat, week.heat_demand_wh[t], loss_wh, capacity);

        res.schedule.x.push_back(x);
        res.schedule.on.push_back(on ? 1 : 0);
        res.schedule.switched_off.push_back(switched_off ? 1 : 0);
        res.schedule.temp_trace.push_back(temp);
        res.total_cost += cost;
        if (temp < b.temp_min_c || temp > b.temp_max_c) ++res.comfort_violations;
        running = on;

        TraceRow row;
        row.slot = int(t);
        row.price = week.price_eur_kwh[t];
        row.temp_c = temp;
        row.x = x;
        row.pf = price_factor(week.price_eur_kwh, int(t), {});
        row.sf = storage_factor(obs.building_temp_c, b.temp_min_c, b.temp_max_c);
        row.starts_today = stats.starts_today;
        row.h_on = on;
        row.cost_eur = cost;
        res.trace.push_back(row);
    }

    res.switch_offs_total = so_used;
    res.schedule.switch_offs_total = so_used;
    res.schedule.total_cost = res.total_cost;
    return res;
}

Improvement cost_improvement(double conventional_cost, double method_cost) {
    Improvement imp;
    if (conventional_cost == 0.0) return imp;
    imp.defined = true;
    imp.pct = 100.0 * (conventional_cost - method_cost) / conventional_cost;
    return imp;
}

}  // namespace hpdr

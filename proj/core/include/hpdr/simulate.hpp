#ifndef HPDR_SIMULATE_HPP
#define HPDR_SIMULATE_HPP

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpdr/dataset.hpp"
#include "hpdr/mlp.hpp"
#include "hpdr/model.hpp"
#include "hpdr/psc.hpp"
#include "hpdr/solver.hpp"

namespace hpdr {

/// What a controller may see when deciding slot t: current state, the
/// published tariff, and its own run history. No demand and no forecasts.
struct Observation {
    std::size_t slot = 0;
    double building_temp_c = 0.0;
    double outside_temp_c = 0.0;
    std::span<const double> prices;
    int starts_today = 0;
    int switch_offs_used = 0;
    bool hp_running = false;
};

class Controller {
  public:
    virtual ~Controller() = default;
    /// Proposed modulation before guard rules; must be finite.
    virtual double decide(const Observation& obs) = 0;
    virtual std::string name() const = 0;
};

/// Price-blind thermostat: full power at or below on_below_c, off again at or
/// above off_above_c, otherwise the previous on/off state holds.
class ConventionalController : public Controller {
  public:
    explicit ConventionalController(double on_below_c = 21.0, double off_above_c = 22.0);
    double decide(const Observation& obs) override;
    std::string name() const override { return "conventional"; }

  private:
    double on_below_c_;
    double off_above_c_;
};

/// The price-storage rule evaluated on the live observation.
class PscController : public Controller {
  public:
    PscController(const BuildingSpec& b, const HeatPumpSpec& hp, PscOptions opt = {});
    double decide(const Observation& obs) override;
    std::string name() const override { return "psc"; }

  private:
    BuildingSpec building_;
    HeatPumpSpec hp_;
    PscOptions opt_;
};

/// Regressor in place of the hand-tuned rule. The model must have been
/// trained with the normalization passed here; checksums are compared.
class PscAnnController : public Controller {
  public:
    PscAnnController(MlpModel model, NormParams norm, const BuildingSpec& b, PscOptions opt = {});
    double decide(const Observation& obs) override;
    std::string name() const override { return "psc_ann"; }

  private:
    MlpModel model_;
    NormParams norm_;
    BuildingSpec building_;
    PscOptions opt_;
};

/// Replays a precomputed schedule open loop.
class ScheduleReplayController : public Controller {
  public:
    explicit ScheduleReplayController(Schedule schedule, std::string name = "optimal_replay");
    double decide(const Observation& obs) override;
    std::string name() const override { return name_; }

  private:
    Schedule schedule_;
    std::string name_;
};

struct TraceRow {
    int slot = 0;
    double price = 0.0;
    double temp_c = 0.0;  ///< end of slot
    double x = 0.0;
    double pf = 0.0;  ///< factors seen when entering the slot
    double sf = 0.0;
    int starts_today = 0;
    bool h_on = false;
    double cost_eur = 0.0;
};

struct SimulationResult {
    Schedule schedule;
    double total_cost = 0.0;
    int comfort_violations = 0;  ///< strict band check, no guard margin
    int switch_offs_total = 0;
    std::vector<TraceRow> trace;
};

struct SimulationAbort : std::runtime_error {
    SimulationAbort(std::size_t slot_, const std::string& controller_, const std::string& why);
    std::size_t slot;
    std::string controller;
};

/// Closed loop over one week: observation, controller decision, guard rules,
/// then plant physics. The default guard margin matches guard_rules'.
SimulationResult simulate_week(Controller& controller, const WeekData& week,
                               const BuildingSpec& b, const HeatPumpSpec& hp,
                               double guard_margin_k = 0.1);

struct Improvement {
    double pct = 0.0;
    bool defined = false;  ///< false when the baseline cost is zero
};

/// Relative saving against the conventional baseline, in percent.
Improvement cost_improvement(double conventional_cost, double method_cost);

}  // namespace hpdr

#endif

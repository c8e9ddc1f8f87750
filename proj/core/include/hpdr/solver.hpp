#ifndef HPDR_SOLVER_HPP
#define HPDR_SOLVER_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpdr/model.hpp"

namespace hpdr {

struct SolverConfig {
    /// Width of one temperature bin in the search state space.
    double temp_resolution_k = 0.01;
    /// Allowed modulation levels; empty selects default_grid(hp.mod_min).
    std::vector<double> modulation_grid;
    /// Slack for internal cost cross-checks.
    double cost_tolerance = 1e-9;
    /// Tightens the comfort band on both sides. A schedule solved with a
    /// margin above the guard margin replays through the guard layer untouched.
    double comfort_margin_k = 0.0;

    /// {0, mod_min, mod_min+step, ..., 1}
    static std::vector<double> default_grid(double mod_min, double step = 0.1);
};

/// A complete weekly plan. temp_trace holds end-of-slot temperatures.
struct Schedule {
    std::vector<double> x;
    std::vector<std::uint8_t> on;
    std::vector<std::uint8_t> switched_off;
    std::vector<double> temp_trace;
    double total_cost = 0.0;
    int switch_offs_total = 0;
};

struct InfeasibleError : std::runtime_error {
    InfeasibleError(int slot_, std::string constraint_);
    int slot;                ///< first slot with no feasible continuation
    std::string constraint;  ///< name of the binding constraint
};

/// Cost-minimal schedule by dynamic programming over (temperature bin,
/// switch-offs used, on/off). Each label keeps the exact temperature of its
/// cheapest path, so the returned trace and cost are free of binning error.
Schedule solve_optimal(const WeekData& week, const BuildingSpec& b,
                       const HeatPumpSpec& hp, const SolverConfig& cfg = {});

/// Ground truth by exhaustive enumeration. Horizon <= 10, grid <= 5 actions.
/// Cost ties resolve to the lexicographically smallest action tuple.
Schedule enumerate_oracle(const WeekData& week, const BuildingSpec& b,
                          const HeatPumpSpec& hp, const SolverConfig& cfg = {});

/// All violated schedule invariants under re-simulation; empty means valid.
std::vector<std::string> validate_schedule(const Schedule& s, const WeekData& week,
                                           const BuildingSpec& b, const HeatPumpSpec& hp);

/// Total electricity cost of a schedule, accumulated in slot order.
double schedule_cost(const Schedule& s, const WeekData& week, const HeatPumpSpec& hp);

}  // namespace hpdr

#endif

#include "hpdr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace hpdr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense backtracking tables are bounded to roughly this many bytes; larger
// state spaces (very fine resolutions) fall back to hash-map layers.
constexpr std::int64_t kDenseTableBytes = 400LL * 1024 * 1024;

struct Problem {
    int z = 0;
    int dt = 0;
    int n_actions = 0;
    int max_so = 0;
    double t_lo = 0.0, t_hi = 0.0;  // band after tightening
    double init_temp = 0.0;
    std::vector<double> grid;
    std::vector<double> dtemp;  // z * n_actions, temperature delta of (slot, action)
    std::vector<double> cost;   // z * n_actions, EUR of (slot, action)

    double dtemp_at(int t, int a) const { return dtemp[std::size_t(t) * n_actions + a]; }
    double cost_at(int t, int a) const { return cost[std::size_t(t) * n_actions + a]; }
};

Problem build_problem(const WeekData& w, const BuildingSpec& b,
                      const HeatPumpSpec& hp, const SolverConfig& cfg) {
    if (auto v = validate_week_data(w); !v.empty())
        throw std::invalid_argument("solver: invalid week data: " + v.front());
    if (!(cfg.temp_resolution_k > 0.0))
        throw std::invalid_argument("solver: temperature resolution must be positive");
    if (cfg.comfort_margin_k < 0.0)
        throw std::invalid_argument("solver: comfort margin must be >= 0");
    if (hp.max_switch_offs < 0 || hp.max_switch_offs > 255)
        throw std::invalid_argument("solver: switch-off budget outside [0, 255]");
    if (!(hp.mod_min > 0.0 && hp.mod_min <= 1.0))
        throw std::invalid_argument("solver: mod_min outside (0, 1]");

    Problem p;
    p.z = w.num_slots();
    p.dt = w.slot_duration_s;
    p.max_so = hp.max_switch_offs;
    p.grid = cfg.modulation_grid.empty() ? SolverConfig::default_grid(hp.mod_min)
                                         : cfg.modulation_grid;
    if (p.grid.size() < 2 || p.grid.size() > 127)
        throw std::invalid_argument("solver: modulation grid size outside [2, 127]");
    if (p.grid.front() != 0.0 || p.grid.back() != 1.0)
        throw std::invalid_argument("solver: modulation grid must span {0, ..., 1}");
    for (std::size_t i = 0; i < p.grid.size(); ++i) {
        const double v = p.grid[i];
        if (i > 0 && !(v > p.grid[i - 1]))
            throw std::invalid_argument("solver: modulation grid must be strictly increasing");
        if (v > 0.0 && v < hp.mod_min)
            throw std::invalid_argument("solver: grid value inside the forbidden (0, mod_min) range");
    }
    p.n_actions = int(p.grid.size());

    p.t_lo = b.temp_min_c + cfg.comfort_margin_k;
    p.t_hi = b.temp_max_c - cfg.comfort_margin_k;
    if (!(p.t_hi > p.t_lo))
        throw std::invalid_argument("solver: comfort margin leaves no temperature band");
    p.init_temp = b.initial_temp_c;
    if (p.init_temp < p.t_lo || p.init_temp > p.t_hi)
        throw InfeasibleError(0, "initial_temperature");

    const double cap = thermal_capacity(b);
    const double loss = slot_loss_wh(b, p.dt);
    p.dtemp.resize(std::size_t(p.z) * p.n_actions);
    p.cost.resize(std::size_t(p.z) * p.n_actions);
    for (int t = 0; t < p.z; ++t) {
        const double cop = cop_at(hp, w.outside_temp_c[std::size_t(t)]);
        for (int a = 0; a < p.n_actions; ++a) {
            const double heat = heat_output(hp, p.grid[std::size_t(a)], cop, p.dt);
            // step_temperature(T, ...) adds a delta independent of T, so the
            // delta evaluated at 0 reproduces its arithmetic bit for bit
            p.dtemp[std::size_t(t) * p.n_actions + a] =
                step_temperature(0.0, heat, w.heat_demand_wh[std::size_t(t)], loss, cap);
            p.cost[std::size_t(t) * p.n_actions + a] =
                slot_cost(p.grid[std::size_t(a)], hp, w.inflexible_w[std::size_t(t)],
                          p.dt, w.price_eur_kwh[std::size_t(t)]);
        }
    }
    return p;
}

[[noreturn]] void throw_dead_end(int slot, bool band_fail, bool budget_fail) {
    const char* name = "temperature_band";
    if (budget_fail && !band_fail) name = "switch_off_limit";
    throw InfeasibleError(slot, name);
}

// Re-simulates an action index path through the public kernel. The arithmetic
// matches the search transitions exactly, so the trace needs no tolerance.
Schedule realize(const Problem& p, const WeekData& w, const BuildingSpec& b,
                 const HeatPumpSpec& hp, const std::vector<int>& actions,
                 double expected_cost, double cost_tolerance) {
    const double cap = thermal_capacity(b);
    const double loss = slot_loss_wh(b, p.dt);
    Schedule s;
    s.x.resize(std::size_t(p.z));
    s.on.resize(std::size_t(p.z));
    s.switched_off.resize(std::size_t(p.z));
    s.temp_trace.resize(std::size_t(p.z));

    double temp = p.init_temp;
    bool running = false;
    for (int t = 0; t < p.z; ++t) {
        const double x = p.grid[std::size_t(actions[std::size_t(t)])];
        const bool on = x > 0.0;
        const double cop = cop_at(hp, w.outside_temp_c[std::size_t(t)]);
        const double heat = heat_output(hp, x, cop, p.dt);
        temp = step_temperature(temp, heat, w.heat_demand_wh[std::size_t(t)], loss, cap);

        s.x[std::size_t(t)] = x;
        s.on[std::size_t(t)] = on ? 1 : 0;
        s.switched_off[std::size_t(t)] = (running && !on) ? 1 : 0;
        s.switch_offs_total += s.switched_off[std::size_t(t)];
        s.temp_trace[std::size_t(t)] = temp;
        s.total_cost += slot_cost(x, hp, w.inflexible_w[std::size_t(t)], p.dt,
                                  w.price_eur_kwh[std::size_t(t)]);
        running = on;
    }
    if (std::abs(s.total_cost - expected_cost) >
        cost_tolerance * std::max(1.0, std::abs(expected_cost)))
        throw std::logic_error("solver: replayed cost diverges from search cost");
    return s;
}

}  // namespace

std::vector<double> SolverConfig::default_grid(double mod_min, double step) {
    if (!(mod_min > 0.0 && mod_min <= 1.0))
        throw std::invalid_argument("default_grid: mod_min outside (0, 1]");
    if (!(step > 0.0)) throw std::invalid_argument("default_grid: step must be positive");
    std::vector<double> g{0.0};
    for (int i = 0;; ++i) {
        const double v = mod_min + i * step;
        if (v >= 1.0 - 1e-9) break;
        g.push_back(v);
    }
    g.push_back(1.0);
    return g;
}

InfeasibleError::InfeasibleError(int slot_, std::string constraint_)
    : std::runtime_error("infeasible at slot " + std::to_string(slot_) + ": " + constraint_),
      slot(slot_),
      constraint(std::move(constraint_)) {}

Schedule solve_optimal(const WeekData& week, const BuildingSpec& b,
                       const HeatPumpSpec& hp, const SolverConfig& cfg) {
    const Problem p = build_problem(week, b, hp, cfg);
    const double res = cfg.temp_resolution_k;
    const double inv_res = 1.0 / res;
    const int nk = p.max_so + 1;

    const double span_bins = (p.t_hi - p.t_lo) * inv_res;
    if (!(span_bins < double(1LL << 50)))
        throw std::invalid_argument("solver: resolution too fine for the band");

    const std::int64_t bins64 = std::int64_t(std::floor(span_bins)) + 1;
    const std::int64_t states64 = bins64 * nk * 2;
    const bool dense = states64 * (p.z ? p.z : 1) * 5 <= kDenseTableBytes;

    std::vector<int> actions(std::size_t(p.z));
    double best_cost = kInf;

    if (dense) {
        const int bins = int(bins64);
        const std::size_t S = std::size_t(states64);
        auto pack = [nk](int bin, int k, int h) {
            return (std::size_t(bin) * std::size_t(nk) + std::size_t(k)) * 2 + std::size_t(h);
        };
        std::vector<double> cost_cur(S, kInf), cost_nxt(S, kInf);
        std::vector<double> temp_cur(S, 0.0), temp_nxt(S, 0.0);
        std::vector<std::int32_t> bt_bin(S * std::size_t(p.z));
        std::vector<std::uint8_t> bt_meta(S * std::size_t(p.z));

        auto bin_of = [&](double temp) {
            std::int64_t i = std::llround((temp - p.t_lo) * inv_res);
            if (i < 0) i = 0;
            if (i >= bins) i = bins - 1;
            return int(i);
        };

        cost_cur[pack(bin_of(p.init_temp), 0, 0)] = 0.0;
        temp_cur[pack(bin_of(p.init_temp), 0, 0)] = p.init_temp;

        for (int t = 0; t < p.z; ++t) {
            std::fill(cost_nxt.begin(), cost_nxt.end(), kInf);
            bool any = false, band_fail = false, budget_fail = false;
            const std::size_t bt_off = std::size_t(t) * S;
            for (int bin = 0; bin < bins; ++bin) {
                for (int k = 0; k < nk; ++k) {
                    for (int h = 0; h < 2; ++h) {
                        const std::size_t s = pack(bin, k, h);
                        const double c = cost_cur[s];
                        if (c == kInf) continue;
                        const double temp = temp_cur[s];
                        for (int a = 0; a < p.n_actions; ++a) {
                            int h2, k2;
                            if (p.grid[std::size_t(a)] == 0.0) {
                                h2 = 0;
                                k2 = k + h;
                                if (k2 > p.max_so) {
                                    budget_fail = true;
                                    continue;
                                }
                            } else {
                                h2 = 1;
                                k2 = k;
                            }
                            const double t2 = temp + p.dtemp_at(t, a);
                            if (t2 < p.t_lo || t2 > p.t_hi) {
                                band_fail = true;
                                continue;
                            }
                            const double c2 = c + p.cost_at(t, a);
                            const std::size_t s2 = pack(bin_of(t2), k2, h2);
                            if (c2 < cost_nxt[s2]) {
                                cost_nxt[s2] = c2;
                                temp_nxt[s2] = t2;
                                bt_bin[bt_off + s2] = bin;
                                bt_meta[bt_off + s2] = std::uint8_t(a) | std::uint8_t(h << 7);
                                any = true;
                            }
                        }
                    }
                }
            }
            if (!any) throw_dead_end(t, band_fail, budget_fail);
            cost_cur.swap(cost_nxt);
            temp_cur.swap(temp_nxt);
        }

        std::size_t best = S;
        for (std::size_t s = 0; s < S; ++s) {
            if (cost_cur[s] < best_cost) {
                best_cost = cost_cur[s];
                best = s;
            }
        }
        if (best == S) throw InfeasibleError(std::max(p.z - 1, 0), "temperature_band");

        std::size_t s = best;
        for (int t = p.z - 1; t >= 0; --t) {
            const std::uint8_t meta = bt_meta[std::size_t(t) * S + s];
            const int a = meta & 0x7f;
            const int h_prev = meta >> 7;
            actions[std::size_t(t)] = a;
            const int h = int(s & 1);
            const int k = int((s >> 1) % std::size_t(nk));
            const int k_prev = k - ((h_prev == 1 && h == 0) ? 1 : 0);
            s = pack(bt_bin[std::size_t(t) * S + s], k_prev, h_prev);
        }
    } else {
        struct Label {
            double cost;
            double temp;
            std::int64_t prev_key;
            std::uint8_t action;
        };
        auto pack = [](std::int64_t bin, int k, int h) {
            return (bin << 9) | std::int64_t(k << 1) | h;
        };
        auto bin_of = [&](double temp) {
            std::int64_t i = std::llround((temp - p.t_lo) * inv_res);
            if (i < 0) i = 0;
            if (i >= bins64) i = bins64 - 1;
            return i;
        };

        std::vector<std::unordered_map<std::int64_t, Label>> layers(std::size_t(p.z) + 1);
        layers[0][pack(bin_of(p.init_temp), 0, 0)] = {0.0, p.init_temp, -1, 0};

        std::vector<std::int64_t> keys;
        for (int t = 0; t < p.z; ++t) {
            auto& cur = layers[std::size_t(t)];
            auto& nxt = layers[std::size_t(t) + 1];
            keys.clear();
            keys.reserve(cur.size());
            for (const auto& kv : cur) keys.push_back(kv.first);
            std::sort(keys.begin(), keys.end());  // stable expansion order

            bool band_fail = false, budget_fail = false;
            for (const std::int64_t key : keys) {
                const Label& lab = cur[key];
                const int h = int(key & 1);
                const int k = int((key >> 1) & 0xff);
                for (int a = 0; a < p.n_actions; ++a) {
                    int h2, k2;
                    if (p.grid[std::size_t(a)] == 0.0) {
                        h2 = 0;
                        k2 = k + h;
                        if (k2 > p.max_so) {
                            budget_fail = true;
                            continue;
                        }
                    } else {
                        h2 = 1;
                        k2 = k;
                    }
                    const double t2 = lab.temp + p.dtemp_at(t, a);
                    if (t2 < p.t_lo || t2 > p.t_hi) {
                        band_fail = true;
                        continue;
                    }
                    const double c2 = lab.cost + p.cost_at(t, a);
                    const std::int64_t key2 = pack(bin_of(t2), k2, h2);
                    auto it = nxt.find(key2);
                    if (it == nxt.end() || c2 < it->second.cost)
                        nxt[key2] = {c2, t2, key, std::uint8_t(a)};
                }
            }
            if (nxt.empty()) throw_dead_end(t, band_fail, budget_fail);
        }

        std::int64_t best_key = -1;
        for (const auto& kv : layers[std::size_t(p.z)]) {
            if (kv.second.cost < best_cost ||
                (kv.second.cost == best_cost && kv.first < best_key)) {
                best_cost = kv.second.cost;
                best_key = kv.first;
            }
        }
        std::int64_t key = best_key;
        for (int t = p.z - 1; t >= 0; --t) {
            const Label& lab = layers[std::size_t(t) + 1].at(key);
            actions[std::size_t(t)] = lab.action;
            key = lab.prev_key;
        }
    }

    return realize(p, week, b, hp, actions, best_cost, cfg.cost_tolerance);
}

Schedule enumerate_oracle(const WeekData& week, const BuildingSpec& b,
                          const HeatPumpSpec& hp, const SolverConfig& cfg) {
    const Problem p = build_problem(week, b, hp, cfg);
    if (p.z > 10)
        throw std::invalid_argument("enumerate_oracle: horizon above 10 slots");
    if (p.n_actions > 5)
        throw std::invalid_argument("enumerate_oracle: more than 5 grid actions");

    std::vector<int> digits(std::size_t(p.z), 0);
    std::vector<int> best;
    double best_cost = kInf;
    int deepest_fail = -1;
    bool deep_band = false, deep_budget = false;

    while (true) {
        double temp = p.init_temp;
        double cost = 0.0;
        int k = 0, h = 0;
        bool ok = true;
        for (int t = 0; t < p.z && ok; ++t) {
            const int a = digits[std::size_t(t)];
            int h2;
            if (p.grid[std::size_t(a)] == 0.0) {
                h2 = 0;
                k += h;
                if (k > p.max_so) {
                    if (t > deepest_fail) {
                        deepest_fail = t;
                        deep_band = false;
                        deep_budget = true;
                    }
                    ok = false;
                    break;
                }
            } else {
                h2 = 1;
            }
            const double t2 = temp + p.dtemp_at(t, a);
            if (t2 < p.t_lo || t2 > p.t_hi) {
                if (t > deepest_fail) {
                    deepest_fail = t;
                    deep_band = true;
                    deep_budget = false;
                }
                ok = false;
                break;
            }
            temp = t2;
            cost += p.cost_at(t, a);
            h = h2;
        }
        if (ok && cost < best_cost) {  // lexicographic order, strict improvement
            best_cost = cost;
            best = digits;
        }

        int pos = p.z - 1;  // odometer, last digit fastest
        while (pos >= 0 && digits[std::size_t(pos)] == p.n_actions - 1) {
            digits[std::size_t(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++digits[std::size_t(pos)];
    }

    if (best.empty() && p.z > 0)
        throw_dead_end(std::max(deepest_fail, 0), deep_band, deep_budget);
    return realize(p, week, b, hp, best, best_cost, cfg.cost_tolerance);
}

std::vector<std::string> validate_schedule(const Schedule& s, const WeekData& week,
                                           const BuildingSpec& b, const HeatPumpSpec& hp) {
    std::vector<std::string> out;
    auto fail = [&out](const std::string& m) { out.push_back(m); };

    const std::size_t n = std::size_t(week.num_slots());
    if (s.x.size() != n || s.on.size() != n || s.switched_off.size() != n ||
        s.temp_trace.size() != n) {
        fail("schedule series lengths do not match the week");
        return out;
    }
    if (n == 0) return out;

    const double cap = thermal_capacity(b);
    const double loss = slot_loss_wh(b, week.slot_duration_s);
    const double band_tol_lo = 1e-6 * std::max(1.0, std::abs(b.temp_min_c));
    const double band_tol_hi = 1e-6 * std::max(1.0, std::abs(b.temp_max_c));

    double temp = b.initial_temp_c;
    double cost = 0.0;
    bool running = false;
    int so_total = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double x = s.x[t];
        if (!(x == 0.0 || (x >= hp.mod_min - 1e-12 && x <= 1.0 + 1e-12))) {
            std::ostringstream os;
            os << "x[" << t << "]=" << x << " outside {0} union [mod_min, 1]";
            fail(os.str());
        }
        const bool on = x > 0.0;
        if (bool(s.on[t]) != on) {
            std::ostringstream os;
            os << "on[" << t << "] inconsistent with x";
            fail(os.str());
        }
        const bool so = running && !on;
        if (bool(s.switched_off[t]) != so) {
            std::ostringstream os;
            os << "switched_off[" << t << "] inconsistent with the on trace";
            fail(os.str());
        }
        so_total += so ? 1 : 0;

        const double cop = cop_at(hp, week.outside_temp_c[t]);
        const double heat = heat_output(hp, std::clamp(x, 0.0, 1.0), cop, week.slot_duration_s);
        temp = step_temperature(temp, heat, week.heat_demand_wh[t], loss, cap);
        if (std::abs(temp - s.temp_trace[t]) > 1e-6) {
            std::ostringstream os;
            os << "temp_trace[" << t << "] deviates from re-simulation by "
               << std::abs(temp - s.temp_trace[t]);
            fail(os.str());
        }
        if (s.temp_trace[t] < b.temp_min_c - band_tol_lo ||
            s.temp_trace[t] > b.temp_max_c + band_tol_hi) {
            std::ostringstream os;
            os << "temp_trace[" << t << "]=" << s.temp_trace[t] << " outside comfort band";
            fail(os.str());
        }
        cost += slot_cost(std::clamp(x, 0.0, 1.0), hp, week.inflexible_w[t],
                          week.slot_duration_s, week.price_eur_kwh[t]);
        running = on;
    }
    if (so_total != s.switch_offs_total)
        fail("switch_offs_total does not match the switched_off trace");
    if (so_total > hp.max_switch_offs)
        fail("switch-off budget exceeded");
    if (std::abs(cost - s.total_cost) > 1e-9 * std::max(1.0, std::abs(cost)))
        fail("total_cost does not match re-accumulated slot costs");
    return out;
}

double schedule_cost(const Schedule& s, const WeekData& week, const HeatPumpSpec& hp) {
    const std::size_t n = std::size_t(week.num_slots());
    if (s.x.size() != n)
        throw std::invalid_argument("schedule_cost: schedule and week lengths differ");
    double cost = 0.0;
    for (std::size_t t = 0; t < n; ++t)
        cost += slot_cost(s.x[t], hp, week.inflexible_w[t], week.slot_duration_s,
                          week.price_eur_kwh[t]);
    return cost;
}

}  // namespace hpdr

// Acceptance gate: eleven release criteria checked end to end against the
// library, one verdict line each. A FLAGGED verdict marks the data-dependent
// imitation-gain criterion when results fall short without failing the gate.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hpdr/dataset.hpp"
#include "hpdr/experiment.hpp"
#include "hpdr/io.hpp"
#include "hpdr/mlp.hpp"
#include "hpdr/model.hpp"
#include "hpdr/rng.hpp"
#include "hpdr/scenario.hpp"
#include "hpdr/simulate.hpp"
#include "hpdr/solver.hpp"
#include "support.hpp"

using namespace hpdr;

namespace {

// Pinned thresholds. Changing any of these changes what "accepted" means.
constexpr int kOracleInstances = 200;
constexpr double kOracleSecondsMax = 60.0;
constexpr int kValidateWeeks = 100;
constexpr double kValidateSecondsMax = 300.0;
constexpr int kResolutionWeeks = 10;
constexpr double kResolutionRelTol = 0.005;  // 0.5%
constexpr double kDominanceShare = 0.01;     // 1% of the replay cost
constexpr double kImitationFactor = 1.01;    // mean ANN <= 1.01 x mean PSC
constexpr double kMinImprovementPct = 2.0;   // ANN over conventional
constexpr int kMinEvalsPerCluster = 60;
constexpr double kBandMargin = 0.1;  // on each side of the comfort band
constexpr int kMaxSwitchOffs = 28;
constexpr int kGradChecks = 100;
constexpr double kGradRelTol = 1e-4;
constexpr double kTimingRatioMin = 10.0;
constexpr double kAbsTol = 1e-9;

struct Verdict {
    std::string label;
    enum Kind { PASS, FAIL, FLAGGED } kind = FAIL;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), s < 0.1 ? "%.3fs" : "%.1fs", s);
    return buf;
}

// Display-only rounding for verdict details; comparisons use full precision.
std::string fmt_fixed(double v, int digits = 2) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string fmt_sci(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.1e", v);
    return buf;
}

Verdict oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    int exact = 0, infeasible_agreed = 0;
    for (int i = 1; i <= kOracleInstances; ++i) {
        const auto ti = testsupport::random_tiny_instance(std::uint64_t(i));
        bool dp_infeasible = false, oracle_infeasible = false;
        Schedule dp, oracle;
        try {
            dp = solve_optimal(ti.week, ti.building, ti.hp, ti.cfg);
        } catch (const InfeasibleError&) {
            dp_infeasible = true;
        }
        try {
            oracle = enumerate_oracle(ti.week, ti.building, ti.hp, ti.cfg);
        } catch (const InfeasibleError&) {
            oracle_infeasible = true;
        }
        if (dp_infeasible != oracle_infeasible)
            return {"oracle equivalence", Verdict::FAIL,
                    "instance " + std::to_string(i) + ": feasibility disagreement"};
        if (dp_infeasible) {
            ++infeasible_agreed;
            continue;
        }
        if (dp.total_cost != oracle.total_cost)
            return {"oracle equivalence", Verdict::FAIL,
                    "instance " + std::to_string(i) + ": " + fmt_double(dp.total_cost) +
                        " vs " + fmt_double(oracle.total_cost)};
        ++exact;
    }
    const double secs = seconds_since(t0);
    if (secs >= kOracleSecondsMax)
        return {"oracle equivalence", Verdict::FAIL, "too slow: " + fmt_seconds(secs)};
    return {"oracle equivalence", Verdict::PASS,
            std::to_string(exact) + " exact costs, " + std::to_string(infeasible_agreed) +
                " agreed infeasible, " + fmt_seconds(secs)};
}

Verdict constraint_satisfaction() {
    const auto t0 = std::chrono::steady_clock::now();
    BuildingSpec building;
    HeatPumpSpec hp;
    hp.p_max_w = 12000.0;  // four cascaded units, matches the default demand
    const SolverConfig cfg;
    for (int s = 1; s <= kValidateWeeks; ++s) {
        const WeekData week = synth_week(std::uint64_t(s));
        const Schedule sched = solve_optimal(week, building, hp, cfg);
        const std::vector<std::string> issues = validate_schedule(sched, week, building, hp);
        if (!issues.empty())
            return {"constraint satisfaction", Verdict::FAIL,
                    "week seed " + std::to_string(s) + ": " + issues.front()};
    }
    const double secs = seconds_since(t0);
    if (secs >= kValidateSecondsMax)
        return {"constraint satisfaction", Verdict::FAIL, "too slow: " + fmt_seconds(secs)};
    return {"constraint satisfaction", Verdict::PASS,
            std::to_string(kValidateWeeks) + " schedules valid, " + fmt_seconds(secs)};
}

Verdict resolution_convergence() {
    BuildingSpec building;
    HeatPumpSpec hp;
    hp.p_max_w = 12000.0;
    SolverConfig coarse, fine;
    coarse.temp_resolution_k = 0.01;
    fine.temp_resolution_k = 0.002;
    double worst = 0.0;
    for (int s = 1; s <= kResolutionWeeks; ++s) {
        const WeekData week = synth_week(std::uint64_t(s));
        const double c = solve_optimal(week, building, hp, coarse).total_cost;
        const double f = solve_optimal(week, building, hp, fine).total_cost;
        const double rel = std::abs(c - f) / f;
        worst = std::max(worst, rel);
        if (rel >= kResolutionRelTol)
            return {"resolution convergence", Verdict::FAIL,
                    "week seed " + std::to_string(s) + ": " +
                        fmt_fixed(rel * 100.0, 3) + "% apart"};
    }
    return {"resolution convergence", Verdict::PASS,
            "worst gap " + fmt_fixed(worst * 100.0, 3) + "% over " +
                std::to_string(kResolutionWeeks) + " weeks"};
}

// Records of one (cluster, run, week, building) group, keyed by controller.
using Group = std::map<std::string, const EvalRecord*>;

std::vector<Group> grouped_records(const ExperimentReport& rep) {
    std::map<std::string, Group> groups;
    for (const EvalRecord& r : rep.records) {
        const std::string key = std::to_string(r.cluster) + "/" + std::to_string(r.run) + "/" +
                                r.week_id + "/" + std::to_string(r.building);
        groups[key][r.controller] = &r;
    }
    std::vector<Group> out;
    for (auto& [key, g] : groups) out.push_back(g);
    return out;
}

double mean_cost(const ExperimentReport& rep, const std::string& controller,
                 int cluster = -1, int building = -1) {
    double sum = 0.0;
    int n = 0;
    for (const EvalRecord& r : rep.records) {
        if (r.controller != controller) continue;
        if (cluster >= 0 && r.cluster != cluster) continue;
        if (building >= 0 && r.building != building) continue;
        sum += r.cost_eur;
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

Verdict dominance(const ExperimentReport& rep) {
    const std::vector<Group> groups = grouped_records(rep);
    if (groups.empty()) return {"dominance ordering", Verdict::FAIL, "no records"};
    for (const Group& g : groups) {
        const auto it = g.find("optimal_replay");
        if (it == g.end() || g.size() != 4)
            return {"dominance ordering", Verdict::FAIL, "incomplete controller set"};
        const double ropt = it->second->cost_eur;
        for (const auto& [name, rec] : g) {
            if (ropt > rec->cost_eur + kDominanceShare * ropt + kAbsTol)
                return {"dominance ordering", Verdict::FAIL,
                        "replay " + fmt_fixed(ropt) + " above " + name + " " +
                            fmt_fixed(rec->cost_eur)};
        }
    }
    const double psc = mean_cost(rep, "psc");
    const double conv = mean_cost(rep, "conventional");
    if (!(psc < conv))
        return {"dominance ordering", Verdict::FAIL,
                "mean PSC " + fmt_fixed(psc) + " not below conventional " + fmt_fixed(conv)};
    return {"dominance ordering", Verdict::PASS,
            std::to_string(groups.size()) + " groups; mean PSC " + fmt_fixed(psc) +
                " < conventional " + fmt_fixed(conv)};
}

Verdict imitation_gain(const ExperimentReport& rep) {
    std::string detail;
    for (std::size_t c = 0; c < rep.cfg.cluster_demands_kwh_m2.size(); ++c) {
        int evals = 0;
        for (const EvalRecord& r : rep.records)
            if (r.cluster == int(c) && r.controller == "psc_ann") ++evals;
        if (evals < kMinEvalsPerCluster)
            return {"imitation gain", Verdict::FAIL,
                    "cluster " + std::to_string(c) + " has only " + std::to_string(evals) +
                        " evaluations"};
        const double ann = mean_cost(rep, "psc_ann", int(c));
        const double psc = mean_cost(rep, "psc", int(c));
        const double conv = mean_cost(rep, "conventional", int(c));
        const double improvement = (conv - ann) / conv * 100.0;
        if (ann > kImitationFactor * psc)
            return {"imitation gain", Verdict::FLAGGED,
                    "cluster " + std::to_string(c) + ": mean ANN " + fmt_fixed(ann) +
                        " above 1.01 x mean PSC " + fmt_fixed(psc)};
        if (improvement < kMinImprovementPct)
            return {"imitation gain", Verdict::FLAGGED,
                    "cluster " + std::to_string(c) + ": improvement over conventional " +
                        fmt_fixed(improvement) + "% below 2%"};
        if (!detail.empty()) detail += ", ";
        detail += "c" + std::to_string(c) + " +" + fmt_fixed(improvement, 1) + "%";
    }
    return {"imitation gain", Verdict::PASS, detail + " over conventional"};
}

Verdict transfer_generalization(const ExperimentReport& rep) {
    int siblings = 0;
    for (std::size_t c = 0; c < rep.cfg.cluster_demands_kwh_m2.size(); ++c) {
        for (int b = 0; b < rep.cfg.buildings_per_cluster; ++b) {
            if (b == rep.cfg.train_building) continue;
            const double ann = mean_cost(rep, "psc_ann", int(c), b);
            const double conv = mean_cost(rep, "conventional", int(c), b);
            if (!(ann < conv))
                return {"transfer generalization", Verdict::FAIL,
                        "cluster " + std::to_string(c) + " building " + std::to_string(b) +
                            ": ANN " + fmt_fixed(ann) + " not below conventional " +
                            fmt_fixed(conv)};
            ++siblings;
        }
    }
    return {"transfer generalization", Verdict::PASS,
            "ANN below conventional on all " + std::to_string(siblings) + " siblings"};
}

Verdict safety(const ExperimentReport& rep) {
    const double lo = rep.cfg.building.temp_min_c - kBandMargin;
    const double hi = rep.cfg.building.temp_max_c + kBandMargin;
    double seen_lo = 1e9, seen_hi = -1e9;
    int max_so = 0;
    for (const EvalRecord& r : rep.records) {
        seen_lo = std::min(seen_lo, r.min_temp_c);
        seen_hi = std::max(seen_hi, r.max_temp_c);
        max_so = std::max(max_so, r.switch_offs);
        if (r.min_temp_c < lo - kAbsTol || r.max_temp_c > hi + kAbsTol ||
            r.switch_offs > kMaxSwitchOffs)
            return {"safety", Verdict::FAIL,
                    r.controller + " cluster " + std::to_string(r.cluster) + " " + r.week_id +
                        " b" + std::to_string(r.building) + ": temps [" +
                        fmt_fixed(r.min_temp_c, 3) + ", " + fmt_fixed(r.max_temp_c, 3) +
                        "], switch-offs " + std::to_string(r.switch_offs)};
    }
    return {"safety", Verdict::PASS,
            "temps within [" + fmt_fixed(seen_lo, 3) + ", " + fmt_fixed(seen_hi, 3) +
                "], max switch-offs " + std::to_string(max_so)};
}

Verdict gradient_correctness() {
    std::mt19937_64 gen(2024);
    double worst = 0.0;
    for (int i = 0; i < kGradChecks; ++i) {
        MlpSpec spec;
        spec.hidden_width = int(rng::uniform_int(gen, 4, 16));
        spec.hidden_layers = int(rng::uniform_int(gen, 1, 3));
        MlpModel m = init_model(spec, rng::derive(77, {std::uint64_t(i)}));
        Sample s;
        for (int f = 0; f < spec.input_dim; ++f) s.features.push_back(rng::uniform(gen, 0.0, 1.0));
        s.label = rng::uniform(gen, 0.0, 1.0);
        const double rel = gradient_check(m, s, 1e-5, 128, std::uint64_t(i + 1));
        worst = std::max(worst, rel);
        if (rel >= kGradRelTol)
            return {"gradient correctness", Verdict::FAIL,
                    "check " + std::to_string(i) + ": max relative error " + fmt_sci(rel)};
    }
    return {"gradient correctness", Verdict::PASS,
            std::to_string(kGradChecks) + " checks, worst " + fmt_sci(worst)};
}

Verdict learning_sanity(const ExperimentReport& rep, const std::string& loss_csv) {
    if (rep.cfg.train.batch_size != 30 || rep.cfg.train.learning_rate != 0.0018 ||
        rep.cfg.mlp.hidden_width != 50 || rep.cfg.mlp.hidden_layers != 5 ||
        rep.cfg.train.epochs != 20)
        return {"learning sanity", Verdict::FAIL, "run did not use the reference hyperparameters"};
    if (rep.train_reports.empty())
        return {"learning sanity", Verdict::FAIL, "no training happened"};
    for (const auto& [label, tr] : rep.train_reports) {
        if (tr.val_mse.size() != 20)
            return {"learning sanity", Verdict::FAIL, label + ": epoch count " +
                                                          std::to_string(tr.val_mse.size())};
        if (!(tr.val_mse.back() <= tr.val_mse.front()))
            return {"learning sanity", Verdict::FAIL,
                    label + ": val MSE rose " + fmt_fixed(tr.val_mse.front(), 5) + " -> " +
                        fmt_fixed(tr.val_mse.back(), 5)};
    }
    std::ifstream in(loss_csv);
    std::string line;
    int rows = 0;
    if (!in || !std::getline(in, line) || line != "week,epoch,train_rmse,val_rmse")
        return {"learning sanity", Verdict::FAIL, "loss history CSV missing or mislabeled"};
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    const int expected = int(rep.train_reports.size()) * 20;
    if (rows != expected)
        return {"learning sanity", Verdict::FAIL,
                "loss history has " + std::to_string(rows) + " rows, expected " +
                    std::to_string(expected)};
    return {"learning sanity", Verdict::PASS,
            std::to_string(rep.train_reports.size()) + " models, val MSE fell, " +
                std::to_string(rows) + " loss rows"};
}

Verdict timing_ratio(const ExperimentReport& rep) {
    const double solve = rep.timing.solve_seconds_per_week;
    const double sim = rep.timing.simulate_seconds_per_week;
    if (!(solve > 0.0) || !(sim > 0.0))
        return {"timing ratio", Verdict::FAIL, "missing timing data"};
    const double ratio = solve / sim;
    if (ratio < kTimingRatioMin)
        return {"timing ratio", Verdict::FAIL,
                "simulation only " + fmt_fixed(ratio, 1) + "x faster than solving"};
    return {"timing ratio", Verdict::PASS,
            fmt_fixed(ratio, 1) + "x (solve " + fmt_seconds(solve) +
                ", simulate " + fmt_seconds(sim) + " per week)"};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

Verdict determinism() {
    ExperimentConfig cfg;
    cfg.cluster_demands_kwh_m2 = {50.0};
    cfg.cluster_hp_p_max_w = {12000.0};
    cfg.buildings_per_cluster = 2;
    cfg.training_pool_weeks = 4;
    cfg.training_sample_weeks = 2;
    cfg.test_weeks = 2;
    cfg.solver.temp_resolution_k = 0.05;
    cfg.mlp.hidden_width = 8;
    cfg.mlp.hidden_layers = 2;
    cfg.train.epochs = 3;

    const auto dir = std::filesystem::temp_directory_path() / "hpdr_acceptance_rerun";
    std::filesystem::create_directories(dir);
    const char* names[] = {"records.csv", "weekly_costs.csv", "summary.json",
                           "loss_curves.csv", "timing.json"};
    std::vector<std::string> first;
    for (int round = 0; round < 2; ++round) {
        const ExperimentReport rep = run_experiment(cfg);
        write_records_csv(rep, (dir / names[0]).string());
        write_weekly_table_csv(rep, (dir / names[1]).string());
        write_summary_json(rep, (dir / names[2]).string());
        write_loss_curves_csv(rep, (dir / names[3]).string());
        write_timing_json(rep, (dir / names[4]).string());
        for (int f = 0; f < 5; ++f) {
            const std::string text = read_file((dir / names[f]).string());
            if (round == 0) {
                first.push_back(text);
            } else if (f != 4 && text != first[std::size_t(f)]) {
                // timing.json carries wall-clock values and is exempt
                return {"determinism", Verdict::FAIL,
                        std::string(names[f]) + " differs between identical reruns"};
            }
        }
    }
    return {"determinism", Verdict::PASS, "4 of 5 reports byte-identical, timing exempt"};
}

}  // namespace

int main() {
    std::vector<Verdict> verdicts;
    verdicts.push_back(oracle_equivalence());
    verdicts.push_back(constraint_satisfaction());
    verdicts.push_back(resolution_convergence());

    // One desk-scale benchmark run feeds criteria 4 through 10.
    ExperimentReport rep;
    std::string pipeline_error;
    const auto out_dir = std::filesystem::temp_directory_path() / "hpdr_acceptance_reports";
    std::filesystem::create_directories(out_dir);
    try {
        rep = run_experiment(ExperimentConfig{});
        if (!rep.failures.empty())
            pipeline_error = rep.failures.front().stage + ": " + rep.failures.front().detail;
        write_records_csv(rep, (out_dir / "records.csv").string());
        write_weekly_table_csv(rep, (out_dir / "weekly_costs.csv").string());
        write_summary_json(rep, (out_dir / "summary.json").string());
        write_loss_curves_csv(rep, (out_dir / "loss_curves.csv").string());
        write_timing_json(rep, (out_dir / "timing.json").string());
    } catch (const std::exception& e) {
        pipeline_error = e.what();
    }
    if (pipeline_error.empty()) {
        verdicts.push_back(dominance(rep));
        verdicts.push_back(imitation_gain(rep));
        verdicts.push_back(transfer_generalization(rep));
        verdicts.push_back(safety(rep));
        verdicts.push_back(gradient_correctness());
        verdicts.push_back(learning_sanity(rep, (out_dir / "loss_curves.csv").string()));
        verdicts.push_back(timing_ratio(rep));
    } else {
        for (const char* label : {"dominance ordering", "imitation gain",
                                  "transfer generalization", "safety", "gradient correctness",
                                  "learning sanity", "timing ratio"})
            verdicts.push_back({label, Verdict::FAIL, "pipeline error: " + pipeline_error});
    }
    verdicts.push_back(determinism());

    bool failed = false;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const Verdict& v = verdicts[i];
        const char* kind = v.kind == Verdict::PASS      ? "PASS"
                           : v.kind == Verdict::FLAGGED ? "FLAGGED"
                                                        : "FAIL";
        std::printf("criterion %2zu %-26s %-7s %s\n", i + 1, v.label.c_str(), kind,
                    v.detail.c_str());
        failed = failed || v.kind == Verdict::FAIL;
    }
    return failed ? 1 : 0;
}

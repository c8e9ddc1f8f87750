#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hpdr/dataset.hpp"
#include "hpdr/experiment.hpp"
#include "hpdr/io.hpp"
#include "hpdr/mlp.hpp"
#include "hpdr/model.hpp"
#include "hpdr/psc.hpp"
#include "hpdr/rng.hpp"
#include "hpdr/scenario.hpp"
#include "hpdr/simulate.hpp"
#include "hpdr/solver.hpp"

namespace {

using namespace hpdr;

struct GenArgs {
    std::string out_dir;
    std::string config_path;
    std::uint64_t seed = 1;
    int weeks = 1;
    int buildings = 0;
    double demand_kwh_m2 = 50.0;
};

struct SolveArgs {
    std::string week_path;
    std::string out_path;
    std::string plant_path;
    double pump_w = 0.0;  ///< 0 keeps the plant's value
    double resolution = 0.01;
    double margin = 0.0;
};

struct DatasetArgs {
    std::vector<std::string> week_paths;
    std::string out_path;
    std::string plant_path;
    int building_id = 0;
    std::uint64_t seed = 0;
    double pump_w = 0.0;
    double resolution = 0.01;
    double margin = 0.0;
    int max_switch_offs = -1;  ///< -1 keeps the plant's budget
};

struct TrainArgs {
    std::string dataset_path;
    std::string model_path;
    std::string loss_path;
    double split_ratio = 0.7;
    std::uint64_t split_seed = 1;
    MlpSpec mlp;
    TrainConfig train;
};

struct SimulateArgs {
    std::string week_path;
    std::string controller;
    std::string plant_path;
    std::string model_path;
    std::string trace_path;
    double pump_w = 0.0;
    double guard_margin = 0.1;
    double resolution = 0.01;
    double margin = 0.0;
};

struct ExperimentArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
};

struct SweepArgs {
    std::string config_path;
    std::string out_path;
    SweepGrid grid;
};

std::pair<BuildingSpec, HeatPumpSpec> plant_or_default(const std::string& path) {
    if (path.empty()) return {BuildingSpec{}, HeatPumpSpec{}};
    return load_plant_config(path);
}

/// Aggregated pump power for a demand level: the configured cluster value on
/// an exact match, otherwise 240 W per kWh/m2 rounded up to whole 3 kW units.
double pump_power_for(const ExperimentConfig& cfg, double demand_kwh_m2) {
    for (std::size_t c = 0; c < cfg.cluster_demands_kwh_m2.size(); ++c)
        if (cfg.cluster_demands_kwh_m2[c] == demand_kwh_m2) return cfg.cluster_hp_p_max_w[c];
    const double raw = 240.0 * demand_kwh_m2;
    return std::max(3000.0, std::ceil(raw / 3000.0) * 3000.0);
}

int run_gen(const GenArgs& a) {
    ExperimentConfig cfg;
    if (!a.config_path.empty()) cfg = load_experiment_config(a.config_path);
    SynthProfile prof = cfg.profile;
    prof.target_weekly_kwh =
        annual_to_weekly_target(a.demand_kwh_m2, cfg.building.living_area_m2);

    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);
    BuildingSpec building = cfg.building;
    building.annual_demand_kwh_m2 = a.demand_kwh_m2;
    HeatPumpSpec hp = cfg.hp;
    hp.p_max_w = pump_power_for(cfg, a.demand_kwh_m2);
    save_plant_config(building, hp, (dir / "plant.json").string());
    for (int w = 0; w < a.weeks; ++w) {
        const WeekData base = synth_week(rng::derive(a.seed, {std::uint64_t(w)}), prof);
        save_week_csv(base, (dir / ("week_" + std::to_string(w) + ".csv")).string());
        if (a.buildings > 0) {
            ClusterSpec cspec;
            cspec.base_demand_kwh_m2 = a.demand_kwh_m2;
            cspec.num_buildings = a.buildings;
            cspec.max_shift_slots = cfg.max_shift_slots;
            cspec.demand_tolerance_kwh_m2 = cfg.demand_tolerance_kwh_m2;
            cspec.seed = a.seed;
            const Cluster cl = make_cluster(base, cspec);
            for (const ClusterBuilding& b : cl.buildings) {
                const std::string name =
                    "week_" + std::to_string(w) + "_building_" + std::to_string(b.id) + ".csv";
                save_week_csv(b.week, (dir / name).string());
            }
            if (w == 0) write_cluster_manifest(cl, (dir / "cluster.json").string());
        }
    }
    std::cout << "wrote " << a.weeks << " week(s)"
              << (a.buildings > 0 ? " and " + std::to_string(a.buildings) + " building series"
                                  : std::string())
              << " to " << a.out_dir << '\n';
    return 0;
}

int run_solve(const SolveArgs& a) {
    auto [building, hp] = plant_or_default(a.plant_path);
    if (a.pump_w > 0.0) hp.p_max_w = a.pump_w;
    const WeekData week = load_week_csv(a.week_path);
    SolverConfig scfg;
    scfg.temp_resolution_k = a.resolution;
    scfg.comfort_margin_k = a.margin;
    try {
        const Schedule s = solve_optimal(week, building, hp, scfg);
        save_schedule_csv(s, week, hp, a.out_path);
        std::cout << "{\"total_cost_eur\": " << fmt_double(s.total_cost)
                  << ", \"switch_offs\": " << s.switch_offs_total << "}\n";
    } catch (const InfeasibleError& e) {
        std::cout << infeasibility_json(e) << '\n';
        return 1;
    }
    return 0;
}

int run_dataset(const DatasetArgs& a) {
    const auto [building, hp_base] = plant_or_default(a.plant_path);
    HeatPumpSpec hp = hp_base;
    if (a.pump_w > 0.0) hp.p_max_w = a.pump_w;
    if (a.max_switch_offs >= 0) hp.max_switch_offs = a.max_switch_offs;
    SolverConfig scfg;
    scfg.temp_resolution_k = a.resolution;
    scfg.comfort_margin_k = a.margin;

    Dataset ds;
    ds.building_id = a.building_id;
    ds.seed = a.seed;
    int week_id = 0;
    for (const std::string& path : a.week_paths) {
        const WeekData week = load_week_csv(path);
        const Schedule s = solve_optimal(week, building, hp, scfg);
        const std::vector<FeatureRow> rows = extract_features(s, week, building, hp);
        ds.rows.insert(ds.rows.end(), rows.begin(), rows.end());
        ds.week_ids.push_back(week_id++);
    }
    ds.normalization = fit_normalization(ds.rows);
    ds.normalized = false;
    save_dataset_csv(ds, a.out_path);
    std::cout << "wrote " << ds.rows.size() << " rows from " << a.week_paths.size()
              << " week(s) to " << a.out_path << '\n';
    return 0;
}

int run_train(const TrainArgs& a) {
    const Dataset ds = load_dataset_csv(a.dataset_path);
    auto [train_rows, val_rows] = split_train_val(ds.rows, a.split_ratio, a.split_seed);
    NormParams norm = ds.normalization;
    if (!ds.normalized) {
        norm = fit_normalization(train_rows);
        normalize_rows(train_rows, norm);
        normalize_rows(val_rows, norm);
    }
    MlpModel model = init_model(a.mlp, a.train.seed);
    model.norm_checksum = norm.checksum();
    const TrainReport report = train(model, to_samples(train_rows), to_samples(val_rows), a.train);
    save_model_json(model, norm, a.model_path);
    if (!a.loss_path.empty()) save_loss_csv(report, a.loss_path);
    std::cout << "{\"epochs\": " << report.train_mse.size()
              << ", \"final_train_mse\": " << fmt_double(report.train_mse.back())
              << ", \"final_val_mse\": " << fmt_double(report.val_mse.back())
              << ", \"wall_seconds\": " << fmt_double(report.wall_seconds) << "}\n";
    return 0;
}

int run_simulate(const SimulateArgs& a) {
    auto [building, hp] = plant_or_default(a.plant_path);
    if (a.pump_w > 0.0) hp.p_max_w = a.pump_w;
    const WeekData week = load_week_csv(a.week_path);

    SimulationResult res;
    if (a.controller == "conventional") {
        ConventionalController c;
        res = simulate_week(c, week, building, hp, a.guard_margin);
    } else if (a.controller == "psc") {
        PscController c(building, hp);
        res = simulate_week(c, week, building, hp, a.guard_margin);
    } else if (a.controller == "psc_ann") {
        if (a.model_path.empty()) throw std::runtime_error("psc_ann needs --model");
        const auto [model, norm] = load_model_json(a.model_path);
        PscAnnController c(model, norm, building);
        res = simulate_week(c, week, building, hp, a.guard_margin);
    } else if (a.controller == "optimal_replay") {
        SolverConfig scfg;
        scfg.temp_resolution_k = a.resolution;
        scfg.comfort_margin_k = a.margin;
        Schedule s;
        try {
            s = solve_optimal(week, building, hp, scfg);
        } catch (const InfeasibleError& e) {
            std::cout << infeasibility_json(e) << '\n';
            return 1;
        }
        ScheduleReplayController c(s);
        res = simulate_week(c, week, building, hp, a.guard_margin);
    } else {
        throw std::runtime_error("unknown controller '" + a.controller + "'");
    }

    if (!a.trace_path.empty()) save_trace_csv(res.trace, a.trace_path);
    double lo = res.schedule.temp_trace.empty() ? 0.0 : res.schedule.temp_trace.front();
    double hi = lo;
    for (double t : res.schedule.temp_trace) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    std::cout << "{\"controller\": \"" << a.controller
              << "\", \"total_cost_eur\": " << fmt_double(res.total_cost)
              << ", \"comfort_violations\": " << res.comfort_violations
              << ", \"switch_offs\": " << res.switch_offs_total
              << ", \"min_temp_c\": " << fmt_double(lo)
              << ", \"max_temp_c\": " << fmt_double(hi) << "}\n";
    return 0;
}

int run_experiment_cmd(const ExperimentArgs& a) {
    ExperimentConfig cfg;
    if (!a.config_path.empty()) cfg = load_experiment_config(a.config_path);
    if (a.seed_set) cfg.seed = a.seed;
    if (a.jobs > 0) cfg.jobs = a.jobs;

    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);
    const ExperimentReport report = run_experiment(cfg);
    save_experiment_config(cfg, (dir / "config.json").string());
    write_records_csv(report, (dir / "records.csv").string());
    write_weekly_table_csv(report, (dir / "weekly_costs.csv").string());
    write_summary_json(report, (dir / "summary.json").string());
    write_loss_curves_csv(report, (dir / "loss_curves.csv").string());
    write_timing_json(report, (dir / "timing.json").string());

    for (const FailureRecord& f : report.failures)
        std::cerr << "pipeline failure at " << f.stage << ": " << f.detail << '\n';
    const std::vector<std::string> props = evaluate_run_properties(report);
    for (const std::string& p : props) std::cerr << "property: " << p << '\n';
    std::cout << "reports written to " << a.out_dir << " (" << report.records.size()
              << " records)\n";
    if (!report.failures.empty()) return 1;
    return props.empty() ? 0 : 2;
}

int run_sweep(const SweepArgs& a) {
    ExperimentConfig cfg;
    if (!a.config_path.empty()) cfg = load_experiment_config(a.config_path);
    const SweepReport report = sweep_hyperparameters(cfg, a.grid);
    write_sweep_csv(report, a.out_path);
    for (const FailureRecord& f : report.failures)
        std::cerr << "sweep failure at " << f.stage << ": " << f.detail << '\n';
    std::cout << "wrote " << report.rows.size() << " grid point(s) to " << a.out_path << '\n';
    if (report.rows.empty() && !report.failures.empty()) return 1;
    return report.failures.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heat pump demand response toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cgen = app.add_subcommand("gen", "generate synthetic weeks and clusters");
    cgen->add_option("--out", gen.out_dir, "output directory")->required();
    cgen->add_option("--config", gen.config_path, "experiment config for profile and building");
    cgen->add_option("--seed", gen.seed, "base seed");
    cgen->add_option("--weeks", gen.weeks, "number of base weeks")->check(CLI::PositiveNumber);
    cgen->add_option("--buildings", gen.buildings, "cluster size; 0 skips the cluster")
        ->check(CLI::NonNegativeNumber);
    cgen->add_option("--demand", gen.demand_kwh_m2, "annual demand in kWh/m2");

    SolveArgs solve;
    CLI::App* csolve = app.add_subcommand("solve", "cost-optimal weekly schedule");
    csolve->add_option("--week", solve.week_path, "week CSV")->required();
    csolve->add_option("--out", solve.out_path, "schedule CSV")->required();
    csolve->add_option("--config", solve.plant_path, "plant config JSON");
    csolve->add_option("--pump", solve.pump_w, "aggregated pump power in W");
    csolve->add_option("--resolution", solve.resolution, "temperature bin in K");
    csolve->add_option("--margin", solve.margin, "comfort margin in K");

    DatasetArgs dataset;
    CLI::App* cdataset = app.add_subcommand("dataset", "imitation dataset from optimal solves");
    cdataset->add_option("--week", dataset.week_paths, "week CSV, repeatable")->required();
    cdataset->add_option("--out", dataset.out_path, "dataset CSV")->required();
    cdataset->add_option("--config", dataset.plant_path, "plant config JSON");
    cdataset->add_option("--pump", dataset.pump_w, "aggregated pump power in W");
    cdataset->add_option("--building", dataset.building_id, "building id for provenance");
    cdataset->add_option("--seed", dataset.seed, "seed recorded in provenance");
    cdataset->add_option("--resolution", dataset.resolution, "temperature bin in K");
    cdataset->add_option("--margin", dataset.margin, "comfort margin in K");
    cdataset->add_option("--budget", dataset.max_switch_offs, "switch-off budget override");

    TrainArgs traina;
    CLI::App* ctrain = app.add_subcommand("train", "fit the regressor on a dataset");
    ctrain->add_option("--dataset", traina.dataset_path, "dataset CSV")->required();
    ctrain->add_option("--model", traina.model_path, "model JSON to write")->required();
    ctrain->add_option("--loss", traina.loss_path, "loss history CSV");
    ctrain->add_option("--split", traina.split_ratio, "train share of rows");
    ctrain->add_option("--split-seed", traina.split_seed, "shuffle seed for the split");
    ctrain->add_option("--hidden-width", traina.mlp.hidden_width, "neurons per hidden layer");
    ctrain->add_option("--hidden-layers", traina.mlp.hidden_layers, "hidden layer count");
    ctrain->add_option("--batch", traina.train.batch_size, "mini batch size");
    ctrain->add_option("--lr", traina.train.learning_rate, "learning rate");
    ctrain->add_option("--epochs", traina.train.epochs, "training epochs");
    ctrain->add_option("--momentum", traina.train.momentum, "momentum term");
    ctrain->add_option("--seed", traina.train.seed, "init and shuffle seed");

    SimulateArgs sim;
    CLI::App* csim = app.add_subcommand("simulate", "closed loop over one week");
    csim->add_option("--week", sim.week_path, "week CSV")->required();
    csim->add_option("--controller", sim.controller,
                     "conventional, psc, psc_ann or optimal_replay")
        ->required();
    csim->add_option("--config", sim.plant_path, "plant config JSON");
    csim->add_option("--pump", sim.pump_w, "aggregated pump power in W");
    csim->add_option("--model", sim.model_path, "model JSON for psc_ann");
    csim->add_option("--trace", sim.trace_path, "per-slot trace CSV");
    csim->add_option("--guard-margin", sim.guard_margin, "guard trigger distance in K");
    csim->add_option("--resolution", sim.resolution, "solver bin for optimal_replay");
    csim->add_option("--margin", sim.margin, "solver margin for optimal_replay");

    ExperimentArgs expa;
    CLI::App* cexp = app.add_subcommand("experiment", "full benchmark pipeline");
    cexp->add_option("--config", expa.config_path, "experiment config JSON");
    cexp->add_option("--out", expa.out_dir, "report directory")->required();
    cexp->add_option("--seed", expa.seed, "seed override")
        ->each([&](const std::string&) { expa.seed_set = true; });
    cexp->add_option("--jobs", expa.jobs, "concurrent building evaluations")
        ->check(CLI::PositiveNumber);

    SweepArgs sweep;
    CLI::App* csweep = app.add_subcommand("sweep", "hyperparameter grid on one cluster");
    csweep->add_option("--config", sweep.config_path, "experiment config JSON");
    csweep->add_option("--out", sweep.out_path, "sweep CSV")->required();
    csweep->add_option("--batch", sweep.grid.batch_sizes, "batch sizes");
    csweep->add_option("--lr", sweep.grid.learning_rates, "learning rates");
    csweep->add_option("--width", sweep.grid.hidden_widths, "hidden widths");
    csweep->add_option("--layers", sweep.grid.hidden_layers, "hidden layer counts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cgen->parsed()) return run_gen(gen);
        if (csolve->parsed()) return run_solve(solve);
        if (cdataset->parsed()) return run_dataset(dataset);
        if (ctrain->parsed()) return run_train(traina);
        if (csim->parsed()) return run_simulate(sim);
        if (cexp->parsed()) return run_experiment_cmd(expa);
        if (csweep->parsed()) return run_sweep(sweep);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include "hpdr/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "hpdr/io.hpp"
#include "hpdr/rng.hpp"
#include "json.hpp"

namespace hpdr {

namespace {

using nlohmann::json;

// seed-path tags; changing them invalidates recorded experiment seeds
constexpr std::uint64_t kTrainWeekTag = 1;
constexpr std::uint64_t kTestWeekTag = 2;
constexpr std::uint64_t kSampleTag = 3;
constexpr std::uint64_t kSplitTag = 4;
constexpr std::uint64_t kTrainTag = 5;
constexpr std::uint64_t kInitTag = 6;

constexpr const char* kControllers[] = {"optimal_replay", "conventional", "psc", "psc_ann"};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string cluster_run_label(int c, int r) {
    return "c" + std::to_string(c) + "_r" + std::to_string(r);
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.cluster_demands_kwh_m2.empty())
        throw std::invalid_argument("experiment: no clusters configured");
    if (cfg.cluster_hp_p_max_w.size() != cfg.cluster_demands_kwh_m2.size())
        throw std::invalid_argument("experiment: one aggregated pump power per cluster");
    for (double p : cfg.cluster_hp_p_max_w)
        if (!(p > 0.0)) throw std::invalid_argument("experiment: pump power must be positive");
    if (cfg.buildings_per_cluster < 1)
        throw std::invalid_argument("experiment: need at least one building");
    if (cfg.train_building < 0 || cfg.train_building >= cfg.buildings_per_cluster)
        throw std::invalid_argument("experiment: training building outside the cluster");
    if (cfg.training_sample_weeks < 1 || cfg.training_sample_weeks > cfg.training_pool_weeks)
        throw std::invalid_argument("experiment: training sample must fit in the pool");
    if (cfg.test_weeks < 1) throw std::invalid_argument("experiment: need test weeks");
    if (cfg.runs < 1) throw std::invalid_argument("experiment: need at least one run");
    if (!(cfg.split_ratio > 0.0) || !(cfg.split_ratio < 1.0))
        throw std::invalid_argument("experiment: split ratio must lie in (0, 1)");
    if (cfg.jobs < 1) throw std::invalid_argument("experiment: jobs must be positive");
    const double half_band = 0.5 * (cfg.building.temp_max_c - cfg.building.temp_min_c);
    if (!(cfg.guard_margin_k >= 0.0) || cfg.guard_margin_k >= half_band)
        throw std::invalid_argument("experiment: guard margin must fit inside the band");
    if (cfg.solver.comfort_margin_k <= cfg.guard_margin_k)
        throw std::invalid_argument(
            "experiment: solve margin must exceed the guard margin, or replay hits the guards");
    if (cfg.train_margin_k <= cfg.guard_margin_k || cfg.train_margin_k >= half_band)
        throw std::invalid_argument(
            "experiment: training margin must lie between the guard margin and half the band");
    if (cfg.train_max_switch_offs < 0 || cfg.train_max_switch_offs > cfg.hp.max_switch_offs)
        throw std::invalid_argument(
            "experiment: training switch-off budget must not exceed the runtime budget");
    for (double d : cfg.cluster_demands_kwh_m2)
        if (!(d > cfg.demand_tolerance_kwh_m2))
            throw std::invalid_argument("experiment: cluster demand must exceed the tolerance");
}

std::vector<int> sample_without_replacement(int pool, int k, std::uint64_t seed) {
    std::vector<int> idx(static_cast<std::size_t>(pool), 0);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 gen(seed);
    rng::shuffle(idx, gen);
    idx.resize(std::size_t(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

struct TrainedModel {
    MlpModel model;
    NormParams norm;
};

void temp_range(const SimulationResult& res, double& lo, double& hi) {
    lo = res.schedule.temp_trace.empty() ? 0.0 : res.schedule.temp_trace.front();
    hi = lo;
    for (double t : res.schedule.temp_trace) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
}

struct BuildingEval {
    SimulationResult replay, conventional, psc, ann;
    double solve_seconds = 0.0;
    double ann_seconds = 0.0;
};

BuildingEval evaluate_building(const ExperimentConfig& cfg, const HeatPumpSpec& hp,
                               const WeekData& week, const TrainedModel& tm) {
    BuildingEval ev;
    const auto t0 = std::chrono::steady_clock::now();
    const Schedule sched = solve_optimal(week, cfg.building, hp, cfg.solver);
    ev.solve_seconds = seconds_since(t0);

    ScheduleReplayController replay(sched);
    ev.replay = simulate_week(replay, week, cfg.building, hp, cfg.guard_margin_k);
    ConventionalController conv;
    ev.conventional = simulate_week(conv, week, cfg.building, hp, cfg.guard_margin_k);
    PscController psc(cfg.building, hp);
    ev.psc = simulate_week(psc, week, cfg.building, hp, cfg.guard_margin_k);

    PscAnnController ann(tm.model, tm.norm, cfg.building);
    const auto t1 = std::chrono::steady_clock::now();
    ev.ann = simulate_week(ann, week, cfg.building, hp, cfg.guard_margin_k);
    ev.ann_seconds = seconds_since(t1);
    return ev;
}

json config_json(const ExperimentConfig& cfg) {
    json j;
    j["cluster_demands_kwh_m2"] = cfg.cluster_demands_kwh_m2;
    j["cluster_hp_p_max_w"] = cfg.cluster_hp_p_max_w;
    j["buildings_per_cluster"] = cfg.buildings_per_cluster;
    j["training_pool_weeks"] = cfg.training_pool_weeks;
    j["training_sample_weeks"] = cfg.training_sample_weeks;
    j["test_weeks"] = cfg.test_weeks;
    j["runs"] = cfg.runs;
    j["split_ratio"] = cfg.split_ratio;
    j["train_building"] = cfg.train_building;
    j["train_per_week"] = cfg.train_per_week;
    j["max_shift_slots"] = cfg.max_shift_slots;
    j["demand_tolerance_kwh_m2"] = cfg.demand_tolerance_kwh_m2;
    j["jobs"] = cfg.jobs;
    j["guard_margin_k"] = cfg.guard_margin_k;
    j["train_margin_k"] = cfg.train_margin_k;
    j["train_max_switch_offs"] = cfg.train_max_switch_offs;
    j["seed"] = cfg.seed;
    j["mlp"] = {{"input_dim", cfg.mlp.input_dim},
                {"hidden_layers", cfg.mlp.hidden_layers},
                {"hidden_width", cfg.mlp.hidden_width},
                {"output_dim", cfg.mlp.output_dim}};
    j["train"] = {{"batch_size", cfg.train.batch_size},
                  {"learning_rate", cfg.train.learning_rate},
                  {"epochs", cfg.train.epochs},
                  {"momentum", cfg.train.momentum},
                  {"seed", cfg.train.seed}};
    j["solver"] = {{"temp_resolution_k", cfg.solver.temp_resolution_k},
                   {"comfort_margin_k", cfg.solver.comfort_margin_k},
                   {"cost_tolerance", cfg.solver.cost_tolerance},
                   {"modulation_grid", cfg.solver.modulation_grid}};
    j["building"] = {{"living_area_m2", cfg.building.living_area_m2},
                     {"ufh_volume_m3", cfg.building.ufh_volume_m3},
                     {"concrete_density", cfg.building.concrete_density},
                     {"concrete_specific_heat", cfg.building.concrete_specific_heat},
                     {"temp_min_c", cfg.building.temp_min_c},
                     {"temp_max_c", cfg.building.temp_max_c},
                     {"ufh_loss_w", cfg.building.ufh_loss_w},
                     {"initial_temp_c", cfg.building.initial_temp_c},
                     {"annual_demand_kwh_m2", cfg.building.annual_demand_kwh_m2}};
    json cop = json::array();
    for (const CopPoint& p : cfg.hp.cop_table) cop.push_back({p.lift_k, p.cop});
    j["heat_pump"] = {{"p_max_w", cfg.hp.p_max_w},
                      {"mod_min", cfg.hp.mod_min},
                      {"max_switch_offs", cfg.hp.max_switch_offs},
                      {"supply_temp_c", cfg.hp.supply_temp_c},
                      {"cop_table", cop}};
    j["profile"] = {{"slot_duration_s", cfg.profile.slot_duration_s},
                    {"outside_min_c", cfg.profile.outside_min_c},
                    {"outside_max_c", cfg.profile.outside_max_c},
                    {"demand_ref_c", cfg.profile.demand_ref_c},
                    {"price_base_eur_kwh", cfg.profile.price_base_eur_kwh},
                    {"price_peak_eur_kwh", cfg.profile.price_peak_eur_kwh},
                    {"price_noise_eur_kwh", cfg.profile.price_noise_eur_kwh},
                    {"inflexible_base_w", cfg.profile.inflexible_base_w},
                    {"inflexible_peak_w", cfg.profile.inflexible_peak_w}};
    return j;
}

void reject_unknown(const json& obj, const std::vector<std::string>& known,
                    const std::string& where) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const std::string& k : known) ok = ok || k == item.key();
        if (!ok) throw std::runtime_error(where + ": unknown key '" + item.key() + "'");
    }
}

std::ofstream open_report(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    ExperimentReport report;
    report.cfg = cfg;
    double solve_s = 0.0, sim_s = 0.0;
    int solves = 0, sims = 0;

    for (std::size_t c = 0; c < cfg.cluster_demands_kwh_m2.size(); ++c) {
        const double demand = cfg.cluster_demands_kwh_m2[c];
        ClusterSpec cspec;
        cspec.base_demand_kwh_m2 = demand;
        cspec.num_buildings = cfg.buildings_per_cluster;
        cspec.max_shift_slots = cfg.max_shift_slots;
        cspec.demand_tolerance_kwh_m2 = cfg.demand_tolerance_kwh_m2;
        cspec.seed = rng::derive(cfg.seed, {std::uint64_t(c)});

        HeatPumpSpec chp = cfg.hp;
        chp.p_max_w = cfg.cluster_hp_p_max_w[c];

        // Imitation targets get headroom: a wider comfort margin and a tighter
        // switch-off budget than the replayed optimum, so cloning error cannot
        // push the learned policy into the guard band or over the budget.
        HeatPumpSpec thp = chp;
        thp.max_switch_offs = cfg.train_max_switch_offs;
        SolverConfig tsolver = cfg.solver;
        tsolver.comfort_margin_k = cfg.train_margin_k;

        SynthProfile prof = cfg.profile;
        prof.target_weekly_kwh = annual_to_weekly_target(demand, cfg.building.living_area_m2);

        for (int r = 0; r < cfg.runs; ++r) {
            const std::string label = cluster_run_label(int(c), r);
            const std::uint64_t uc = std::uint64_t(c), ur = std::uint64_t(r);
            try {
                const std::vector<int> sampled = sample_without_replacement(
                    cfg.training_pool_weeks, cfg.training_sample_weeks,
                    rng::derive(cfg.seed, {uc, ur, kSampleTag}));

                std::vector<FeatureRow> rows;
                std::string week_list;
                for (int w : sampled) {
                    const WeekData base = synth_week(
                        rng::derive(cfg.seed, {uc, ur, kTrainWeekTag, std::uint64_t(w)}), prof);
                    const Cluster cl = make_cluster(base, cspec);
                    const WeekData& wk = cl.buildings[std::size_t(cfg.train_building)].week;
                    const auto t0 = std::chrono::steady_clock::now();
                    const Schedule sched = solve_optimal(wk, cfg.building, thp, tsolver);
                    solve_s += seconds_since(t0);
                    ++solves;
                    const std::vector<FeatureRow> extracted =
                        extract_features(sched, wk, cfg.building, thp);
                    rows.insert(rows.end(), extracted.begin(), extracted.end());
                    report.train_week_ids.push_back(label + ":train:" + std::to_string(w));
                    week_list += (week_list.empty() ? "" : ",") + std::to_string(w);
                }

                auto train_once = [&](const std::string& mlabel,
                                      std::uint64_t week_tag) -> TrainedModel {
                    auto [train_rows, val_rows] =
                        split_train_val(rows, cfg.split_ratio,
                                        rng::derive(cfg.seed, {uc, ur, kSplitTag, week_tag}));
                    const NormParams norm = fit_normalization(train_rows);
                    normalize_rows(train_rows, norm);
                    normalize_rows(val_rows, norm);
                    MlpModel model =
                        init_model(cfg.mlp, rng::derive(cfg.seed, {uc, ur, kInitTag, week_tag}));
                    model.norm_checksum = norm.checksum();
                    TrainConfig tc = cfg.train;
                    tc.seed = rng::derive(cfg.seed, {uc, ur, kTrainTag, week_tag});
                    const TrainReport tr =
                        train(model, to_samples(train_rows), to_samples(val_rows), tc);
                    report.train_reports.emplace_back(mlabel, tr);
                    report.provenance[mlabel] = "building " +
                                                std::to_string(cfg.train_building) +
                                                "; train weeks " + week_list;
                    return {std::move(model), norm};
                };

                TrainedModel tm;
                if (!cfg.train_per_week) tm = train_once(label, 0);

                for (int wt = 0; wt < cfg.test_weeks; ++wt) {
                    const WeekData base = synth_week(
                        rng::derive(cfg.seed, {uc, ur, kTestWeekTag, std::uint64_t(wt)}), prof);
                    const Cluster cl = make_cluster(base, cspec);
                    report.test_week_ids.push_back(label + ":test:" + std::to_string(wt));
                    if (cfg.train_per_week)
                        tm = train_once(label + "_w" + std::to_string(wt),
                                        std::uint64_t(wt) + 1);

                    // evaluate buildings in index batches; order stays by id
                    std::vector<BuildingEval> evals(std::size_t(cfg.buildings_per_cluster));
                    for (int b0 = 0; b0 < cfg.buildings_per_cluster; b0 += cfg.jobs) {
                        const int b1 = std::min(b0 + cfg.jobs, cfg.buildings_per_cluster);
                        std::vector<std::future<BuildingEval>> futs;
                        for (int b = b0; b < b1; ++b) {
                            const WeekData& wkb = cl.buildings[std::size_t(b)].week;
                            futs.push_back(std::async(
                                cfg.jobs > 1 ? std::launch::async : std::launch::deferred,
                                evaluate_building, std::cref(cfg), std::cref(chp),
                                std::cref(wkb), std::cref(tm)));
                        }
                        for (int b = b0; b < b1; ++b)
                            evals[std::size_t(b)] = futs[std::size_t(b - b0)].get();
                    }

                    for (int b = 0; b < cfg.buildings_per_cluster; ++b) {
                        const BuildingEval& ev = evals[std::size_t(b)];
                        solve_s += ev.solve_seconds;
                        ++solves;
                        sim_s += ev.ann_seconds;
                        ++sims;
                        const SimulationResult* results[] = {&ev.replay, &ev.conventional,
                                                             &ev.psc, &ev.ann};
                        for (int k = 0; k < 4; ++k) {
                            EvalRecord rec;
                            rec.cluster = int(c);
                            rec.cluster_demand = demand;
                            rec.run = r;
                            rec.week_id = "test:" + std::to_string(wt);
                            rec.building = b;
                            rec.controller = kControllers[k];
                            rec.cost_eur = results[k]->total_cost;
                            rec.comfort_violations = results[k]->comfort_violations;
                            rec.switch_offs = results[k]->switch_offs_total;
                            temp_range(*results[k], rec.min_temp_c, rec.max_temp_c);
                            report.records.push_back(std::move(rec));
                        }
                    }
                }
            } catch (const std::exception& e) {
                report.failures.push_back({label, e.what()});
            }
        }
    }

    report.timing.solve_seconds_per_week = solves > 0 ? solve_s / solves : 0.0;
    report.timing.simulate_seconds_per_week = sims > 0 ? sim_s / sims : 0.0;
    report.timing.ratio = report.timing.simulate_seconds_per_week > 0.0
                              ? report.timing.solve_seconds_per_week /
                                    report.timing.simulate_seconds_per_week
                              : 0.0;
    report.timing.solves = solves;
    report.timing.simulations = sims;
    return report;
}

std::map<std::string, double> mean_costs(const std::vector<EvalRecord>& records) {
    std::map<std::string, double> sums;
    std::map<std::string, int> counts;
    for (const EvalRecord& r : records) {
        sums[r.controller] += r.cost_eur;
        counts[r.controller] += 1;
    }
    std::map<std::string, double> means;
    for (const auto& [name, sum] : sums) means[name] = sum / counts[name];
    return means;
}

std::vector<std::string> evaluate_run_properties(const ExperimentReport& report) {
    std::vector<std::string> msgs;
    if (!report.failures.empty())
        msgs.push_back("pipeline failures: " + std::to_string(report.failures.size()));
    if (report.records.empty()) {
        msgs.push_back("no evaluation records");
        return msgs;
    }

    // group per (cluster, run, week, building)
    std::map<std::string, std::map<std::string, const EvalRecord*>> groups;
    for (const EvalRecord& r : report.records) {
        const std::string key = std::to_string(r.cluster) + "/" + std::to_string(r.run) + "/" +
                                r.week_id + "/b" + std::to_string(r.building);
        groups[key][r.controller] = &r;
    }

    int dominance_violations = 0;
    for (const auto& [key, by_controller] : groups) {
        if (by_controller.size() != 4) {
            msgs.push_back("incomplete controller set at " + key);
            continue;
        }
        const double ropt = by_controller.at("optimal_replay")->cost_eur;
        for (const char* name : {"conventional", "psc", "psc_ann"}) {
            const double other = by_controller.at(name)->cost_eur;
            if (ropt > other + 0.01 * ropt + 1e-9) {
                ++dominance_violations;
                if (dominance_violations <= 5)
                    msgs.push_back("replay dominance violated at " + key + " vs " + name +
                                   ": " + fmt_double(ropt) + " > " + fmt_double(other));
            }
        }
    }
    if (dominance_violations > 5)
        msgs.push_back("replay dominance violated " + std::to_string(dominance_violations) +
                       " times in total");

    const BuildingSpec& b = report.cfg.building;
    int safety_violations = 0;
    for (const EvalRecord& r : report.records) {
        const bool band_ok = r.min_temp_c >= b.temp_min_c - 0.1 - 1e-9 &&
                             r.max_temp_c <= b.temp_max_c + 0.1 + 1e-9;
        const bool budget_ok = r.switch_offs <= report.cfg.hp.max_switch_offs;
        if (!band_ok || !budget_ok) {
            ++safety_violations;
            if (safety_violations <= 5)
                msgs.push_back("safety violated: cluster " + std::to_string(r.cluster) +
                               " run " + std::to_string(r.run) + " " + r.week_id + " b" +
                               std::to_string(r.building) + " " + r.controller);
        }
    }
    if (safety_violations > 5)
        msgs.push_back("safety violated " + std::to_string(safety_violations) +
                       " times in total");

    const std::map<std::string, double> overall = mean_costs(report.records);
    if (overall.count("psc") && overall.count("conventional") &&
        !(overall.at("psc") < overall.at("conventional")))
        msgs.push_back("mean psc cost " + fmt_double(overall.at("psc")) +
                       " does not beat conventional " + fmt_double(overall.at("conventional")));

    // per-cluster imitation quality and transfer
    std::set<int> clusters;
    for (const EvalRecord& r : report.records) clusters.insert(r.cluster);
    for (int c : clusters) {
        std::vector<EvalRecord> sub;
        for (const EvalRecord& r : report.records)
            if (r.cluster == c) sub.push_back(r);
        const std::map<std::string, double> m = mean_costs(sub);
        if (!m.count("psc_ann") || !m.count("psc") || !m.count("conventional")) continue;
        if (m.at("psc_ann") > 1.01 * m.at("psc"))
            msgs.push_back("cluster " + std::to_string(c) + ": mean psc_ann " +
                           fmt_double(m.at("psc_ann")) + " exceeds 1.01 x mean psc " +
                           fmt_double(m.at("psc")));
        const Improvement imp = cost_improvement(m.at("conventional"), m.at("psc_ann"));
        if (!imp.defined || imp.pct < 2.0)
            msgs.push_back("cluster " + std::to_string(c) +
                           ": psc_ann improvement over conventional " +
                           (imp.defined ? fmt_double(imp.pct) : std::string("undefined")) +
                           "% is below 2%");

        std::set<int> buildings;
        for (const EvalRecord& r : sub) buildings.insert(r.building);
        for (int bld : buildings) {
            if (bld == report.cfg.train_building) continue;
            std::vector<double> ann, conv;
            for (const EvalRecord& r : sub) {
                if (r.building != bld) continue;
                if (r.controller == "psc_ann") ann.push_back(r.cost_eur);
                if (r.controller == "conventional") conv.push_back(r.cost_eur);
            }
            if (!(mean_of(ann) < mean_of(conv)))
                msgs.push_back("cluster " + std::to_string(c) + " building " +
                               std::to_string(bld) +
                               ": transferred model does not beat conventional");
        }
    }
    return msgs;
}

SweepReport sweep_hyperparameters(const ExperimentConfig& cfg, const SweepGrid& grid) {
    validate_config(cfg);
    if (grid.batch_sizes.empty() || grid.learning_rates.empty() || grid.hidden_widths.empty() ||
        grid.hidden_layers.empty())
        throw std::invalid_argument("sweep: empty grid dimension");

    SweepReport report;
    const double demand = cfg.cluster_demands_kwh_m2.front();
    ClusterSpec cspec;
    cspec.base_demand_kwh_m2 = demand;
    cspec.num_buildings = cfg.buildings_per_cluster;
    cspec.max_shift_slots = cfg.max_shift_slots;
    cspec.demand_tolerance_kwh_m2 = cfg.demand_tolerance_kwh_m2;
    cspec.seed = rng::derive(cfg.seed, {0});
    HeatPumpSpec chp = cfg.hp;
    chp.p_max_w = cfg.cluster_hp_p_max_w.front();
    HeatPumpSpec thp = chp;
    thp.max_switch_offs = cfg.train_max_switch_offs;
    SolverConfig tsolver = cfg.solver;
    tsolver.comfort_margin_k = cfg.train_margin_k;
    SynthProfile prof = cfg.profile;
    prof.target_weekly_kwh = annual_to_weekly_target(demand, cfg.building.living_area_m2);

    // training rows and test weeks are shared across all grid points
    const std::vector<int> sampled =
        sample_without_replacement(cfg.training_pool_weeks, cfg.training_sample_weeks,
                                   rng::derive(cfg.seed, {0, 0, kSampleTag}));
    std::vector<FeatureRow> rows;
    for (int w : sampled) {
        const WeekData base =
            synth_week(rng::derive(cfg.seed, {0, 0, kTrainWeekTag, std::uint64_t(w)}), prof);
        const Cluster cl = make_cluster(base, cspec);
        const WeekData& wk = cl.buildings[std::size_t(cfg.train_building)].week;
        const Schedule sched = solve_optimal(wk, cfg.building, thp, tsolver);
        const std::vector<FeatureRow> extracted =
            extract_features(sched, wk, cfg.building, thp);
        rows.insert(rows.end(), extracted.begin(), extracted.end());
    }

    std::vector<WeekData> test_weeks;
    std::vector<double> conv_costs;
    for (int wt = 0; wt < cfg.test_weeks; ++wt) {
        const WeekData base =
            synth_week(rng::derive(cfg.seed, {0, 0, kTestWeekTag, std::uint64_t(wt)}), prof);
        const Cluster cl = make_cluster(base, cspec);
        test_weeks.push_back(cl.buildings[std::size_t(cfg.train_building)].week);
        ConventionalController conv;
        conv_costs.push_back(
            simulate_week(conv, test_weeks.back(), cfg.building, chp, cfg.guard_margin_k)
                .total_cost);
    }
    const double mean_conv = mean_of(conv_costs);

    for (int bs : grid.batch_sizes) {
        for (double lr : grid.learning_rates) {
            for (int width : grid.hidden_widths) {
                for (int layers : grid.hidden_layers) {
                    SweepRow row;
                    row.point = {bs, lr, width, layers};
                    try {
                        auto [train_rows, val_rows] = split_train_val(
                            rows, cfg.split_ratio, rng::derive(cfg.seed, {0, 0, kSplitTag, 0}));
                        const NormParams norm = fit_normalization(train_rows);
                        normalize_rows(train_rows, norm);
                        normalize_rows(val_rows, norm);
                        MlpSpec spec = cfg.mlp;
                        spec.hidden_width = width;
                        spec.hidden_layers = layers;
                        MlpModel model =
                            init_model(spec, rng::derive(cfg.seed, {0, 0, kInitTag, 0}));
                        model.norm_checksum = norm.checksum();
                        TrainConfig tc = cfg.train;
                        tc.batch_size = bs;
                        tc.learning_rate = lr;
                        tc.seed = rng::derive(cfg.seed, {0, 0, kTrainTag, 0});
                        train(model, to_samples(train_rows), to_samples(val_rows), tc);

                        std::vector<double> costs;
                        for (const WeekData& wk : test_weeks) {
                            PscAnnController ann(model, norm, cfg.building);
                            costs.push_back(
                                simulate_week(ann, wk, cfg.building, chp, cfg.guard_margin_k)
                                    .total_cost);
                        }
                        row.mean_cost_ann = mean_of(costs);
                        row.mean_cost_conventional = mean_conv;
                        const Improvement imp = cost_improvement(mean_conv, row.mean_cost_ann);
                        row.improvement_pct = imp.pct;
                        row.improvement_defined = imp.defined;
                        report.rows.push_back(row);
                    } catch (const std::exception& e) {
                        std::ostringstream label;
                        label << "point(batch=" << bs << ",lr=" << lr << ",width=" << width
                              << ",layers=" << layers << ")";
                        report.failures.push_back({label.str(), e.what()});
                    }
                }
            }
        }
    }
    return report;
}

void write_records_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out = open_report(path);
    out << "cluster,cluster_demand,run,week,building,controller,cost_eur,"
           "comfort_violations,switch_offs,min_temp_c,max_temp_c\n";
    for (const EvalRecord& r : report.records) {
        out << r.cluster << ',' << fmt_double(r.cluster_demand) << ',' << r.run << ','
            << r.week_id << ',' << r.building << ',' << r.controller << ','
            << fmt_double(r.cost_eur) << ',' << r.comfort_violations << ',' << r.switch_offs
            << ',' << fmt_double(r.min_temp_c) << ',' << fmt_double(r.max_temp_c) << '\n';
    }
}

void write_weekly_table_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out = open_report(path);
    out << "cluster,week,optimal_replay,conventional,psc,psc_ann\n";

    std::set<int> clusters;
    for (const EvalRecord& r : report.records) clusters.insert(r.cluster);
    for (int c : clusters) {
        std::set<std::string> weeks;
        for (const EvalRecord& r : report.records)
            if (r.cluster == c) weeks.insert(r.week_id);
        auto emit_row = [&](const std::string& week_label, bool all_weeks) {
            out << c << ',' << week_label;
            for (const char* name : kControllers) {
                double sum = 0.0;
                int n = 0;
                for (const EvalRecord& r : report.records) {
                    if (r.cluster != c || r.controller != name) continue;
                    if (!all_weeks && r.week_id != week_label) continue;
                    sum += r.cost_eur;
                    ++n;
                }
                out << ',' << (n > 0 ? fmt_double(sum / n) : "nan");
            }
            out << '\n';
        };
        for (const std::string& w : weeks) emit_row(w, false);
        emit_row("average", true);
    }
}

void write_summary_json(const ExperimentReport& report, const std::string& path) {
    json j;
    j["config"] = config_json(report.cfg);

    std::set<int> clusters;
    for (const EvalRecord& r : report.records) clusters.insert(r.cluster);
    json jclusters = json::array();
    for (int c : clusters) {
        std::vector<EvalRecord> sub;
        for (const EvalRecord& r : report.records)
            if (r.cluster == c) sub.push_back(r);
        const std::map<std::string, double> m = mean_costs(sub);
        json jc;
        jc["cluster"] = c;
        jc["demand_kwh_m2"] = sub.front().cluster_demand;
        jc["evaluations"] = int(sub.size() / 4);
        jc["mean_cost_eur"] = m;
        json imps;
        for (const char* name : {"optimal_replay", "psc", "psc_ann"}) {
            if (!m.count(name) || !m.count("conventional")) continue;
            const Improvement imp = cost_improvement(m.at("conventional"), m.at(name));
            imps[name] = imp.defined ? json(imp.pct) : json(nullptr);
        }
        jc["improvement_vs_conventional_pct"] = imps;
        jclusters.push_back(jc);
    }
    j["clusters"] = jclusters;
    j["overall_mean_cost_eur"] = mean_costs(report.records);
    j["property_failures"] = evaluate_run_properties(report);
    json fails = json::array();
    for (const FailureRecord& f : report.failures)
        fails.push_back({{"stage", f.stage}, {"detail", f.detail}});
    j["pipeline_failures"] = fails;
    j["provenance"] = report.provenance;
    j["train_week_ids"] = report.train_week_ids;
    j["test_week_ids"] = report.test_week_ids;

    std::ofstream out = open_report(path);
    out << j.dump(2) << '\n';
}

void write_loss_curves_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out = open_report(path);
    out << "week,epoch,train_rmse,val_rmse\n";
    for (const auto& [label, tr] : report.train_reports) {
        for (std::size_t e = 0; e < tr.train_mse.size(); ++e) {
            out << label << ',' << (e + 1) << ',' << fmt_double(std::sqrt(tr.train_mse[e]))
                << ',' << fmt_double(std::sqrt(tr.val_mse[e])) << '\n';
        }
    }
}

void write_timing_json(const ExperimentReport& report, const std::string& path) {
    json j;
    j["solve_seconds_per_week"] = report.timing.solve_seconds_per_week;
    j["simulate_seconds_per_week"] = report.timing.simulate_seconds_per_week;
    j["solve_over_simulate_ratio"] = report.timing.ratio;
    j["solves"] = report.timing.solves;
    j["simulations"] = report.timing.simulations;
    json walls;
    for (const auto& [label, tr] : report.train_reports) walls[label] = tr.wall_seconds;
    j["train_wall_seconds"] = walls;
    std::ofstream out = open_report(path);
    out << j.dump(2) << '\n';
}

void write_sweep_csv(const SweepReport& report, const std::string& path) {
    std::ofstream out = open_report(path);
    out << "batch_size,learning_rate,hidden_width,hidden_layers,mean_cost_psc_ann,"
           "mean_cost_conventional,improvement_pct,improvement_defined\n";
    for (const SweepRow& r : report.rows) {
        out << r.point.batch_size << ',' << fmt_double(r.point.learning_rate) << ','
            << r.point.hidden_width << ',' << r.point.hidden_layers << ','
            << fmt_double(r.mean_cost_ann) << ',' << fmt_double(r.mean_cost_conventional) << ','
            << fmt_double(r.improvement_pct) << ',' << (r.improvement_defined ? 1 : 0) << '\n';
    }
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    reject_unknown(j,
                   {"cluster_demands_kwh_m2", "cluster_hp_p_max_w", "buildings_per_cluster",
                    "training_pool_weeks",
                    "training_sample_weeks", "test_weeks", "runs", "split_ratio",
                    "train_building", "train_per_week", "max_shift_slots",
                    "demand_tolerance_kwh_m2", "jobs", "guard_margin_k", "train_margin_k",
                    "train_max_switch_offs", "seed", "mlp", "train", "solver",
                    "building", "heat_pump", "profile"},
                   path);

    ExperimentConfig cfg;
    cfg.cluster_demands_kwh_m2 =
        j.value("cluster_demands_kwh_m2", cfg.cluster_demands_kwh_m2);
    cfg.cluster_hp_p_max_w = j.value("cluster_hp_p_max_w", cfg.cluster_hp_p_max_w);
    cfg.buildings_per_cluster = j.value("buildings_per_cluster", cfg.buildings_per_cluster);
    cfg.training_pool_weeks = j.value("training_pool_weeks", cfg.training_pool_weeks);
    cfg.training_sample_weeks = j.value("training_sample_weeks", cfg.training_sample_weeks);
    cfg.test_weeks = j.value("test_weeks", cfg.test_weeks);
    cfg.runs = j.value("runs", cfg.runs);
    cfg.split_ratio = j.value("split_ratio", cfg.split_ratio);
    cfg.train_building = j.value("train_building", cfg.train_building);
    cfg.train_per_week = j.value("train_per_week", cfg.train_per_week);
    cfg.max_shift_slots = j.value("max_shift_slots", cfg.max_shift_slots);
    cfg.demand_tolerance_kwh_m2 =
        j.value("demand_tolerance_kwh_m2", cfg.demand_tolerance_kwh_m2);
    cfg.jobs = j.value("jobs", cfg.jobs);
    cfg.guard_margin_k = j.value("guard_margin_k", cfg.guard_margin_k);
    cfg.train_margin_k = j.value("train_margin_k", cfg.train_margin_k);
    cfg.train_max_switch_offs = j.value("train_max_switch_offs", cfg.train_max_switch_offs);
    cfg.seed = j.value("seed", cfg.seed);

    if (j.contains("mlp")) {
        const json& m = j["mlp"];
        reject_unknown(m, {"input_dim", "hidden_layers", "hidden_width", "output_dim"},
                       path + ": mlp");
        cfg.mlp.input_dim = m.value("input_dim", cfg.mlp.input_dim);
        cfg.mlp.hidden_layers = m.value("hidden_layers", cfg.mlp.hidden_layers);
        cfg.mlp.hidden_width = m.value("hidden_width", cfg.mlp.hidden_width);
        cfg.mlp.output_dim = m.value("output_dim", cfg.mlp.output_dim);
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        reject_unknown(t, {"batch_size", "learning_rate", "epochs", "momentum", "seed"},
                       path + ": train");
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.momentum = t.value("momentum", cfg.train.momentum);
        cfg.train.seed = t.value("seed", cfg.train.seed);
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        reject_unknown(
            s, {"temp_resolution_k", "comfort_margin_k", "cost_tolerance", "modulation_grid"},
            path + ": solver");
        cfg.solver.temp_resolution_k = s.value("temp_resolution_k", cfg.solver.temp_resolution_k);
        cfg.solver.comfort_margin_k = s.value("comfort_margin_k", cfg.solver.comfort_margin_k);
        cfg.solver.cost_tolerance = s.value("cost_tolerance", cfg.solver.cost_tolerance);
        cfg.solver.modulation_grid = s.value("modulation_grid", cfg.solver.modulation_grid);
    }
    if (j.contains("building")) {
        const json& jb = j["building"];
        reject_unknown(jb,
                       {"living_area_m2", "ufh_volume_m3", "concrete_density",
                        "concrete_specific_heat", "temp_min_c", "temp_max_c", "ufh_loss_w",
                        "initial_temp_c", "annual_demand_kwh_m2"},
                       path + ": building");
        BuildingSpec& b = cfg.building;
        b.living_area_m2 = jb.value("living_area_m2", b.living_area_m2);
        b.ufh_volume_m3 = jb.value("ufh_volume_m3", b.ufh_volume_m3);
        b.concrete_density = jb.value("concrete_density", b.concrete_density);
        b.concrete_specific_heat = jb.value("concrete_specific_heat", b.concrete_specific_heat);
        b.temp_min_c = jb.value("temp_min_c", b.temp_min_c);
        b.temp_max_c = jb.value("temp_max_c", b.temp_max_c);
        b.ufh_loss_w = jb.value("ufh_loss_w", b.ufh_loss_w);
        b.initial_temp_c = jb.value("initial_temp_c", b.initial_temp_c);
        b.annual_demand_kwh_m2 = jb.value("annual_demand_kwh_m2", b.annual_demand_kwh_m2);
    }
    if (j.contains("heat_pump")) {
        const json& jh = j["heat_pump"];
        reject_unknown(jh, {"p_max_w", "mod_min", "max_switch_offs", "supply_temp_c", "cop_table"},
                       path + ": heat_pump");
        cfg.hp.p_max_w = jh.value("p_max_w", cfg.hp.p_max_w);
        cfg.hp.mod_min = jh.value("mod_min", cfg.hp.mod_min);
        cfg.hp.max_switch_offs = jh.value("max_switch_offs", cfg.hp.max_switch_offs);
        cfg.hp.supply_temp_c = jh.value("supply_temp_c", cfg.hp.supply_temp_c);
        if (jh.contains("cop_table")) {
            cfg.hp.cop_table.clear();
            for (const json& row : jh["cop_table"]) {
                if (!row.is_array() || row.size() != 2)
                    throw std::runtime_error(path + ": cop_table rows must be [lift, cop]");
                cfg.hp.cop_table.push_back({row[0].get<double>(), row[1].get<double>()});
            }
        }
    }
    if (j.contains("profile")) {
        const json& p = j["profile"];
        reject_unknown(p,
                       {"slot_duration_s", "outside_min_c", "outside_max_c", "demand_ref_c",
                        "price_base_eur_kwh", "price_peak_eur_kwh", "price_noise_eur_kwh",
                        "inflexible_base_w", "inflexible_peak_w"},
                       path + ": profile");
        SynthProfile& pr = cfg.profile;
        pr.slot_duration_s = p.value("slot_duration_s", pr.slot_duration_s);
        pr.outside_min_c = p.value("outside_min_c", pr.outside_min_c);
        pr.outside_max_c = p.value("outside_max_c", pr.outside_max_c);
        pr.demand_ref_c = p.value("demand_ref_c", pr.demand_ref_c);
        pr.price_base_eur_kwh = p.value("price_base_eur_kwh", pr.price_base_eur_kwh);
        pr.price_peak_eur_kwh = p.value("price_peak_eur_kwh", pr.price_peak_eur_kwh);
        pr.price_noise_eur_kwh = p.value("price_noise_eur_kwh", pr.price_noise_eur_kwh);
        pr.inflexible_base_w = p.value("inflexible_base_w", pr.inflexible_base_w);
        pr.inflexible_peak_w = p.value("inflexible_peak_w", pr.inflexible_peak_w);
    }
    validate_config(cfg);
    return cfg;
}

void save_experiment_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out = open_report(path);
    out << config_json(cfg).dump(2) << '\n';
}

}  // namespace hpdr

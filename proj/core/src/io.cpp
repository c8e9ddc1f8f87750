#include "hpdr/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hpdr {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

[[noreturn]] void line_error(const std::string& path, std::size_t line, const std::string& msg) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        line_error(path, line, "not a number: '" + s + "'");
    return v;
}

long parse_long(const std::string& s, const std::string& path, std::size_t line) {
    long v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        line_error(path, line, "not an integer: '" + s + "'");
    return v;
}

/// Reads one CSV with the exact header; hands each data row to consume.
template <typename RowFn>
void read_csv(const std::string& path, const std::string& header, RowFn consume) {
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header)
        line_error(path, line_no, "expected header '" + header + "', got '" + line + "'");
    const std::size_t n_cols = split_csv(header).size();
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != n_cols)
            line_error(path, line_no,
                       "expected " + std::to_string(n_cols) + " columns, got " +
                           std::to_string(fields.size()));
        consume(fields, line_no);
    }
}

json params_json(const NormParams& p) {
    return json{{"t_out_min", p.t_out_min},
                {"t_out_max", p.t_out_max},
                {"starts_max", p.starts_max},
                {"checksum", p.checksum()}};
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const std::string& k : known) ok = ok || k == key;
        if (!ok) throw std::runtime_error(where + ": unknown key '" + key + "'");
    }
}

}  // namespace

std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void save_week_csv(const WeekData& w, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "slot,price_eur_per_kwh,heat_demand_wh,inflexible_w,outside_temp_c\n";
    for (std::size_t t = 0; t < std::size_t(w.num_slots()); ++t) {
        out << t << ',' << fmt_double(w.price_eur_kwh[t]) << ','
            << fmt_double(w.heat_demand_wh[t]) << ',' << fmt_double(w.inflexible_w[t]) << ','
            << fmt_double(w.outside_temp_c[t]) << '\n';
    }
}

WeekData load_week_csv(const std::string& path) {
    WeekData w;
    read_csv(path, "slot,price_eur_per_kwh,heat_demand_wh,inflexible_w,outside_temp_c",
             [&](const std::vector<std::string>& f, std::size_t line) {
                 if (parse_long(f[0], path, line) != long(w.price_eur_kwh.size()))
                     line_error(path, line, "slot index out of order");
                 w.price_eur_kwh.push_back(parse_double(f[1], path, line));
                 w.heat_demand_wh.push_back(parse_double(f[2], path, line));
                 w.inflexible_w.push_back(parse_double(f[3], path, line));
                 w.outside_temp_c.push_back(parse_double(f[4], path, line));
             });
    if (w.num_slots() == 0) throw std::runtime_error(path + ": no data rows");
    if (kSecondsPerWeek % w.num_slots() != 0)
        throw std::runtime_error(path + ": " + std::to_string(w.num_slots()) +
                                 " rows do not divide one week evenly");
    w.slot_duration_s = kSecondsPerWeek / w.num_slots();
    const std::vector<std::string> issues = validate_week_data(w);
    if (!issues.empty()) {
        std::string msg = path + ": invalid week data:";
        for (const std::string& i : issues) msg += " " + i + ";";
        throw std::runtime_error(msg);
    }
    return w;
}

void save_schedule_csv(const Schedule& s, const WeekData& week, const HeatPumpSpec& hp,
                       const std::string& path) {
    if (s.x.size() != std::size_t(week.num_slots()))
        throw std::invalid_argument("save_schedule_csv: schedule/week length mismatch");
    std::ofstream out = open_out(path);
    out << "slot,x,h_on,h_switched_off,temp_c,slot_cost_eur\n";
    for (std::size_t t = 0; t < s.x.size(); ++t) {
        const double cost = slot_cost(s.x[t], hp, week.inflexible_w[t], week.slot_duration_s,
                                      week.price_eur_kwh[t]);
        out << t << ',' << fmt_double(s.x[t]) << ',' << int(s.on[t]) << ','
            << int(s.switched_off[t]) << ',' << fmt_double(s.temp_trace[t]) << ','
            << fmt_double(cost) << '\n';
    }
}

void save_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "slot,price,temp_c,x,pf,sf,starts_today,h_on,cost_eur\n";
    for (const TraceRow& r : trace) {
        out << r.slot << ',' << fmt_double(r.price) << ',' << fmt_double(r.temp_c) << ','
            << fmt_double(r.x) << ',' << fmt_double(r.pf) << ',' << fmt_double(r.sf) << ','
            << r.starts_today << ',' << int(r.h_on) << ',' << fmt_double(r.cost_eur) << '\n';
    }
}

void save_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "pf,sf,t_out_norm,starts_norm,running,label\n";
    for (const FeatureRow& r : ds.rows) {
        out << fmt_double(r.price_factor) << ',' << fmt_double(r.storage_factor) << ','
            << fmt_double(r.outside_temp) << ',' << fmt_double(r.starts_today) << ','
            << fmt_double(r.hp_running) << ',' << fmt_double(r.label) << '\n';
    }

    json meta;
    meta["normalized"] = ds.normalized;
    meta["normalization"] = params_json(ds.normalization);
    meta["building_id"] = ds.building_id;
    meta["week_ids"] = ds.week_ids;
    meta["seed"] = ds.seed;
    std::ofstream meta_out = open_out(path + ".meta.json");
    meta_out << meta.dump(2) << '\n';
}

Dataset load_dataset_csv(const std::string& path) {
    Dataset ds;
    read_csv(path, "pf,sf,t_out_norm,starts_norm,running,label",
             [&](const std::vector<std::string>& f, std::size_t line) {
                 FeatureRow r;
                 r.price_factor = parse_double(f[0], path, line);
                 r.storage_factor = parse_double(f[1], path, line);
                 r.outside_temp = parse_double(f[2], path, line);
                 r.starts_today = parse_double(f[3], path, line);
                 r.hp_running = parse_double(f[4], path, line);
                 r.label = parse_double(f[5], path, line);
                 ds.rows.push_back(r);
             });

    std::ifstream meta_in = open_in(path + ".meta.json");
    json meta;
    try {
        meta = json::parse(meta_in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ".meta.json: " + e.what());
    }
    ds.normalized = meta.at("normalized").get<bool>();
    const json& n = meta.at("normalization");
    ds.normalization.t_out_min = n.at("t_out_min").get<double>();
    ds.normalization.t_out_max = n.at("t_out_max").get<double>();
    ds.normalization.starts_max = n.at("starts_max").get<double>();
    if (n.at("checksum").get<std::uint64_t>() != ds.normalization.checksum())
        throw std::runtime_error(path + ".meta.json: normalization checksum mismatch");
    ds.building_id = meta.at("building_id").get<int>();
    ds.week_ids = meta.at("week_ids").get<std::vector<int>>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    return ds;
}

void save_loss_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "epoch,train_mse,val_mse\n";
    for (std::size_t e = 0; e < report.train_mse.size(); ++e) {
        out << (e + 1) << ',' << fmt_double(report.train_mse[e]) << ','
            << fmt_double(report.val_mse[e]) << '\n';
    }
}

void save_model_json(const MlpModel& m, const NormParams& norm, const std::string& path) {
    json j;
    j["spec"] = {{"input_dim", m.spec.input_dim},
                 {"hidden_layers", m.spec.hidden_layers},
                 {"hidden_width", m.spec.hidden_width},
                 {"output_dim", m.spec.output_dim}};
    j["weights"] = m.weights;
    j["biases"] = m.biases;
    j["init_seed"] = m.init_seed;
    j["norm_checksum"] = m.norm_checksum;
    j["normalization"] = params_json(norm);
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

std::pair<MlpModel, NormParams> load_model_json(const std::string& path) {
    std::ifstream in = open_in(path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    MlpModel m;
    const json& s = j.at("spec");
    m.spec.input_dim = s.at("input_dim").get<int>();
    m.spec.hidden_layers = s.at("hidden_layers").get<int>();
    m.spec.hidden_width = s.at("hidden_width").get<int>();
    m.spec.output_dim = s.at("output_dim").get<int>();
    if (m.spec.input_dim < 1 || m.spec.hidden_layers < 1 || m.spec.hidden_width < 1 ||
        m.spec.output_dim < 1)
        throw std::runtime_error(path + ": non-positive model dimension");
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    m.init_seed = j.at("init_seed").get<std::uint64_t>();
    m.norm_checksum = j.at("norm_checksum").get<std::uint64_t>();

    const std::size_t layers = std::size_t(m.spec.hidden_layers) + 1;
    if (m.weights.size() != layers || m.biases.size() != layers)
        throw std::runtime_error(path + ": layer count does not match the spec");
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in_dim =
            l == 0 ? std::size_t(m.spec.input_dim) : std::size_t(m.spec.hidden_width);
        const std::size_t out_dim =
            l + 1 == layers ? std::size_t(m.spec.output_dim) : std::size_t(m.spec.hidden_width);
        if (m.weights[l].size() != in_dim * out_dim || m.biases[l].size() != out_dim)
            throw std::runtime_error(path + ": layer " + std::to_string(l) +
                                     " has the wrong parameter count");
    }

    NormParams norm;
    const json& n = j.at("normalization");
    norm.t_out_min = n.at("t_out_min").get<double>();
    norm.t_out_max = n.at("t_out_max").get<double>();
    norm.starts_max = n.at("starts_max").get<double>();
    if (n.at("checksum").get<std::uint64_t>() != norm.checksum())
        throw std::runtime_error(path + ": normalization checksum mismatch");
    if (m.norm_checksum != norm.checksum())
        throw std::runtime_error(path + ": model was trained for a different normalization");
    return {std::move(m), norm};
}

std::pair<BuildingSpec, HeatPumpSpec> load_plant_config(const std::string& path) {
    std::ifstream in = open_in(path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    reject_unknown_keys(root, {"building", "heat_pump"}, path);

    BuildingSpec b;
    if (root.contains("building")) {
        const json& jb = root["building"];
        reject_unknown_keys(jb,
                            {"living_area_m2", "ufh_volume_m3", "concrete_density",
                             "concrete_specific_heat", "temp_min_c", "temp_max_c", "ufh_loss_w",
                             "initial_temp_c", "annual_demand_kwh_m2"},
                            path + ": building");
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

    HeatPumpSpec hp;
    if (root.contains("heat_pump")) {
        const json& jh = root["heat_pump"];
        reject_unknown_keys(
            jh, {"p_max_w", "mod_min", "max_switch_offs", "supply_temp_c", "cop_table"},
            path + ": heat_pump");
        hp.p_max_w = jh.value("p_max_w", hp.p_max_w);
        hp.mod_min = jh.value("mod_min", hp.mod_min);
        hp.max_switch_offs = jh.value("max_switch_offs", hp.max_switch_offs);
        hp.supply_temp_c = jh.value("supply_temp_c", hp.supply_temp_c);
        if (jh.contains("cop_table")) {
            hp.cop_table.clear();
            for (const json& row : jh["cop_table"]) {
                if (!row.is_array() || row.size() != 2)
                    throw std::runtime_error(path + ": cop_table rows must be [lift, cop]");
                hp.cop_table.push_back({row[0].get<double>(), row[1].get<double>()});
            }
        }
    }
    return {b, hp};
}

void save_plant_config(const BuildingSpec& b, const HeatPumpSpec& hp, const std::string& path) {
    json root;
    root["building"] = {{"living_area_m2", b.living_area_m2},
                        {"ufh_volume_m3", b.ufh_volume_m3},
                        {"concrete_density", b.concrete_density},
                        {"concrete_specific_heat", b.concrete_specific_heat},
                        {"temp_min_c", b.temp_min_c},
                        {"temp_max_c", b.temp_max_c},
                        {"ufh_loss_w", b.ufh_loss_w},
                        {"initial_temp_c", b.initial_temp_c},
                        {"annual_demand_kwh_m2", b.annual_demand_kwh_m2}};
    json cop = json::array();
    for (const CopPoint& p : hp.cop_table) cop.push_back({p.lift_k, p.cop});
    root["heat_pump"] = {{"p_max_w", hp.p_max_w},
                         {"mod_min", hp.mod_min},
                         {"max_switch_offs", hp.max_switch_offs},
                         {"supply_temp_c", hp.supply_temp_c},
                         {"cop_table", cop}};
    std::ofstream out = open_out(path);
    out << root.dump(2) << '\n';
}

void write_cluster_manifest(const Cluster& cluster, const std::string& path) {
    json root;
    root["base_demand_kwh_m2"] = cluster.spec.base_demand_kwh_m2;
    root["num_buildings"] = cluster.spec.num_buildings;
    root["max_shift_slots"] = cluster.spec.max_shift_slots;
    root["demand_tolerance_kwh_m2"] = cluster.spec.demand_tolerance_kwh_m2;
    root["seed"] = cluster.spec.seed;
    json buildings = json::array();
    for (const ClusterBuilding& b : cluster.buildings) {
        buildings.push_back({{"id", b.id},
                             {"seed", b.seed},
                             {"shift_slots", b.shift_slots},
                             {"scale", b.scale},
                             {"annual_demand_kwh_m2", b.annual_demand_kwh_m2}});
    }
    root["buildings"] = buildings;
    std::ofstream out = open_out(path);
    out << root.dump(2) << '\n';
}

std::string infeasibility_json(const InfeasibleError& e) {
    json j{{"error", "infeasible"}, {"slot", e.slot}, {"constraint", e.constraint}};
    return j.dump();
}

}  // namespace hpdr

#ifndef HPDR_IO_HPP
#define HPDR_IO_HPP

#include <string>
#include <utility>
#include <vector>

#include "hpdr/dataset.hpp"
#include "hpdr/mlp.hpp"
#include "hpdr/model.hpp"
#include "hpdr/scenario.hpp"
#include "hpdr/simulate.hpp"
#include "hpdr/solver.hpp"

namespace hpdr {

/// Shortest decimal string that parses back to the same double.
std::string fmt_double(double v);

/// Header: slot,price_eur_per_kwh,heat_demand_wh,inflexible_w,outside_temp_c
void save_week_csv(const WeekData& w, const std::string& path);

/// Strict schema; the slot duration is one week divided by the row count.
/// Parse problems name the line; semantic problems list every violation.
WeekData load_week_csv(const std::string& path);

/// Header: slot,x,h_on,h_switched_off,temp_c,slot_cost_eur
void save_schedule_csv(const Schedule& s, const WeekData& week, const HeatPumpSpec& hp,
                       const std::string& path);

/// Header: slot,price,temp_c,x,pf,sf,starts_today,h_on,cost_eur
void save_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

/// Header: pf,sf,t_out_norm,starts_norm,running,label. A sidecar at
/// path + ".meta.json" carries normalization parameters and provenance.
void save_dataset_csv(const Dataset& ds, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

/// Header: epoch,train_mse,val_mse (epochs 1-based).
void save_loss_csv(const TrainReport& report, const std::string& path);

/// JSON with the network spec, per-layer parameters, and the feature scaling
/// the model was trained for. Load rejects shape mismatches and any norm
/// whose checksum differs from the one stored with the model.
void save_model_json(const MlpModel& m, const NormParams& norm, const std::string& path);
std::pair<MlpModel, NormParams> load_model_json(const std::string& path);

/// JSON with "building" and "heat_pump" objects whose keys mirror the
/// BuildingSpec and HeatPumpSpec field names. Unknown keys are rejected;
/// missing keys keep defaults.
std::pair<BuildingSpec, HeatPumpSpec> load_plant_config(const std::string& path);
void save_plant_config(const BuildingSpec& b, const HeatPumpSpec& hp, const std::string& path);

/// Provenance of every generated building: id, seed, shift, scale, demand.
void write_cluster_manifest(const Cluster& cluster, const std::string& path);

/// One-line JSON record naming the first blocked slot and its constraint.
std::string infeasibility_json(const InfeasibleError& e);

}  // namespace hpdr

#endif

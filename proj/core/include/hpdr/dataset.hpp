#ifndef HPDR_DATASET_HPP
#define HPDR_DATASET_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "hpdr/mlp.hpp"
#include "hpdr/model.hpp"
#include "hpdr/psc.hpp"
#include "hpdr/solver.hpp"

namespace hpdr {

/// One supervised example. outside_temp is in degrees C and starts_today is a
/// raw count until normalize_rows maps both into [0, 1].
struct FeatureRow {
    double price_factor = 0.0;
    double storage_factor = 0.0;
    double outside_temp = 0.0;
    double starts_today = 0.0;
    double hp_running = 0.0;
    double label = 0.0;
};

/// Feature scaling fitted on training rows only.
struct NormParams {
    double t_out_min = 0.0;
    double t_out_max = 1.0;
    double starts_max = 1.0;  ///< floor 1 so an all-zero column stays defined

    std::uint64_t checksum() const;
};

struct Dataset {
    std::vector<FeatureRow> rows;
    NormParams normalization;
    bool normalized = false;
    int building_id = 0;
    std::vector<int> week_ids;
    std::uint64_t seed = 0;
};

struct RunStats {
    int starts_today = 0;
    bool hp_running = false;
};

/// Compressor starts within the trailing window of already-decided slots
/// [t - window, t - 1], truncated at the week start, and the running state
/// entering slot t. Slot t itself is excluded: these are decision-time
/// observations, the decision for t is not known yet.
RunStats run_statistics(const Schedule& s, std::size_t t, std::size_t window_slots = 48);

/// Closed-loop variant; on_history holds the decisions for slots before t,
/// so t may equal its length while a simulation is still in progress.
RunStats run_statistics(const std::vector<std::uint8_t>& on_history, std::size_t t,
                        std::size_t window_slots = 48);

/// 24 h expressed in slots, floored to 1 for slot durations above a day.
std::size_t day_window_slots(int slot_duration_s);

/// One row per slot. Price and storage factors are the values a controller
/// would see entering the slot; the label is the schedule's modulation.
std::vector<FeatureRow> extract_features(const Schedule& s, const WeekData& week,
                                         const BuildingSpec& b, const HeatPumpSpec& hp,
                                         const PscOptions& opt = {});

NormParams fit_normalization(const std::vector<FeatureRow>& training_rows);

double normalize_temp(const NormParams& p, double temp_c);
double denormalize_temp(const NormParams& p, double v);
double normalize_starts(const NormParams& p, double count);
double denormalize_starts(const NormParams& p, double v);

/// Maps outside_temp and starts_today into [0, 1] in place, clamped.
void normalize_rows(std::vector<FeatureRow>& rows, const NormParams& p);

/// Seed-shuffled split into ceil(ratio * n) training rows and the rest.
std::pair<std::vector<FeatureRow>, std::vector<FeatureRow>> split_train_val(
    const std::vector<FeatureRow>& rows, double ratio, std::uint64_t seed);

/// Feature order consumed by the regressor:
/// [price_factor, storage_factor, outside_temp, starts_today, hp_running].
std::vector<double> feature_vector(const FeatureRow& r);

SampleSet to_samples(const std::vector<FeatureRow>& rows);

}  // namespace hpdr

#endif

#ifndef HPDR_MLP_HPP
#define HPDR_MLP_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hpdr {

struct MlpSpec {
    int input_dim = 5;
    int hidden_layers = 5;
    int hidden_width = 50;
    int output_dim = 1;

    int param_count() const;
};

struct TrainConfig {
    int batch_size = 30;
    double learning_rate = 0.0018;
    int epochs = 20;
    double momentum = 0.9;  ///< 0 disables the velocity term
    std::uint64_t seed = 1;
};

/// Fully connected ReLU regressor. weights[l] is row-major out x in.
struct MlpModel {
    MlpSpec spec;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::uint64_t init_seed = 0;
    std::uint64_t norm_checksum = 0;  ///< feature scaling the model was trained for
};

struct Sample {
    std::vector<double> features;
    double label = 0.0;
};
using SampleSet = std::vector<Sample>;

/// Same shapes as the model parameters.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

struct TrainReport {
    std::vector<double> train_mse;  ///< one entry per epoch, full-set evaluation
    std::vector<double> val_mse;
    std::uint64_t param_checksum = 0;
    double wall_seconds = 0.0;
};

struct TrainDivergence : std::runtime_error {
    TrainDivergence(int epoch_, int batch_);
    int epoch;
    int batch;
};

/// He-style uniform fan-in init for the weights, zero biases. Deterministic.
MlpModel init_model(const MlpSpec& spec, std::uint64_t seed);

/// Single regression output; hidden ReLU, identity output, no clamping.
double forward(const MlpModel& m, const std::vector<double>& features);

double loss_mse(const std::vector<double>& predictions, const std::vector<double>& labels);

/// Mean-squared-error gradients of one batch, averaged over its samples.
Gradients backprop_gradients(const MlpModel& m, const SampleSet& batch);

/// Mini-batch SGD with momentum; deterministic per-epoch shuffling by seed.
/// Within a batch, samples accumulate in ascending dataset order.
TrainReport train(MlpModel& m, const SampleSet& train_set, const SampleSet& val_set,
                  const TrainConfig& cfg);

/// Central finite differences against analytic gradients on a seeded subset
/// of parameters; returns the largest relative deviation. Parameters whose
/// perturbation flips a ReLU activation are skipped: the difference quotient
/// is invalid across a kink.
double gradient_check(const MlpModel& m, const Sample& sample, double epsilon = 1e-5,
                      int max_checks = 128, std::uint64_t seed = 1);

/// FNV-1a over the raw parameter bytes in layer order.
std::uint64_t param_checksum(const MlpModel& m);

/// Binary round-trip that restores parameters bit for bit.
void save_model(const MlpModel& m, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace hpdr

#endif

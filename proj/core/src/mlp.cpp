#include "hpdr/mlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "hpdr/rng.hpp"

namespace hpdr {

namespace {

int num_layers(const MlpSpec& s) { return s.hidden_layers + 1; }

int layer_in(const MlpSpec& s, int l) { return l == 0 ? s.input_dim : s.hidden_width; }

int layer_out(const MlpSpec& s, int l) {
    return l == num_layers(s) - 1 ? s.output_dim : s.hidden_width;
}

void validate_spec(const MlpSpec& s) {
    if (s.input_dim < 1 || s.hidden_layers < 1 || s.hidden_width < 1)
        throw std::invalid_argument("mlp spec: dimensions must be positive");
    if (s.output_dim != 1) throw std::invalid_argument("mlp spec: single regression output only");
}

void validate_shapes(const MlpModel& m) {
    const int L = num_layers(m.spec);
    if (static_cast<int>(m.weights.size()) != L || static_cast<int>(m.biases.size()) != L)
        throw std::invalid_argument("mlp model: layer count mismatch");
    for (int l = 0; l < L; ++l) {
        const std::size_t wn = static_cast<std::size_t>(layer_out(m.spec, l)) * layer_in(m.spec, l);
        if (m.weights[l].size() != wn || m.biases[l].size() != static_cast<std::size_t>(layer_out(m.spec, l)))
            throw std::invalid_argument("mlp model: parameter shape mismatch");
    }
}

void validate_input(const MlpModel& m, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != m.spec.input_dim)
        throw std::invalid_argument("mlp forward: feature count mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw std::domain_error("mlp forward: non-finite feature");
}

/// Post-activation values per layer; acts[0] is the input itself.
/// When signs != nullptr, the hidden pre-activation signs (z > 0) are
/// appended layer by layer.
double forward_acts(const MlpModel& m, const std::vector<double>& x,
                    std::vector<std::vector<double>>* acts, std::vector<bool>* signs) {
    const int L = num_layers(m.spec);
    std::vector<double> cur = x;
    if (acts) {
        acts->clear();
        acts->push_back(cur);
    }
    for (int l = 0; l < L; ++l) {
        const int in = layer_in(m.spec, l);
        const int out = layer_out(m.spec, l);
        std::vector<double> next(static_cast<std::size_t>(out));
        const double* w = m.weights[l].data();
        for (int o = 0; o < out; ++o) {
            double z = m.biases[l][static_cast<std::size_t>(o)];
            const double* row = w + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) z += row[i] * cur[static_cast<std::size_t>(i)];
            if (l < L - 1) {
                if (signs) signs->push_back(z > 0.0);
                z = z > 0.0 ? z : 0.0;
            }
            next[static_cast<std::size_t>(o)] = z;
        }
        cur = std::move(next);
        if (acts) acts->push_back(cur);
    }
    return cur[0];
}

Gradients zero_gradients(const MlpModel& m) {
    Gradients g;
    g.weights.resize(m.weights.size());
    g.biases.resize(m.biases.size());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        g.weights[l].assign(m.weights[l].size(), 0.0);
        g.biases[l].assign(m.biases[l].size(), 0.0);
    }
    return g;
}

/// Adds the gradient of (pred - label)^2 scaled by 1/batch into g.
void accumulate_sample(const MlpModel& m, const Sample& s, double inv_batch, Gradients& g) {
    std::vector<std::vector<double>> acts;
    const double pred = forward_acts(m, s.features, &acts, nullptr);
    const int L = num_layers(m.spec);

    std::vector<double> delta{2.0 * (pred - s.label) * inv_batch};
    for (int l = L - 1; l >= 0; --l) {
        const int in = layer_in(m.spec, l);
        const int out = layer_out(m.spec, l);
        const std::vector<double>& a_in = acts[static_cast<std::size_t>(l)];
        for (int o = 0; o < out; ++o) {
            const double d = delta[static_cast<std::size_t>(o)];
            g.biases[static_cast<std::size_t>(l)][static_cast<std::size_t>(o)] += d;
            double* grow = g.weights[static_cast<std::size_t>(l)].data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) grow[i] += d * a_in[static_cast<std::size_t>(i)];
        }
        if (l == 0) break;
        std::vector<double> prev(static_cast<std::size_t>(in), 0.0);
        const double* w = m.weights[static_cast<std::size_t>(l)].data();
        for (int i = 0; i < in; ++i) {
            // ReLU pass-through only where the unit fired; derivative at 0 is 0
            if (acts[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)] <= 0.0) continue;
            double sum = 0.0;
            for (int o = 0; o < out; ++o)
                sum += w[static_cast<std::size_t>(o) * in + i] * delta[static_cast<std::size_t>(o)];
            prev[static_cast<std::size_t>(i)] = sum;
        }
        delta = std::move(prev);
    }
}

double mean_squared_error(const MlpModel& m, const SampleSet& set) {
    if (set.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (const Sample& s : set) {
        const double d = forward(m, s.features) - s.label;
        sum += d * d;
    }
    return sum / static_cast<double>(set.size());
}

struct ParamRef {
    int layer;
    bool is_bias;
    std::size_t index;
};

std::vector<ParamRef> flatten_params(const MlpModel& m) {
    std::vector<ParamRef> refs;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        for (std::size_t i = 0; i < m.weights[l].size(); ++i)
            refs.push_back({static_cast<int>(l), false, i});
        for (std::size_t i = 0; i < m.biases[l].size(); ++i)
            refs.push_back({static_cast<int>(l), true, i});
    }
    return refs;
}

constexpr char kModelMagic[8] = {'H', 'P', 'D', 'R', 'M', 'L', 'P', '\n'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("mlp load: truncated file");
}

}  // namespace

int MlpSpec::param_count() const {
    int n = 0;
    for (int l = 0; l < hidden_layers + 1; ++l) {
        const int in = l == 0 ? input_dim : hidden_width;
        const int out = l == hidden_layers ? output_dim : hidden_width;
        n += out * in + out;
    }
    return n;
}

TrainDivergence::TrainDivergence(int epoch_, int batch_)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch_) + " batch " +
                         std::to_string(batch_)),
      epoch(epoch_),
      batch(batch_) {}

MlpModel init_model(const MlpSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    MlpModel m;
    m.spec = spec;
    m.init_seed = seed;
    std::mt19937_64 gen(seed);
    const int L = num_layers(spec);
    m.weights.resize(static_cast<std::size_t>(L));
    m.biases.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
        const int in = layer_in(spec, l);
        const int out = layer_out(spec, l);
        const double bound = std::sqrt(6.0 / static_cast<double>(in));
        std::vector<double>& w = m.weights[static_cast<std::size_t>(l)];
        w.resize(static_cast<std::size_t>(out) * in);
        for (double& v : w) v = rng::uniform(gen, -bound, bound);
        m.biases[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(out), 0.0);
    }
    return m;
}

double forward(const MlpModel& m, const std::vector<double>& features) {
    validate_shapes(m);
    validate_input(m, features);
    return forward_acts(m, features, nullptr, nullptr);
}

double loss_mse(const std::vector<double>& predictions, const std::vector<double>& labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("loss_mse: size mismatch");
    if (predictions.empty()) throw std::invalid_argument("loss_mse: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - labels[i];
        sum += d * d;
    }
    return sum / static_cast<double>(predictions.size());
}

Gradients backprop_gradients(const MlpModel& m, const SampleSet& batch) {
    validate_shapes(m);
    if (batch.empty()) throw std::invalid_argument("backprop: empty batch");
    for (const Sample& s : batch) validate_input(m, s.features);
    Gradients g = zero_gradients(m);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const Sample& s : batch) accumulate_sample(m, s, inv, g);
    return g;
}

TrainReport train(MlpModel& m, const SampleSet& train_set, const SampleSet& val_set,
                  const TrainConfig& cfg) {
    validate_shapes(m);
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be at least 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch size must be at least 1");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
        throw std::invalid_argument("train: momentum must lie in [0, 1)");
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");
    for (const Sample& s : train_set) validate_input(m, s.features);
    for (const Sample& s : val_set) validate_input(m, s.features);

    const auto t0 = std::chrono::steady_clock::now();
    Gradients velocity = zero_gradients(m);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuf(cfg.seed);

    TrainReport report;
    const std::size_t n = train_set.size();
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng::shuffle(order, shuf);
        int batch_no = 0;
        for (std::size_t start = 0; start < n; start += bs) {
            ++batch_no;
            const std::size_t stop = std::min(start + bs, n);
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop));
            std::sort(idx.begin(), idx.end());
            SampleSet batch;
            batch.reserve(idx.size());
            double batch_err = 0.0;
            for (std::size_t i : idx) batch.push_back(train_set[i]);
            for (const Sample& s : batch) {
                const double d = forward_acts(m, s.features, nullptr, nullptr) - s.label;
                batch_err += d * d;
            }
            if (!std::isfinite(batch_err)) throw TrainDivergence(epoch, batch_no);
            const Gradients g = backprop_gradients(m, batch);
            for (std::size_t l = 0; l < m.weights.size(); ++l) {
                for (std::size_t i = 0; i < m.weights[l].size(); ++i) {
                    double& v = velocity.weights[l][i];
                    v = cfg.momentum * v - cfg.learning_rate * g.weights[l][i];
                    m.weights[l][i] += v;
                }
                for (std::size_t i = 0; i < m.biases[l].size(); ++i) {
                    double& v = velocity.biases[l][i];
                    v = cfg.momentum * v - cfg.learning_rate * g.biases[l][i];
                    m.biases[l][i] += v;
                }
            }
        }
        const double tr = mean_squared_error(m, train_set);
        const double va = mean_squared_error(m, val_set);
        if (!std::isfinite(tr)) throw TrainDivergence(epoch, batch_no);
        report.train_mse.push_back(tr);
        report.val_mse.push_back(va);
    }
    report.param_checksum = param_checksum(m);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

double gradient_check(const MlpModel& m, const Sample& sample, double epsilon, int max_checks,
                      std::uint64_t seed) {
    validate_shapes(m);
    validate_input(m, sample.features);
    if (!(epsilon > 0.0)) throw std::invalid_argument("gradient_check: epsilon must be positive");
    if (max_checks < 1) throw std::invalid_argument("gradient_check: max_checks must be positive");

    const Gradients analytic = backprop_gradients(m, {sample});
    std::vector<ParamRef> refs = flatten_params(m);
    if (static_cast<int>(refs.size()) > max_checks) {
        std::mt19937_64 gen(seed);
        rng::shuffle(refs, gen);
        refs.resize(static_cast<std::size_t>(max_checks));
    }

    MlpModel probe = m;
    auto param = [&probe](const ParamRef& r) -> double& {
        return r.is_bias ? probe.biases[static_cast<std::size_t>(r.layer)][r.index]
                         : probe.weights[static_cast<std::size_t>(r.layer)][r.index];
    };
    auto loss_at = [&probe, &sample](std::vector<bool>& signs) {
        signs.clear();
        const double pred = forward_acts(probe, sample.features, nullptr, &signs);
        const double d = pred - sample.label;
        return d * d;
    };

    double worst = 0.0;
    std::vector<bool> signs_hi, signs_lo;
    for (const ParamRef& r : refs) {
        double& w = param(r);
        const double orig = w;
        w = orig + epsilon;
        const double hi = loss_at(signs_hi);
        w = orig - epsilon;
        const double lo = loss_at(signs_lo);
        w = orig;
        if (signs_hi != signs_lo) continue;  // difference quotient straddles a ReLU kink
        const double fd = (hi - lo) / (2.0 * epsilon);
        const double an = r.is_bias
                              ? analytic.biases[static_cast<std::size_t>(r.layer)][r.index]
                              : analytic.weights[static_cast<std::size_t>(r.layer)][r.index];
        const double denom = std::max(std::abs(an) + std::abs(fd), 1e-8);
        worst = std::max(worst, std::abs(an - fd) / denom);
    }
    return worst;
}

std::uint64_t param_checksum(const MlpModel& m) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const std::vector<double>& v) {
        for (double d : v) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, sizeof(bits));
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xffu;
                h *= 1099511628211ull;
            }
        }
    };
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        mix(m.weights[l]);
        mix(m.biases[l]);
    }
    return h;
}

void save_model(const MlpModel& m, const std::string& path) {
    validate_shapes(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("mlp save: cannot open " + path);
    out.write(kModelMagic, sizeof(kModelMagic));
    write_pod(out, kModelVersion);
    write_pod(out, static_cast<std::uint32_t>(m.spec.input_dim));
    write_pod(out, static_cast<std::uint32_t>(m.spec.hidden_layers));
    write_pod(out, static_cast<std::uint32_t>(m.spec.hidden_width));
    write_pod(out, static_cast<std::uint32_t>(m.spec.output_dim));
    write_pod(out, m.init_seed);
    write_pod(out, m.norm_checksum);
    write_pod(out, param_checksum(m));
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        out.write(reinterpret_cast<const char*>(m.weights[l].data()),
                  static_cast<std::streamsize>(m.weights[l].size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(m.biases[l].data()),
                  static_cast<std::streamsize>(m.biases[l].size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("mlp save: write failed for " + path);
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("mlp load: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
        throw std::runtime_error("mlp load: bad magic in " + path);
    std::uint32_t version;
    read_pod(in, version);
    if (version != kModelVersion) throw std::runtime_error("mlp load: unsupported version");
    std::uint32_t in_dim, layers, width, out_dim;
    read_pod(in, in_dim);
    read_pod(in, layers);
    read_pod(in, width);
    read_pod(in, out_dim);
    if (in_dim < 1 || in_dim > 4096 || layers < 1 || layers > 64 || width < 1 || width > 4096 ||
        out_dim != 1)
        throw std::runtime_error("mlp load: implausible dimensions");
    MlpModel m;
    m.spec = {static_cast<int>(in_dim), static_cast<int>(layers), static_cast<int>(width),
              static_cast<int>(out_dim)};
    std::uint64_t stored_checksum;
    read_pod(in, m.init_seed);
    read_pod(in, m.norm_checksum);
    read_pod(in, stored_checksum);
    const int L = m.spec.hidden_layers + 1;
    m.weights.resize(static_cast<std::size_t>(L));
    m.biases.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
        const std::size_t wn = static_cast<std::size_t>(layer_out(m.spec, l)) * layer_in(m.spec, l);
        m.weights[static_cast<std::size_t>(l)].resize(wn);
        m.biases[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(layer_out(m.spec, l)));
        in.read(reinterpret_cast<char*>(m.weights[static_cast<std::size_t>(l)].data()),
                static_cast<std::streamsize>(wn * sizeof(double)));
        in.read(reinterpret_cast<char*>(m.biases[static_cast<std::size_t>(l)].data()),
                static_cast<std::streamsize>(m.biases[static_cast<std::size_t>(l)].size() * sizeof(double)));
        if (!in) throw std::runtime_error("mlp load: truncated parameters in " + path);
    }
    if (param_checksum(m) != stored_checksum)
        throw std::runtime_error("mlp load: checksum mismatch, file is corrupt");
    return m;
}

}  // namespace hpdr

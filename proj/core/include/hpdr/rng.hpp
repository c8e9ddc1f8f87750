#ifndef HPDR_RNG_HPP
#define HPDR_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

// Deterministic randomness helpers. mt19937_64 output is specified by the
// standard, but std::shuffle and the distribution classes are not, so every
// draw that has to reproduce across toolchains goes through these functions.
namespace hpdr::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable sub-seed for a named entity, e.g. derive(seed, {cluster, building}).
inline std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = seed;
    for (std::uint64_t p : path) {
        s ^= p + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        std::uint64_t tmp = s;
        s = splitmix64(tmp);
    }
    return s;
}

inline double unit_double(std::mt19937_64& gen) {
    return double(gen() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * unit_double(gen);
}

// Inclusive bounds. Modulo bias is irrelevant here; stability is not.
inline std::int64_t uniform_int(std::mt19937_64& gen, std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = std::uint64_t(hi - lo) + 1;
    return lo + std::int64_t(gen() % span);
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& gen) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = std::size_t(uniform_int(gen, 0, std::int64_t(i) - 1));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace hpdr::rng

#endif

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace imbf {

// All randomness in the library flows from one master seed through
// derive_seed(master, purpose, index). Distributions are implemented by hand
// on top of mt19937_64 because the engine is fully specified by the standard
// while <random> distributions are not; reruns must be byte-identical.

std::uint64_t splitmix64(std::uint64_t& state);

std::uint64_t fnv1a64(std::string_view s);

std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; caches the spare deviate.
    double normal();

    // Fisher-Yates, in place.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace imbf

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tiermap {

// All randomness in the project flows from one root seed through named
// substreams, so results do not depend on evaluation order or thread count.
// Streams are derived by hashing (root, id0, id1, ...) with splitmix64.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

template <typename... Ids>
std::uint64_t derive_seed(std::uint64_t root, Ids... ids) {
    std::uint64_t s = root;
    std::uint64_t h = splitmix64(s);
    auto mix = [&](std::uint64_t id) {
        s ^= id + 0x9e3779b97f4a7c15ull + (s << 6) + (s >> 2);
        h ^= splitmix64(s);
    };
    (mix(static_cast<std::uint64_t>(ids)), ...);
    return h;
}

/// Deterministic splitmix64-backed stream with uniform and Gaussian draws.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    template <typename... Ids>
    RngStream(std::uint64_t root, Ids... ids) : state_(derive_seed(root, ids...)) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    /// Index in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(next_u64() % n);
    }

    /// Standard normal via Box-Muller; two uniforms per draw, no cached spare.
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::uint64_t state_;
};

} // namespace tiermap

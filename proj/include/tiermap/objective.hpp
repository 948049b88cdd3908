// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "tiermap/errors.hpp"

namespace tiermap {

/// Minimization pair (end-to-end latency, total energy) of one candidate.
struct ObjectiveVector {
    double latency_s = 0.0;
    double energy_j = 0.0;

    std::vector<double> as_vector() const { return {latency_s, energy_j}; }

    bool operator==(const ObjectiveVector&) const = default;
};

/// Strict Pareto dominance under minimization: a <= b everywhere and a < b
/// somewhere.
inline bool dominates(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "dominates: dimension mismatch");
    bool strictly_better = false;
    for (std::size_t m = 0; m < a.size(); ++m) {
        require(std::isfinite(a[m]) && std::isfinite(b[m]), "dominates: non-finite objective");
        if (a[m] > b[m]) return false;
        if (a[m] < b[m]) strictly_better = true;
    }
    return strictly_better;
}

inline bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
    const double av[2] = {a.latency_s, a.energy_j};
    const double bv[2] = {b.latency_s, b.energy_j};
    return dominates(std::span<const double>(av, 2), std::span<const double>(bv, 2));
}

} // namespace tiermap

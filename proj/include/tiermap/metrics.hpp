// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "tiermap/errors.hpp"
#include "tiermap/objective.hpp"

namespace tiermap {

/// One mapping strategy's raw metrics. `quality` is lower-better
/// (perplexity, or 1 - accuracy for classifiers).
struct StrategyResult {
    std::string name;
    double latency_s = 0.0;
    double energy_j = 0.0;
    double quality = 0.0;

    void validate() const {
        require(std::isfinite(latency_s) && std::isfinite(energy_j) && std::isfinite(quality) &&
                    latency_s >= 0 && energy_j >= 0 && quality >= 0,
                "strategy result: metrics must be finite and non-negative");
    }
};

/// Composite latency-energy-quality score: per metric, min-max normalize
/// across the supplied strategies and sum; lower is better. A metric with
/// zero range across the set contributes 0 to everyone.
inline std::vector<double> lep_score(const std::vector<StrategyResult>& results) {
    require(results.size() >= 2, "lep_score: need at least 2 strategies");
    for (const auto& r : results) r.validate();

    std::vector<double> scores(results.size(), 0.0);
    const auto accumulate_metric = [&](auto metric) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& r : results) {
            lo = std::min(lo, metric(r));
            hi = std::max(hi, metric(r));
        }
        const double range = hi - lo;
        if (range <= 0.0) return;
        for (std::size_t i = 0; i < results.size(); ++i)
            scores[i] += (metric(results[i]) - lo) / range;
    };
    accumulate_metric([](const StrategyResult& r) { return r.latency_s; });
    accumulate_metric([](const StrategyResult& r) { return r.energy_j; });
    accumulate_metric([](const StrategyResult& r) { return r.quality; });
    return scores;
}

/// 2-D dominated area between a front and a reference point (minimization),
/// by sorted sweep. Every point must strictly dominate the reference;
/// dominated members of `front` contribute nothing.
inline double hypervolume(std::vector<ObjectiveVector> front, const ObjectiveVector& ref) {
    require(!front.empty(), "hypervolume: empty front");
    for (const auto& p : front)
        require(dominates(p, ref),
                msg_cat("hypervolume: point (", p.latency_s, ", ", p.energy_j,
                        ") does not dominate the reference point"));

    std::sort(front.begin(), front.end(), [](const ObjectiveVector& a, const ObjectiveVector& b) {
        if (a.latency_s != b.latency_s) return a.latency_s < b.latency_s;
        return a.energy_j < b.energy_j;
    });
    // Horizontal-strip sweep along the staircase; points with energy at or
    // above the running minimum are dominated and skipped.
    double hv = 0.0;
    double prev_energy = ref.energy_j;
    for (const auto& p : front) {
        if (p.energy_j >= prev_energy) continue;
        hv += (ref.latency_s - p.latency_s) * (prev_energy - p.energy_j);
        prev_energy = p.energy_j;
    }
    return hv;
}

} // namespace tiermap

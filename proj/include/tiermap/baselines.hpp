// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tiermap/allocation.hpp"
#include "tiermap/metrics.hpp"
#include "tiermap/objective.hpp"
#include "tiermap/pareto.hpp"
#include "tiermap/tier_model.hpp"
#include "tiermap/types.hpp"
#include "tiermap/workload.hpp"

namespace tiermap {

/// A reference mapping strategy evaluated for the comparison table. Invalid
/// means the tier cannot host some op kind of the workload.
struct BaselineResult {
    std::string name;
    bool valid = false;
    std::optional<Allocation> alloc;
    ObjectiveVector objectives;
};

/// All rows of every layer on `tier`, when every op kind allows it.
inline BaselineResult homogeneous_baseline(const Workload& workload,
                                           const std::vector<TierSpec>& tiers,
                                           const TierSupportMatrix& support, TierId tier) {
    BaselineResult r;
    r.name = std::string("100% ") + to_string(tier);
    for (const auto& layer : workload.layers)
        if (!support.allowed(layer.op_kind, tier)) return r; // invalid, support rule
    Allocation a;
    a.counts.resize(workload.layers.size());
    for (std::size_t l = 0; l < workload.layers.size(); ++l)
        a.counts[l][static_cast<std::size_t>(tier)] = workload.layers[l].rows;
    r.valid = true;
    r.objectives = objectives(a, workload, tiers, support);
    r.alloc = std::move(a);
    return r;
}

inline std::vector<BaselineResult> run_homogeneous_baselines(const Workload& workload,
                                                             const std::vector<TierSpec>& tiers,
                                                             const TierSupportMatrix& support) {
    std::vector<BaselineResult> out;
    for (TierId t : kAllTiers) out.push_back(homogeneous_baseline(workload, tiers, support, t));
    return out;
}

/// Rows split as evenly as possible across each layer's supported tiers
/// (largest remainder, ties to the lower tier index).
inline Allocation equal_distribution_allocation(const Workload& workload,
                                                const TierSupportMatrix& support) {
    std::vector<std::array<std::int64_t, kTierCount>> raw(workload.layers.size());
    for (auto& row : raw) row = {1, 1, 1}; // equal weights; repair zeroes unsupported
    return make_feasible(raw, workload, support);
}

inline BaselineResult run_equal_distribution(const Workload& workload,
                                             const std::vector<TierSpec>& tiers,
                                             const TierSupportMatrix& support) {
    BaselineResult r;
    r.name = "Equal Distribution";
    Allocation a = equal_distribution_allocation(workload, support);
    r.valid = true;
    r.objectives = objectives(a, workload, tiers, support);
    r.alloc = std::move(a);
    return r;
}

} // namespace tiermap

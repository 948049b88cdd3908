// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "tiermap/allocation.hpp"
#include "tiermap/errors.hpp"
#include "tiermap/pareto.hpp"
#include "tiermap/surrogate.hpp"
#include "tiermap/types.hpp"
#include "tiermap/workload.hpp"

namespace tiermap {

struct RemapConfig {
    double tau = 0.02;           // accuracy-gap bound, units of the quality metric
    std::int64_t delta = 4;      // rows shifted per iteration
    int max_iters = 10000;       // safety bound
    QualityMetric metric = QualityMetric::Accuracy;

    void validate() const {
        if (tau < 0) throw ConfigError("remap config: tau must be >= 0");
        if (delta < 1) throw ConfigError("remap config: delta must be >= 1");
        if (max_iters < 1) throw ConfigError("remap config: max_iters must be >= 1");
    }
};

/// Sorted assignment of rows to tiers: per layer, rows ranked by sensitivity
/// descending (ties by row index) fill tiers in fidelity order, so the most
/// sensitive rows land on the most accurate tiers. The per-layer histogram
/// equals the allocation.
inline RowAssignment sensitivity_sorted_assignment(const Allocation& alloc,
                                                   const SensitivityProfile& profile,
                                                   const std::vector<TierId>& order) {
    require(profile.s.size() == alloc.counts.size(),
            "sensitivity_sorted_assignment: profile/allocation layer mismatch");
    require(order.size() == kTierCount, "sensitivity_sorted_assignment: bad tier order");

    RowAssignment out;
    out.rows.resize(alloc.counts.size());
    for (std::size_t l = 0; l < alloc.counts.size(); ++l) {
        const std::int64_t r_l = alloc.layer_sum(l);
        require(profile.s[l].size() == static_cast<std::size_t>(r_l),
                msg_cat("sensitivity_sorted_assignment: layer ", l, " profile covers ",
                        profile.s[l].size(), " rows, allocation has ", r_l));
        std::vector<std::int64_t> ranked(static_cast<std::size_t>(r_l));
        std::iota(ranked.begin(), ranked.end(), 0);
        std::stable_sort(ranked.begin(), ranked.end(), [&](std::int64_t a, std::int64_t b) {
            return profile.s[l][static_cast<std::size_t>(a)] >
                   profile.s[l][static_cast<std::size_t>(b)];
        });
        out.rows[l].assign(static_cast<std::size_t>(r_l), order.front());
        std::size_t cursor = 0;
        for (TierId tier : order) {
            const std::int64_t take = alloc.counts[l][static_cast<std::size_t>(tier)];
            for (std::int64_t k = 0; k < take; ++k)
                out.rows[l][static_cast<std::size_t>(ranked[cursor++])] = tier;
        }
        require(cursor == static_cast<std::size_t>(r_l),
                "sensitivity_sorted_assignment: histogram mismatch");
    }
    return out;
}

struct RemapTraceRow {
    int iteration = 0;
    int layer = 0;
    TierId from = TierId::SRAM;
    TierId to = TierId::SRAM;
    std::int64_t delta_rows = 0;
    double quality = 0.0; // accuracy or perplexity after the iteration
    double gap = 0.0;
};

struct RemapResult {
    Allocation final;
    RowAssignment assignment;
    bool met = false;
    EvalResult last_eval;
    std::vector<RemapTraceRow> trace;
    int iterations = 0;
};

using RemapEvalFn = std::function<EvalResult(const RowAssignment&)>;

namespace detail {

/// Index into `order` of the last tier holding rows of layer l, or -1.
inline int worst_used_pos(const Allocation& a, std::size_t l, const std::vector<TierId>& order) {
    for (int pos = static_cast<int>(order.size()) - 1; pos >= 0; --pos)
        if (a.counts[l][static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] > 0)
            return pos;
    return -1;
}

/// Index into `order` of the first supported tier with headroom, or -1.
inline int best_headroom_pos(const Allocation& a, const Workload& w, std::size_t l,
                             const std::vector<TierId>& order,
                             const TierSupportMatrix& support) {
    for (int pos = 0; pos < static_cast<int>(order.size()); ++pos) {
        const TierId t = order[static_cast<std::size_t>(pos)];
        if (!support.allowed(w.layers[l].op_kind, t)) continue;
        if (a.counts[l][static_cast<std::size_t>(t)] < w.layers[l].rows) return pos;
        break; // first supported tier is full: nothing earlier to shift into
    }
    return -1;
}

/// Sum of sensitivities of the rows currently assigned to `tier` in layer l.
inline double tier_row_sensitivity_sum(const RowAssignment& asg, const SensitivityProfile& prof,
                                       std::size_t l, TierId tier) {
    double sum = 0.0;
    for (std::size_t r = 0; r < asg.rows[l].size(); ++r)
        if (asg.rows[l][r] == tier) sum += prof.s[l][r];
    return sum;
}

} // namespace detail

/// Accuracy-driven row remap: while the quality gap exceeds tau, move up to
/// `delta` rows per iteration from the worst used tier toward the best tier
/// with headroom and re-evaluate. Layers are visited in descending aggregate
/// sensitivity of their worst-tier rows; a single iteration spans tiers and
/// layers when the current worst pocket holds fewer than `delta` rows, so
/// the iteration count is bounded by ceil(sum R_l / delta). Terminates when
/// the gap closes, no legal shift remains, or max_iters is hit.
inline RemapResult remap(const Allocation& start, const Workload& workload,
                         const RemapEvalFn& evaluate, const SensitivityProfile& profile,
                         const std::vector<TierId>& order, const TierSupportMatrix& support,
                         const RemapConfig& cfg) {
    cfg.validate();
    validate_allocation(start, workload, support);
    profile.validate_against(workload);

    RemapResult res;
    res.final = start;
    res.assignment = sensitivity_sorted_assignment(res.final, profile, order);
    res.last_eval = evaluate(res.assignment);

    const auto gap = [&] { return quality_gap(res.last_eval, cfg.metric); };
    if (gap() <= cfg.tau) {
        res.met = true;
        return res;
    }

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        // One iteration moves up to delta rows worst-to-best, spanning
        // pockets when needed. Records one trace row per (layer, from, to).
        std::int64_t budget = cfg.delta;
        std::vector<RemapTraceRow> moves;
        while (budget > 0) {
            // Most sensitive worst-tier pocket first.
            int pick_layer = -1;
            int pick_worst = -1;
            int pick_best = -1;
            double pick_score = 0.0;
            for (std::size_t l = 0; l < workload.layers.size(); ++l) {
                const int worst = detail::worst_used_pos(res.final, l, order);
                const int best = detail::best_headroom_pos(res.final, workload, l, order, support);
                if (worst < 0 || best < 0 || best >= worst) continue;
                const double score = detail::tier_row_sensitivity_sum(
                    res.assignment, profile, l, order[static_cast<std::size_t>(worst)]);
                if (pick_layer < 0 || score > pick_score) {
                    pick_layer = static_cast<int>(l);
                    pick_worst = worst;
                    pick_best = best;
                    pick_score = score;
                }
            }
            if (pick_layer < 0) break; // no legal shift anywhere

            const TierId from = order[static_cast<std::size_t>(pick_worst)];
            const TierId to = order[static_cast<std::size_t>(pick_best)];
            const auto l = static_cast<std::size_t>(pick_layer);
            const std::int64_t moved =
                std::min(budget, res.final.counts[l][static_cast<std::size_t>(from)]);
            res.final.counts[l][static_cast<std::size_t>(from)] -= moved;
            res.final.counts[l][static_cast<std::size_t>(to)] += moved;
            budget -= moved;
            res.assignment = sensitivity_sorted_assignment(res.final, profile, order);
            moves.push_back({iter, pick_layer, from, to, moved, 0.0, 0.0});
        }
        if (moves.empty()) break; // nothing left to shift; met stays false

        validate_allocation(res.final, workload, support);
        res.last_eval = evaluate(res.assignment);
        res.iterations = iter;
        const double quality = cfg.metric == QualityMetric::Accuracy ? res.last_eval.accuracy
                                                                     : res.last_eval.perplexity;
        for (auto& m : moves) {
            m.quality = quality;
            m.gap = gap();
            res.trace.push_back(m);
        }
        if (gap() <= cfg.tau) break;
    }

    res.met = gap() <= cfg.tau;
    return res;
}

// ---------------------------------------------------------------------------
// Front screening (bridges stage 1 to stage 2)
// ---------------------------------------------------------------------------

struct ScreenedMember {
    Allocation alloc;
    ObjectiveVector objectives;
    RowAssignment assignment;
    EvalResult eval;
};

/// Evaluates every front member under its sensitivity-sorted assignment and
/// returns the best-accuracy one plus whether it already meets tau. Members
/// are visited in deterministic (latency, energy, genome) order and share
/// one evaluation seed so the comparison is apples to apples. When
/// `all_evals` is given it receives one result per member in that order.
inline std::pair<ScreenedMember, bool> select_best_accuracy(
    const FrontArchive& front, const RemapEvalFn& evaluate, const SensitivityProfile& profile,
    const std::vector<TierId>& order, double tau, QualityMetric metric,
    std::vector<EvalResult>* all_evals = nullptr) {
    require(!front.members.empty(), "select_best_accuracy: empty front");

    std::vector<const FrontMember*> ordered;
    for (const auto& m : front.members) ordered.push_back(&m);
    std::sort(ordered.begin(), ordered.end(), [](const FrontMember* a, const FrontMember* b) {
        if (a->objectives.latency_s != b->objectives.latency_s)
            return a->objectives.latency_s < b->objectives.latency_s;
        if (a->objectives.energy_j != b->objectives.energy_j)
            return a->objectives.energy_j < b->objectives.energy_j;
        return allocation_less(a->alloc, b->alloc);
    });

    ScreenedMember best;
    bool have_best = false;
    for (const FrontMember* m : ordered) {
        ScreenedMember cur;
        cur.alloc = m->alloc;
        cur.objectives = m->objectives;
        cur.assignment = sensitivity_sorted_assignment(m->alloc, profile, order);
        cur.eval = evaluate(cur.assignment);
        if (all_evals) all_evals->push_back(cur.eval);
        const bool better =
            !have_best ||
            (metric == QualityMetric::Accuracy ? cur.eval.accuracy > best.eval.accuracy
                                               : cur.eval.perplexity < best.eval.perplexity);
        if (better) {
            best = std::move(cur);
            have_best = true;
        }
    }
    const bool met = quality_gap(best.eval, metric) <= tau;
    return {best, met};
}

} // namespace tiermap

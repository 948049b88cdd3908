// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "tiermap/allocation.hpp"
#include "tiermap/errors.hpp"
#include "tiermap/metrics.hpp"
#include "tiermap/objective.hpp"
#include "tiermap/rng.hpp"
#include "tiermap/tier_model.hpp"
#include "tiermap/types.hpp"
#include "tiermap/workload.hpp"

namespace tiermap {

struct SearchConfig {
    int population = 40;
    int generations = 50;
    double crossover_rate = 0.9;
    double mutation_rate = 0.3;
    std::uint64_t seed = 1;
    int mutation_step = 4; // max rows moved per mutation

    void validate() const {
        if (population < 4 || population % 2 != 0)
            throw ConfigError("search config: population must be even and >= 4");
        if (generations < 1) throw ConfigError("search config: generations must be >= 1");
        if (crossover_rate < 0 || crossover_rate > 1 || mutation_rate < 0 || mutation_rate > 1)
            throw ConfigError("search config: rates must be in [0,1]");
        if (mutation_step < 1) throw ConfigError("search config: mutation_step must be >= 1");
    }
};

struct GenStats {
    int generation = 0;
    double best_latency_s = 0.0;
    double best_energy_j = 0.0;
    double hypervolume = 0.0;
};

struct FrontMember {
    Allocation alloc;
    ObjectiveVector objectives;
};

struct FrontArchive {
    std::vector<FrontMember> members;
    std::vector<GenStats> generation_log;
    ObjectiveVector hv_reference; // fixed from the initial population
};

// ---------------------------------------------------------------------------
// Objectives: Eq-of-motion of the whole search. Layer latency is gated by
// its slowest share; energies add across layers and tiers.
// ---------------------------------------------------------------------------

inline ObjectiveVector objectives(const Allocation& alloc, const Workload& workload,
                                  const std::vector<TierSpec>& tiers,
                                  const TierSupportMatrix& support) {
    validate_allocation(alloc, workload, support);
    ObjectiveVector o;
    for (std::size_t l = 0; l < workload.layers.size(); ++l) {
        double layer_latency = 0.0;
        for (std::size_t i = 0; i < kTierCount; ++i) {
            const CostBreakdown c = tier_cost(tiers[i], workload.layers[l], alloc.counts[l][i]);
            layer_latency = std::max(layer_latency, c.latency_s());
            o.energy_j += c.energy_j();
        }
        o.latency_s += layer_latency;
    }
    return o;
}

// ---------------------------------------------------------------------------
// Non-dominated sorting and crowding distance
// ---------------------------------------------------------------------------

/// Fast non-dominated sort (domination counts); returns fronts of indices,
/// best first. Every input index appears in exactly one front.
inline std::vector<std::vector<int>> non_dominated_sort(
    const std::vector<std::vector<double>>& points) {
    require(!points.empty(), "non_dominated_sort: empty input");
    const int n = static_cast<int>(points.size());
    std::vector<std::vector<int>> dominated_by(n);
    std::vector<int> domination_count(n, 0);
    for (int p = 0; p < n; ++p) {
        for (int q = p + 1; q < n; ++q) {
            if (dominates(points[p], points[q])) {
                dominated_by[p].push_back(q);
                ++domination_count[q];
            } else if (dominates(points[q], points[p])) {
                dominated_by[q].push_back(p);
                ++domination_count[p];
            }
        }
    }
    std::vector<std::vector<int>> fronts;
    std::vector<int> current;
    for (int p = 0; p < n; ++p)
        if (domination_count[p] == 0) current.push_back(p);
    while (!current.empty()) {
        fronts.push_back(current);
        std::vector<int> next;
        for (int p : current)
            for (int q : dominated_by[p])
                if (--domination_count[q] == 0) next.push_back(q);
        std::sort(next.begin(), next.end());
        current = std::move(next);
    }
    return fronts;
}

inline std::vector<std::vector<int>> non_dominated_sort(
    const std::vector<ObjectiveVector>& points) {
    std::vector<std::vector<double>> raw(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) raw[i] = points[i].as_vector();
    return non_dominated_sort(raw);
}

/// NSGA-II crowding distance within one front. Boundary members per
/// objective get +infinity; interiors accumulate normalized neighbor gaps.
/// An objective with zero range over the front contributes nothing.
inline std::vector<double> crowding_distance(const std::vector<std::vector<double>>& front) {
    require(!front.empty(), "crowding_distance: empty front");
    const std::size_t n = front.size();
    const std::size_t m = front.front().size();
    std::vector<double> dist(n, 0.0);
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t obj = 0; obj < m; ++obj) {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return front[a][obj] < front[b][obj]; });
        dist[order.front()] = inf;
        dist[order.back()] = inf;
        const double range = front[order.back()][obj] - front[order.front()][obj];
        if (range <= 0.0) continue;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            if (dist[order[k]] == inf) continue;
            dist[order[k]] += (front[order[k + 1]][obj] - front[order[k - 1]][obj]) / range;
        }
    }
    return dist;
}

inline std::vector<double> crowding_distance(const std::vector<ObjectiveVector>& front) {
    std::vector<std::vector<double>> raw(front.size());
    for (std::size_t i = 0; i < front.size(); ++i) raw[i] = front[i].as_vector();
    return crowding_distance(raw);
}

// ---------------------------------------------------------------------------
// Genome repair and variation operators
// ---------------------------------------------------------------------------

namespace detail {

/// Largest-remainder split of `total` proportional to non-negative weights;
/// remainder units go to the largest fractional parts, ties to the lowest
/// index. Zero weight stays zero unless all weights are zero, in which case
/// units spread evenly across `eligible`.
inline std::array<std::int64_t, kTierCount> largest_remainder_split(
    std::array<double, kTierCount> weights, const std::array<bool, kTierCount>& eligible,
    std::int64_t total) {
    double wsum = 0.0;
    for (std::size_t i = 0; i < kTierCount; ++i) {
        if (!eligible[i]) weights[i] = 0.0;
        wsum += weights[i];
    }
    if (wsum <= 0.0) {
        for (std::size_t i = 0; i < kTierCount; ++i) weights[i] = eligible[i] ? 1.0 : 0.0;
        wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
        require(wsum > 0.0, "largest_remainder_split: no eligible tier");
    }

    std::array<std::int64_t, kTierCount> counts{};
    std::array<double, kTierCount> frac{};
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < kTierCount; ++i) {
        const double quota = weights[i] * static_cast<double>(total) / wsum;
        counts[i] = static_cast<std::int64_t>(std::floor(quota));
        frac[i] = quota - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    std::array<int, kTierCount> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    for (std::int64_t left = total - assigned; left > 0; --left)
        ++counts[static_cast<std::size_t>(order[static_cast<std::size_t>(total - assigned - left)])];
    return counts;
}

} // namespace detail

/// Repairs an arbitrary integer matrix into a feasible Allocation: negative
/// and unsupported cells are zeroed, then each layer is rescaled to sum R_l
/// by largest-remainder rounding. Idempotent on feasible input.
inline Allocation make_feasible(const std::vector<std::array<std::int64_t, kTierCount>>& raw,
                                const Workload& workload, const TierSupportMatrix& support) {
    require(raw.size() == workload.layers.size(), "make_feasible: layer count mismatch");
    Allocation out;
    out.counts.resize(raw.size());
    for (std::size_t l = 0; l < raw.size(); ++l) {
        const LayerSpec& layer = workload.layers[l];
        std::array<bool, kTierCount> eligible{};
        std::array<double, kTierCount> weights{};
        bool any = false;
        for (std::size_t i = 0; i < kTierCount; ++i) {
            eligible[i] = support.allowed(layer.op_kind, static_cast<TierId>(i));
            any = any || eligible[i];
            weights[i] = static_cast<double>(std::max<std::int64_t>(raw[l][i], 0));
        }
        require(any, msg_cat("make_feasible: layer \"", layer.name, "\" has no supported tier"));
        out.counts[l] = detail::largest_remainder_split(weights, eligible, layer.rows);
    }
    validate_allocation(out, workload, support);
    return out;
}

/// Per-layer uniform exchange with probability p_co; children are repaired.
inline std::pair<Allocation, Allocation> crossover(const Allocation& parent_a,
                                                   const Allocation& parent_b, double p_co,
                                                   const Workload& workload,
                                                   const TierSupportMatrix& support,
                                                   RngStream& rng) {
    require(parent_a.counts.size() == parent_b.counts.size(), "crossover: parent mismatch");
    Allocation child_a = parent_a;
    Allocation child_b = parent_b;
    if (rng.uniform() < p_co) {
        for (std::size_t l = 0; l < child_a.counts.size(); ++l)
            if (rng.uniform() < 0.5) std::swap(child_a.counts[l], child_b.counts[l]);
    }
    return {make_feasible(child_a.counts, workload, support),
            make_feasible(child_b.counts, workload, support)};
}

/// Each layer independently, with probability p_mu, moves
/// k ~ Uniform{1..mutation_step} rows (capped by the source count) from one
/// supported tier with positive count to another supported tier.
inline Allocation mutate(const Allocation& alloc, const Workload& workload,
                         const TierSupportMatrix& support, double p_mu, int mutation_step,
                         RngStream& rng) {
    Allocation out = alloc;
    for (std::size_t l = 0; l < out.counts.size(); ++l) {
        if (rng.uniform() >= p_mu) continue;
        const auto tiers = supported_tiers(workload.layers[l], support);
        if (tiers.size() < 2) continue; // no legal move
        std::vector<TierId> sources;
        for (TierId t : tiers)
            if (out.counts[l][static_cast<std::size_t>(t)] > 0) sources.push_back(t);
        const TierId src = sources[rng.index(sources.size())];
        std::vector<TierId> dests;
        for (TierId t : tiers)
            if (t != src) dests.push_back(t);
        const TierId dst = dests[rng.index(dests.size())];
        const std::int64_t k = rng.uniform_int(1, mutation_step);
        const std::int64_t moved = std::min(k, out.counts[l][static_cast<std::size_t>(src)]);
        out.counts[l][static_cast<std::size_t>(src)] -= moved;
        out.counts[l][static_cast<std::size_t>(dst)] += moved;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evolution loop
// ---------------------------------------------------------------------------

namespace detail {

/// Uniform composition of `total` over the supported tiers (stars and bars).
inline std::array<std::int64_t, kTierCount> random_composition(const std::vector<TierId>& tiers,
                                                               std::int64_t total,
                                                               RngStream& rng) {
    std::vector<std::int64_t> cuts;
    for (std::size_t i = 0; i + 1 < tiers.size(); ++i) cuts.push_back(rng.uniform_int(0, total));
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(total);
    std::array<std::int64_t, kTierCount> counts{};
    std::int64_t prev = 0;
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        counts[static_cast<std::size_t>(tiers[i])] = cuts[i] - prev;
        prev = cuts[i];
    }
    return counts;
}

inline Allocation random_allocation(const Workload& workload, const TierSupportMatrix& support,
                                    int style, RngStream& rng) {
    Allocation a;
    a.counts.resize(workload.layers.size());
    for (std::size_t l = 0; l < workload.layers.size(); ++l) {
        const LayerSpec& layer = workload.layers[l];
        const auto tiers = supported_tiers(layer, support);
        switch (style) {
            case 0: // uniform-random feasible
                a.counts[l] = random_composition(tiers, layer.rows, rng);
                break;
            case 1: { // homogeneous per layer
                const TierId t = tiers[rng.index(tiers.size())];
                a.counts[l] = {};
                a.counts[l][static_cast<std::size_t>(t)] = layer.rows;
                break;
            }
            default: { // Dirichlet-weighted split
                std::array<double, kTierCount> w{};
                std::array<bool, kTierCount> eligible{};
                for (TierId t : tiers) {
                    eligible[static_cast<std::size_t>(t)] = true;
                    w[static_cast<std::size_t>(t)] = -std::log(1.0 - rng.uniform());
                }
                a.counts[l] = largest_remainder_split(w, eligible, layer.rows);
            }
        }
    }
    validate_allocation(a, workload, support);
    return a;
}

struct RankedPopulation {
    std::vector<int> rank;
    std::vector<double> crowding;
};

inline RankedPopulation rank_population(const std::vector<std::vector<double>>& objs) {
    RankedPopulation rp;
    rp.rank.assign(objs.size(), 0);
    rp.crowding.assign(objs.size(), 0.0);
    const auto fronts = non_dominated_sort(objs);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        std::vector<std::vector<double>> pts;
        for (int idx : fronts[f]) pts.push_back(objs[static_cast<std::size_t>(idx)]);
        const auto cd = crowding_distance(pts);
        for (std::size_t k = 0; k < fronts[f].size(); ++k) {
            rp.rank[static_cast<std::size_t>(fronts[f][k])] = static_cast<int>(f);
            rp.crowding[static_cast<std::size_t>(fronts[f][k])] = cd[k];
        }
    }
    return rp;
}

} // namespace detail

/// Multi-objective evolution over feasible allocations; generic in the
/// number of objectives so the latency+energy(+quality) modes share one
/// loop. Returns the final first front and the per-generation log.
struct GenericFront {
    std::vector<std::pair<Allocation, std::vector<double>>> members;
    std::vector<GenStats> generation_log;
    ObjectiveVector hv_reference;
};

inline GenericFront evolve_generic(
    const Workload& workload, const TierSupportMatrix& support, const SearchConfig& cfg,
    const std::function<std::vector<double>(const Allocation&)>& objective_fn) {
    cfg.validate();
    const int n = cfg.population;

    std::vector<Allocation> pop;
    pop.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        RngStream rng(cfg.seed, 0x494e49u, static_cast<std::uint64_t>(i));
        pop.push_back(detail::random_allocation(workload, support, i % 3, rng));
    }
    std::vector<std::vector<double>> objs(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) objs[i] = objective_fn(pop[i]);

    // Fixed hypervolume reference from the initial population; points
    // escaping it later simply stop contributing to the logged indicator.
    ObjectiveVector ref{0.0, 0.0};
    for (const auto& o : objs) {
        ref.latency_s = std::max(ref.latency_s, o[0]);
        ref.energy_j = std::max(ref.energy_j, o[1]);
    }
    ref.latency_s *= 1.05;
    ref.energy_j *= 1.05;

    const auto log_generation = [&](int gen) {
        GenStats g;
        g.generation = gen;
        g.best_latency_s = std::numeric_limits<double>::infinity();
        g.best_energy_j = std::numeric_limits<double>::infinity();
        for (const auto& o : objs) {
            g.best_latency_s = std::min(g.best_latency_s, o[0]);
            g.best_energy_j = std::min(g.best_energy_j, o[1]);
        }
        std::vector<ObjectiveVector> in_box;
        const auto fronts = detail::rank_population(objs);
        for (std::size_t i = 0; i < objs.size(); ++i) {
            const ObjectiveVector p{objs[i][0], objs[i][1]};
            if (fronts.rank[i] == 0 && dominates(p, ref)) in_box.push_back(p);
        }
        g.hypervolume = in_box.empty() ? 0.0 : hypervolume(in_box, ref);
        return g;
    };

    std::vector<GenStats> log;
    log.push_back(log_generation(0));

    for (int gen = 1; gen <= cfg.generations; ++gen) {
        const auto ranked = detail::rank_population(objs);
        RngStream var_rng(cfg.seed, 0x47454eu, static_cast<std::uint64_t>(gen));

        const auto crowded_less = [&](int a, int b) {
            // "a better than b" under the crowded-comparison operator
            const auto ia = static_cast<std::size_t>(a);
            const auto ib = static_cast<std::size_t>(b);
            if (ranked.rank[ia] != ranked.rank[ib]) return ranked.rank[ia] < ranked.rank[ib];
            if (ranked.crowding[ia] != ranked.crowding[ib])
                return ranked.crowding[ia] > ranked.crowding[ib];
            return allocation_less(pop[ia], pop[ib]);
        };
        const auto tournament = [&]() {
            const int a = static_cast<int>(var_rng.index(pop.size()));
            const int b = static_cast<int>(var_rng.index(pop.size()));
            return crowded_less(a, b) ? a : b;
        };

        std::vector<Allocation> offspring;
        offspring.reserve(static_cast<std::size_t>(n));
        while (static_cast<int>(offspring.size()) < n) {
            const Allocation& pa = pop[static_cast<std::size_t>(tournament())];
            const Allocation& pb = pop[static_cast<std::size_t>(tournament())];
            auto [ca, cb] = crossover(pa, pb, cfg.crossover_rate, workload, support, var_rng);
            ca = mutate(ca, workload, support, cfg.mutation_rate, cfg.mutation_step, var_rng);
            cb = mutate(cb, workload, support, cfg.mutation_rate, cfg.mutation_step, var_rng);
            validate_allocation(ca, workload, support);
            validate_allocation(cb, workload, support);
            offspring.push_back(std::move(ca));
            offspring.push_back(std::move(cb));
        }

        std::vector<Allocation> combined = pop;
        combined.insert(combined.end(), offspring.begin(), offspring.end());
        std::vector<std::vector<double>> combined_objs = objs;
        for (const auto& child : offspring) combined_objs.push_back(objective_fn(child));

        const auto fronts = non_dominated_sort(combined_objs);
        std::vector<Allocation> next_pop;
        std::vector<std::vector<double>> next_objs;
        for (const auto& front : fronts) {
            if (static_cast<int>(next_pop.size()) + static_cast<int>(front.size()) <= n) {
                for (int idx : front) {
                    next_pop.push_back(combined[static_cast<std::size_t>(idx)]);
                    next_objs.push_back(combined_objs[static_cast<std::size_t>(idx)]);
                }
            } else {
                std::vector<std::vector<double>> pts;
                for (int idx : front) pts.push_back(combined_objs[static_cast<std::size_t>(idx)]);
                const auto cd = crowding_distance(pts);
                std::vector<std::size_t> order(front.size());
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    if (cd[a] != cd[b]) return cd[a] > cd[b];
                    return allocation_less(combined[static_cast<std::size_t>(front[a])],
                                           combined[static_cast<std::size_t>(front[b])]);
                });
                for (std::size_t k = 0; static_cast<int>(next_pop.size()) < n; ++k) {
                    next_pop.push_back(combined[static_cast<std::size_t>(front[order[k]])]);
                    next_objs.push_back(combined_objs[static_cast<std::size_t>(front[order[k]])]);
                }
                break;
            }
            if (static_cast<int>(next_pop.size()) == n) break;
        }
        pop = std::move(next_pop);
        objs = std::move(next_objs);
        log.push_back(log_generation(gen));
    }

    GenericFront result;
    result.generation_log = std::move(log);
    result.hv_reference = ref;
    const auto fronts = non_dominated_sort(objs);
    for (int idx : fronts.front()) {
        const auto& alloc = pop[static_cast<std::size_t>(idx)];
        const bool duplicate = std::any_of(
            result.members.begin(), result.members.end(),
            [&](const auto& m) { return m.first == alloc; });
        if (!duplicate)
            result.members.emplace_back(alloc, objs[static_cast<std::size_t>(idx)]);
    }
    std::sort(result.members.begin(), result.members.end(), [](const auto& a, const auto& b) {
        if (a.second[0] != b.second[0]) return a.second[0] < b.second[0];
        if (a.second[1] != b.second[1]) return a.second[1] < b.second[1];
        return allocation_less(a.first, b.first);
    });
    return result;
}

/// Stage-1 search: NSGA-II over (latency, energy).
inline FrontArchive evolve(const Workload& workload, const std::vector<TierSpec>& tiers,
                           const TierSupportMatrix& support, const SearchConfig& cfg) {
    const auto fn = [&](const Allocation& a) {
        return objectives(a, workload, tiers, support).as_vector();
    };
    GenericFront generic = evolve_generic(workload, support, cfg, fn);
    FrontArchive archive;
    archive.generation_log = std::move(generic.generation_log);
    archive.hv_reference = generic.hv_reference;
    for (auto& [alloc, objs] : generic.members)
        archive.members.push_back({std::move(alloc), ObjectiveVector{objs[0], objs[1]}});
    return archive;
}

} // namespace tiermap

// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tiermap/remap.hpp"
#include "tiermap/rng.hpp"

using namespace tiermap;

namespace {

const std::vector<TierId> kOrder = {TierId::SRAM, TierId::ReRAM, TierId::Photonic};

Workload small_workload(std::vector<std::int64_t> rows, bool dynamic_last = false) {
    Workload w;
    w.name = "small";
    for (std::size_t l = 0; l < rows.size(); ++l) {
        const bool dyn = dynamic_last && l + 1 == rows.size();
        w.layers.push_back({"l" + std::to_string(l),
                            dyn ? OpKind::DynamicMatmul : OpKind::Linear, rows[l], 4, 1, dyn});
    }
    return w;
}

SensitivityProfile uniform_profile(const Workload& w, double value = 1.0) {
    SensitivityProfile p;
    p.num_probes = 1;
    p.perturb_std = 1.0;
    for (const auto& l : w.layers)
        p.s.emplace_back(static_cast<std::size_t>(l.rows), value);
    return p;
}

/// Fake quality model: accuracy drops linearly with rows on noisy tiers.
RemapEvalFn linear_quality_eval(double photonic_cost = 0.005, double reram_cost = 0.001) {
    return [=](const RowAssignment& a) {
        EvalResult r;
        double penalty = 0.0;
        for (std::size_t l = 0; l < a.rows.size(); ++l)
            for (TierId t : a.rows[l]) {
                if (t == TierId::Photonic) penalty += photonic_cost;
                if (t == TierId::ReRAM) penalty += reram_cost;
            }
        r.acc0 = 1.0;
        r.accuracy = 1.0 - penalty;
        r.gap = r.acc0 - r.accuracy;
        r.perplexity = 1.0 + penalty;
        r.ppl0 = 1.0;
        r.ppl_gap = penalty;
        r.loss = penalty;
        return r;
    };
}

} // namespace

TEST_CASE("sensitivity-sorted assignment") {
    SECTION("documented example: counts (2,1,0), sensitivities [0.9, 0.1, 0.5]") {
        const Workload w = small_workload({3});
        SensitivityProfile prof;
        prof.s = {{0.9, 0.1, 0.5}};
        Allocation a;
        a.counts = {{2, 1, 0}};
        const RowAssignment asg = sensitivity_sorted_assignment(a, prof, kOrder);
        CHECK(asg.rows[0][0] == TierId::SRAM);
        CHECK(asg.rows[0][2] == TierId::SRAM);
        CHECK(asg.rows[0][1] == TierId::ReRAM);
        CHECK(asg.histogram(0) == std::array<std::int64_t, 3>{2, 1, 0});
    }
    SECTION("uniform sensitivities fall back to ascending row order") {
        const Workload w = small_workload({5});
        const SensitivityProfile prof = uniform_profile(w);
        Allocation a;
        a.counts = {{2, 2, 1}};
        const RowAssignment asg = sensitivity_sorted_assignment(a, prof, kOrder);
        const std::vector<TierId> expect = {TierId::SRAM, TierId::SRAM, TierId::ReRAM,
                                            TierId::ReRAM, TierId::Photonic};
        CHECK(asg.rows[0] == expect);
        // deterministic: same call, same answer
        CHECK(sensitivity_sorted_assignment(a, prof, kOrder) == asg);
    }
    SECTION("single-tier allocation ignores sensitivities") {
        const Workload w = small_workload({4});
        SensitivityProfile prof;
        prof.s = {{0.1, 0.9, 0.4, 0.7}};
        Allocation a;
        a.counts = {{0, 0, 4}};
        const RowAssignment asg = sensitivity_sorted_assignment(a, prof, kOrder);
        for (TierId t : asg.rows[0]) CHECK(t == TierId::Photonic);
    }
    SECTION("histogram mismatch is a contract error") {
        const Workload w = small_workload({3});
        SensitivityProfile prof;
        prof.s = {{0.9, 0.1}}; // short profile
        Allocation a;
        a.counts = {{3, 0, 0}};
        CHECK_THROWS_AS(sensitivity_sorted_assignment(a, prof, kOrder), ContractError);
    }
}

TEST_CASE("remap terminal behaviors") {
    const TierSupportMatrix support = default_support_matrix();

    SECTION("start already within tau runs zero iterations") {
        const Workload w = small_workload({5, 5});
        const SensitivityProfile prof = uniform_profile(w);
        Allocation start;
        start.counts = {{5, 0, 0}, {5, 0, 0}};
        const RemapResult res = remap(start, w, linear_quality_eval(), prof, kOrder, support,
                                      RemapConfig{0.02, 2, 100, QualityMetric::Accuracy});
        CHECK(res.met);
        CHECK(res.iterations == 0);
        CHECK(res.final == start);
        CHECK(res.trace.empty());
    }
    SECTION("everything on the best tier with gap > tau: no shift possible") {
        const Workload w = small_workload({5, 5});
        const SensitivityProfile prof = uniform_profile(w);
        Allocation start;
        start.counts = {{5, 0, 0}, {5, 0, 0}};
        // impossible evaluator: permanent gap even on clean tiers
        const RemapEvalFn stuck = [](const RowAssignment&) {
            EvalResult r;
            r.acc0 = 1.0;
            r.accuracy = 0.5;
            r.gap = 0.5;
            return r;
        };
        const RemapResult res = remap(start, w, stuck, prof, kOrder, support,
                                      RemapConfig{0.02, 2, 100, QualityMetric::Accuracy});
        CHECK_FALSE(res.met);
        CHECK(res.final == start);
        CHECK(res.iterations == 0);
    }
    SECTION("all-photonic start recovers by shifting toward SRAM") {
        const Workload w = small_workload({5, 5, 5});
        const SensitivityProfile prof = uniform_profile(w);
        Allocation start;
        start.counts = {{0, 0, 5}, {0, 0, 5}, {0, 0, 5}};
        const RemapResult res = remap(start, w, linear_quality_eval(0.005, 0.001), prof, kOrder,
                                      support, RemapConfig{0.02, 2, 100, QualityMetric::Accuracy});
        CHECK(res.met);
        CHECK(res.last_eval.gap <= 0.02);
        const auto totals = res.final.tier_totals();
        CHECK(totals[static_cast<std::size_t>(TierId::Photonic)] < 15);
        CHECK(totals[static_cast<std::size_t>(TierId::SRAM)] > 0);
        // trace is worst-to-best only
        for (const auto& row : res.trace) CHECK(row.from == TierId::Photonic);
    }
}

TEST_CASE("remap respects tier support") {
    const TierSupportMatrix support = default_support_matrix();
    const Workload w = small_workload({6, 6}, /*dynamic_last=*/true);
    const SensitivityProfile prof = uniform_profile(w);
    Allocation start;
    start.counts = {{0, 0, 6}, {0, 0, 6}}; // layer 1 is dynamic: ReRAM forbidden
    const RemapResult res = remap(start, w, linear_quality_eval(0.01, 0.0), prof, kOrder,
                                  support, RemapConfig{0.0, 3, 100, QualityMetric::Accuracy});
    validate_allocation(res.final, w, support);
    CHECK(res.final.counts[1][static_cast<std::size_t>(TierId::ReRAM)] == 0);
    CHECK(res.met); // tau 0 reachable: everything migrates to SRAM
    for (const auto& l : res.final.counts)
        CHECK(l[static_cast<std::size_t>(TierId::SRAM)] == 6);
}

TEST_CASE("fuzzed remap runs hold the structural invariants") {
    const TierSupportMatrix support = default_support_matrix();
    RngStream rng(8080);
    for (int run = 0; run < 30; ++run) {
        const int layers = 1 + static_cast<int>(rng.index(4));
        std::vector<std::int64_t> rows;
        for (int l = 0; l < layers; ++l) rows.push_back(1 + static_cast<std::int64_t>(rng.index(12)));
        const bool with_dynamic = rng.uniform() < 0.4;
        const Workload w = small_workload(rows, with_dynamic);

        SensitivityProfile prof;
        for (const auto& l : w.layers) {
            std::vector<double> s(static_cast<std::size_t>(l.rows));
            for (double& v : s) v = rng.uniform();
            prof.s.push_back(std::move(s));
        }

        std::vector<std::array<std::int64_t, kTierCount>> raw(w.layers.size());
        for (auto& row : raw)
            for (auto& c : row) c = static_cast<std::int64_t>(rng.index(8));
        const Allocation start = make_feasible(raw, w, support);

        const double tau = rng.uniform() * 0.05;
        const std::int64_t delta = 1 + static_cast<std::int64_t>(rng.index(6));
        const std::uint64_t quality_seed = rng.next_u64();
        // arbitrary but deterministic quality as a function of the histogram
        const RemapEvalFn eval = [quality_seed](const RowAssignment& a) {
            std::uint64_t h = quality_seed;
            for (std::size_t l = 0; l < a.rows.size(); ++l)
                for (TierId t : a.rows[l]) h = h * 1099511628211ull + static_cast<std::uint64_t>(t);
            double noisy_rows = 0;
            for (std::size_t l = 0; l < a.rows.size(); ++l)
                for (TierId t : a.rows[l]) noisy_rows += t == TierId::SRAM ? 0.0 : 1.0;
            EvalResult r;
            r.acc0 = 1.0;
            r.accuracy = 1.0 - 0.002 * noisy_rows - 1e-4 * static_cast<double>(h % 97);
            r.gap = r.acc0 - r.accuracy;
            return r;
        };

        const RemapResult res = remap(start, w, eval, prof, kOrder, support,
                                      RemapConfig{tau, delta, 100000, QualityMetric::Accuracy});

        // replay the trace against the start allocation
        Allocation replay = start;
        auto totals_in_order = [&](const Allocation& a) {
            std::array<std::int64_t, kTierCount> t{};
            const auto raw_totals = a.tier_totals();
            for (std::size_t i = 0; i < kOrder.size(); ++i)
                t[i] = raw_totals[static_cast<std::size_t>(kOrder[i])];
            return t;
        };
        auto prev_totals = totals_in_order(replay);
        int max_iteration = 0;
        for (const auto& mv : res.trace) {
            const auto l = static_cast<std::size_t>(mv.layer);
            replay.counts[l][static_cast<std::size_t>(mv.from)] -= mv.delta_rows;
            replay.counts[l][static_cast<std::size_t>(mv.to)] += mv.delta_rows;
            // row conservation after every shift
            for (std::size_t ll = 0; ll < w.layers.size(); ++ll)
                REQUIRE(replay.layer_sum(ll) == w.layers[ll].rows);
            // strictly worst-to-best in fidelity order
            const auto pos = [&](TierId t) {
                return std::find(kOrder.begin(), kOrder.end(), t) - kOrder.begin();
            };
            REQUIRE(pos(mv.to) < pos(mv.from));
            // per-tier totals in fidelity order are lexicographically non-decreasing
            const auto now = totals_in_order(replay);
            REQUIRE(now >= prev_totals);
            prev_totals = now;
            max_iteration = std::max(max_iteration, mv.iteration);
        }
        REQUIRE(replay == res.final);
        validate_allocation(res.final, w, support);

        const std::int64_t total_rows = w.total_rows();
        const auto bound = static_cast<int>((total_rows + delta - 1) / delta);
        CHECK(res.iterations <= bound);
        CHECK(max_iteration <= bound);
        if (res.met) CHECK(res.last_eval.gap <= tau);
    }
}

// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "tiermap/baselines.hpp"
#include "tiermap/remap.hpp"

using namespace tiermap;

namespace {

Workload one_layer(std::int64_t rows, OpKind op = OpKind::Linear) {
    Workload w;
    w.name = "one";
    w.layers.push_back({"l0", op, rows, 4, 1, op == OpKind::DynamicMatmul});
    return w;
}

} // namespace

TEST_CASE("equal distribution splits") {
    const TierSupportMatrix support = default_support_matrix();
    SECTION("9 rows over 3 supported tiers") {
        const Allocation a = equal_distribution_allocation(one_layer(9), support);
        CHECK(a.counts[0] == std::array<std::int64_t, 3>{3, 3, 3});
    }
    SECTION("10 rows over 3: first tier takes the remainder") {
        const Allocation a = equal_distribution_allocation(one_layer(10), support);
        CHECK(a.counts[0] == std::array<std::int64_t, 3>{4, 3, 3});
    }
    SECTION("10 rows of a dynamic op over its 2 supported tiers") {
        const Allocation a =
            equal_distribution_allocation(one_layer(10, OpKind::DynamicMatmul), support);
        CHECK(a.counts[0] == std::array<std::int64_t, 3>{5, 0, 5});
    }
}

TEST_CASE("homogeneous baselines flag unsupported tiers invalid") {
    const TierSupportMatrix support = default_support_matrix();
    Workload w = one_layer(8);
    w.layers.push_back({"qk", OpKind::DynamicMatmul, 4, 4, 1, true});
    const auto tiers = default_tiers();
    const auto baselines = run_homogeneous_baselines(w, tiers, support);
    REQUIRE(baselines.size() == 3);
    CHECK(baselines[0].valid); // SRAM
    CHECK_FALSE(baselines[1].valid); // ReRAM can't host the dynamic matmul
    CHECK(baselines[2].valid); // Photonic
    CHECK(baselines[0].alloc.has_value());
    CHECK_FALSE(baselines[1].alloc.has_value());
}

TEST_CASE("photonic homogeneous latency beats SRAM on the bundled static workload") {
    const Workload w = load_workload(std::string(TIERMAP_DATA_DIR) + "/toy_mlp.json");
    const auto tiers = default_tiers();
    const TierSupportMatrix support = default_support_matrix();
    const auto baselines = run_homogeneous_baselines(w, tiers, support);
    const double lat_sram = baselines[0].objectives.latency_s;
    const double lat_reram = baselines[1].objectives.latency_s;
    const double lat_phot = baselines[2].objectives.latency_s;
    CHECK(lat_phot < lat_sram);
    CHECK(lat_sram < lat_reram);
}

TEST_CASE("select_best_accuracy picks the most accurate member") {
    const TierSupportMatrix support = default_support_matrix();
    Workload w;
    w.name = "pair";
    w.layers.push_back({"l0", OpKind::Linear, 6, 4, 1, false});

    FrontArchive front;
    Allocation sram_heavy, photonic_heavy;
    sram_heavy.counts = {{5, 0, 1}};
    photonic_heavy.counts = {{1, 0, 5}};
    front.members.push_back({photonic_heavy, {1.0, 2.0}});
    front.members.push_back({sram_heavy, {3.0, 4.0}});

    SensitivityProfile prof;
    prof.s = {{0.6, 0.5, 0.4, 0.3, 0.2, 0.1}};
    const std::vector<TierId> order = {TierId::SRAM, TierId::ReRAM, TierId::Photonic};
    const RemapEvalFn eval = [](const RowAssignment& a) {
        EvalResult r;
        double photonic_rows = 0;
        for (TierId t : a.rows[0]) photonic_rows += t == TierId::Photonic ? 1.0 : 0.0;
        r.acc0 = 1.0;
        r.accuracy = 1.0 - 0.01 * photonic_rows;
        r.gap = r.acc0 - r.accuracy;
        return r;
    };

    SECTION("best member returned with met flag against tau") {
        std::vector<EvalResult> evals;
        const auto [best, met] =
            select_best_accuracy(front, eval, prof, order, 0.02, QualityMetric::Accuracy, &evals);
        CHECK(best.alloc == sram_heavy);
        CHECK(met); // gap 0.01 <= 0.02
        REQUIRE(evals.size() == 2);
        // exhaustive re-evaluation: the winner is at least as accurate as every member
        for (const auto& e : evals) CHECK(best.eval.accuracy >= e.accuracy);
    }
    SECTION("tau below reach reports met=false but still returns the best") {
        const auto [best, met] =
            select_best_accuracy(front, eval, prof, order, 0.001, QualityMetric::Accuracy);
        CHECK(best.alloc == sram_heavy);
        CHECK_FALSE(met);
    }
    SECTION("singleton front returns its only member") {
        FrontArchive solo;
        solo.members.push_back({photonic_heavy, {1.0, 2.0}});
        const auto [best, met] =
            select_best_accuracy(solo, eval, prof, order, 0.001, QualityMetric::Accuracy);
        CHECK(best.alloc == photonic_heavy);
        CHECK_FALSE(met);
        CHECK_THAT(best.eval.gap, Catch::Matchers::WithinAbs(0.05, 1e-12));
    }
}

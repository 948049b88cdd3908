// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tiermap/remap.hpp"
#include "tiermap/rng.hpp"
#include "tiermap/surrogate.hpp"

using namespace tiermap;

namespace {

const std::string kData = TIERMAP_DATA_DIR;

SurrogateModel bundled_model() {
    return load_checkpoint(kData + "/toy_checkpoint.bin", kData + "/toy_checkpoint.json");
}

Batch bundled_test_batch(const SurrogateModel& m) {
    return load_dataset_csv(kData + "/blobs_test.csv", m.in_dim(), m.out_dim());
}

Batch bundled_train_batch(const SurrogateModel& m) {
    return load_dataset_csv(kData + "/blobs_train.csv", m.in_dim(), m.out_dim());
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return v[x] < v[y];
        });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < order.size(); ++i) r[order[i]] = static_cast<double>(i);
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

} // namespace

TEST_CASE("checkpoint and dataset load") {
    const SurrogateModel m = bundled_model();
    REQUIRE(m.layers.size() == 3);
    CHECK(m.layers[0].rows == 64);
    CHECK(m.layers[0].cols == 2);
    CHECK(m.layers[1].rows == 64);
    CHECK(m.layers[2].rows == 4);
    for (double s : m.weight_scale) CHECK(s > 0.0);

    const Batch test = bundled_test_batch(m);
    CHECK(test.n == 500);
    const Batch train = bundled_train_batch(m);
    CHECK(train.n == 2000);
}

TEST_CASE("analytic gradients match central finite differences") {
    const SurrogateModel model = bundled_model();
    const Batch batch = bundled_test_batch(model).head(64);
    const Gradients g = gradients(model, batch);

    const double h = 1e-4;
    RngStream rng(404);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const std::size_t n = model.layers[l].w.size();
        for (int probe = 0; probe < 100; ++probe) {
            const std::size_t idx = rng.index(n);
            SurrogateModel pert = model;
            pert.layers[l].w[idx] += h;
            const double up = loss_only(pert, batch);
            pert.layers[l].w[idx] -= 2 * h;
            const double down = loss_only(pert, batch);
            const double fd = (up - down) / (2 * h);
            const double an = g.dw[l][idx];
            const double tol = std::max(1e-4 * std::abs(fd), 1e-7);
            CHECK_THAT(an, Catch::Matchers::WithinAbs(fd, tol));
        }
    }
}

TEST_CASE("zero weights and zero inputs give zero weight gradients") {
    SurrogateModel zero = bundled_model();
    for (auto& l : zero.layers) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    zero.refresh_scales();
    Batch batch;
    batch.n = 8;
    batch.in_dim = 2;
    batch.num_classes = 4;
    batch.x.assign(16, 0.0);
    batch.y.assign(8, 0);
    const Gradients g = gradients(zero, batch);
    for (const auto& layer : g.dw)
        for (double v : layer) CHECK(v == 0.0);
}

TEST_CASE("duplicating the batch leaves mean-reduced gradients unchanged") {
    const SurrogateModel model = bundled_model();
    const Batch batch = bundled_test_batch(model).head(50);
    Batch doubled = batch;
    doubled.n = 2 * batch.n;
    doubled.x.insert(doubled.x.end(), batch.x.begin(), batch.x.end());
    doubled.y.insert(doubled.y.end(), batch.y.begin(), batch.y.end());

    const Gradients a = gradients(model, batch);
    const Gradients b = gradients(model, doubled);
    for (std::size_t l = 0; l < a.dw.size(); ++l)
        for (std::size_t i = 0; i < a.dw[l].size(); ++i)
            CHECK_THAT(b.dw[l][i], Catch::Matchers::WithinAbs(a.dw[l][i], 1e-9));
}

TEST_CASE("forward baseline identity and noise ablations") {
    const SurrogateModel model = bundled_model();
    const Batch test = bundled_test_batch(model);
    const auto tiers = default_tiers();
    NoiseConfig noise;
    const SurrogateEvaluator ev(model, test, tiers, noise);
    const Workload w = model_workload(model, "toy", 256);

    SECTION("all-SRAM equals the cached baseline exactly") {
        const EvalResult r = ev.evaluate(homogeneous_assignment(w, TierId::SRAM), 123);
        CHECK(r.accuracy == ev.acc0());
        CHECK(r.gap == 0.0);
        CHECK(r.perplexity == ev.ppl0());
    }
    SECTION("photonic with sigma=0 and an 8-bit override is bit-exact all-SRAM") {
        auto clean_tiers = tiers;
        clean_tiers[static_cast<std::size_t>(TierId::Photonic)].weight_bits = 8;
        NoiseConfig quiet;
        quiet.photonic_sigma = 0.0;
        const SurrogateEvaluator ablated(model, test, clean_tiers, quiet);
        const EvalResult ph = ablated.evaluate(homogeneous_assignment(w, TierId::Photonic), 9);
        const EvalResult sr = ablated.evaluate(homogeneous_assignment(w, TierId::SRAM), 9);
        CHECK(ph.loss == sr.loss);
        CHECK(ph.accuracy == sr.accuracy);
    }
    SECTION("all-photonic at 6-bit with default noise degrades accuracy") {
        const EvalResult r = ev.evaluate(homogeneous_assignment(w, TierId::Photonic), 77);
        CHECK(r.gap > 0.0);
        CHECK(r.accuracy < ev.acc0());
    }
    SECTION("repeated evaluations agree bit-exactly") {
        const RowAssignment mixed = [&] {
            RowAssignment a = homogeneous_assignment(w, TierId::SRAM);
            for (std::size_t l = 0; l < a.rows.size(); ++l)
                for (std::size_t r = 0; r < a.rows[l].size(); ++r)
                    a.rows[l][r] = static_cast<TierId>((l + r) % kTierCount);
            return a;
        }();
        const EvalResult r1 = ev.evaluate(mixed, 2718);
        const EvalResult r2 = ev.evaluate(mixed, 2718);
        CHECK(r1.loss == r2.loss);
        CHECK(r1.accuracy == r2.accuracy);
        const EvalResult r3 = ev.evaluate(mixed, 2719);
        CHECK(r1.loss != r3.loss); // different stream actually draws differently
    }
    SECTION("assignment shape mismatch is a contract error") {
        RowAssignment bad = homogeneous_assignment(w, TierId::SRAM);
        bad.rows[0].pop_back();
        CHECK_THROWS_AS(ev.evaluate(bad, 1), ContractError);
    }
}

TEST_CASE("dead rows have near-zero sensitivity") {
    SurrogateModel model = bundled_model();
    // cut row 5 of layer 0 out of the network: zero its outgoing column
    const std::int64_t dead_row = 5;
    for (std::int64_t r = 0; r < model.layers[1].rows; ++r)
        model.layers[1].w[static_cast<std::size_t>(r * model.layers[1].cols + dead_row)] = 0.0;
    model.refresh_scales();
    const Batch batch = bundled_test_batch(model).head(128);
    const SensitivityProfile prof = row_sensitivity(model, batch, 32, 0.01, 99);
    CHECK(std::abs(prof.s[0][static_cast<std::size_t>(dead_row)]) < 1e-8);
}

TEST_CASE("sensitivity ranks match empirically measured loss deltas") {
    const SurrogateModel model = bundled_model();
    const Batch batch = bundled_train_batch(model).head(128);
    const int probes = 32;
    const double std_dev = 0.01;
    const std::uint64_t seed = 12345;
    const SensitivityProfile prof = row_sensitivity(model, batch, probes, std_dev, seed);
    const double l0 = loss_only(model, batch);

    std::vector<double> predicted, measured;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        for (std::int64_t r = 0; r < model.layers[l].rows; ++r) {
            // replay the exact same perturbation stream the scorer used
            RngStream rng(seed, 0x53454eu, static_cast<std::uint64_t>(l),
                          static_cast<std::uint64_t>(r));
            double mean_delta = 0.0;
            for (int p = 0; p < probes; ++p) {
                SurrogateModel pert = model;
                for (std::int64_t c = 0; c < model.layers[l].cols; ++c)
                    pert.layers[l].w[static_cast<std::size_t>(r * model.layers[l].cols + c)] +=
                        rng.normal(0.0, std_dev);
                mean_delta += loss_only(pert, batch) - l0;
            }
            predicted.push_back(prof.s[l][static_cast<std::size_t>(r)]);
            measured.push_back(mean_delta / probes);
        }
    }
    CHECK(spearman(predicted, measured) >= 0.8);
}

TEST_CASE("second-order term scales quadratically with the perturbation std") {
    const SurrogateModel model = bundled_model();
    const Batch batch = bundled_train_batch(model).head(256);
    const SensitivityProfile s1 = row_sensitivity(model, batch, 256, 0.01, 501);
    const SensitivityProfile s2 = row_sensitivity(model, batch, 256, 0.02, 502);
    double sum1 = 0.0, sum2 = 0.0;
    for (std::size_t l = 0; l < s1.s.size(); ++l)
        for (std::size_t r = 0; r < s1.s[l].size(); ++r) {
            sum1 += s1.s[l][r];
            sum2 += s2.s[l][r];
        }
    CHECK(sum2 / sum1 > 4.0 * 0.8);
    CHECK(sum2 / sum1 < 4.0 * 1.2);
}

TEST_CASE("tier fidelity ordering") {
    const SurrogateModel model = bundled_model();
    const Batch test = bundled_test_batch(model);

    SECTION("bundled checkpoint orders SRAM, ReRAM, Photonic") {
        const SurrogateEvaluator ev(model, test, default_tiers(), NoiseConfig{});
        const auto order = tier_fidelity_order(ev, 7);
        REQUIRE(order.size() == 3);
        CHECK(order[0] == TierId::SRAM);
        CHECK(order[1] == TierId::ReRAM);
        CHECK(order[2] == TierId::Photonic);
    }
    SECTION("accuracy tie breaks on lower homogeneous energy, deterministically") {
        auto tiers = default_tiers();
        tiers[static_cast<std::size_t>(TierId::Photonic)].weight_bits = 8;
        NoiseConfig quiet;
        quiet.photonic_sigma = 0.0;
        const SurrogateEvaluator ev(model, test, tiers, quiet);
        const auto o1 = tier_fidelity_order(ev, 1);
        const auto o2 = tier_fidelity_order(ev, 1);
        CHECK(o1 == o2);
        // photonic now matches SRAM accuracy exactly and is cheaper per MAC
        CHECK(o1.front() == TierId::Photonic);
    }
}

TEST_CASE("quality metric helpers") {
    EvalResult r;
    r.accuracy = 0.9;
    r.acc0 = 0.95;
    r.gap = 0.05;
    r.perplexity = 1.4;
    r.ppl0 = 1.25;
    r.ppl_gap = 0.15;
    CHECK(quality_gap(r, QualityMetric::Accuracy) == 0.05);
    CHECK(quality_gap(r, QualityMetric::Perplexity) == 0.15);
}

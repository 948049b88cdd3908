// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tiermap/noise.hpp"
#include "tiermap/rng.hpp"

using namespace tiermap;

TEST_CASE("conductance noise closed forms") {
    NoiseConfig cfg; // T=300, V=0.2, Freq=1e8, defaults

    SECTION("zero conductance is noiseless") {
        const auto s = reram_noise_std(0.0, cfg);
        CHECK(s.thermal == 0.0);
        CHECK(s.shot == 0.0);
    }
    SECTION("hand-evaluated value at g = 1e-6 S") {
        // sqrt(4 * 1e-6 * 1e8 * 1.380649e-23 * 300 / 0.2) = 2.878e-9
        const auto s = reram_noise_std(1e-6, cfg);
        CHECK_THAT(s.thermal, Catch::Matchers::WithinRel(2.878e-9, 1e-3));
        // sqrt(2 * 1e-6 * 1e8 * 1.602177e-19 / 0.2) = 1.266e-8
        CHECK_THAT(s.shot, Catch::Matchers::WithinRel(1.266e-8, 1e-3));
    }
    SECTION("quadrupling g doubles both stds") {
        const auto s1 = reram_noise_std(2.5e-7, cfg);
        const auto s4 = reram_noise_std(1e-6, cfg);
        CHECK_THAT(s4.thermal, Catch::Matchers::WithinRel(2.0 * s1.thermal, 1e-12));
        CHECK_THAT(s4.shot, Catch::Matchers::WithinRel(2.0 * s1.shot, 1e-12));
    }
    SECTION("negative conductance is a contract error") {
        CHECK_THROWS_AS(reram_noise_std(-1e-9, cfg), ContractError);
    }
}

TEST_CASE("reram weight perturbation") {
    NoiseConfig cfg;

    SECTION("all-zero row stays zero") {
        const std::vector<double> zeros(16, 0.0);
        RngStream rng(1);
        const auto out = perturb_reram_weights(zeros, 1.0, cfg, rng);
        for (double v : out) CHECK(v == 0.0);
    }
    SECTION("same seed, same inputs, same outputs") {
        const std::vector<double> row = {0.5, -0.25, 0.125, 0.9};
        RngStream a(42), b(42);
        CHECK(perturb_reram_weights(row, 1.0, cfg, a) ==
              perturb_reram_weights(row, 1.0, cfg, b));
    }
    SECTION("Monte-Carlo variance matches thermal + shot in weight units") {
        const double w = 0.6, w_max = 1.0;
        const double g = w * cfg.g_max_s / w_max;
        const auto s = reram_noise_std(g, cfg);
        const double expected_var =
            s.combined_variance() * (w_max / cfg.g_max_s) * (w_max / cfg.g_max_s);

        const int n = 200000;
        RngStream rng(7);
        double sum = 0.0, sum_sq = 0.0;
        const std::vector<double> row = {w};
        for (int i = 0; i < n; ++i) {
            const double d = perturb_reram_weights(row, w_max, cfg, rng)[0] - w;
            sum += d;
            sum_sq += d * d;
        }
        const double var = sum_sq / n - (sum / n) * (sum / n);
        CHECK_THAT(var, Catch::Matchers::WithinRel(expected_var, 0.02));
    }
}

TEST_CASE("photonic input noise") {
    SECTION("zeros and sigma=0 pass through") {
        const std::vector<double> x = {0.0, 1.0, -2.0, 0.0};
        RngStream rng(3);
        const auto noisy = perturb_photonic_inputs(x, 0.0031, rng);
        CHECK(noisy[0] == 0.0);
        CHECK(noisy[3] == 0.0);
        RngStream rng2(3);
        CHECK(perturb_photonic_inputs(x, 0.0, rng2) == x);
    }
    SECTION("sample std at x=1 sits in the 2% band around sigma") {
        const int n = 200000;
        RngStream rng(5);
        const std::vector<double> one = {1.0};
        double sum = 0.0, sum_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = perturb_photonic_inputs(one, 0.0031, rng)[0] - 1.0;
            sum += d;
            sum_sq += d * d;
        }
        const double stddev = std::sqrt(sum_sq / n - (sum / n) * (sum / n));
        CHECK(stddev > 0.00304);
        CHECK(stddev < 0.00316);
    }
}

TEST_CASE("uniform symmetric quantizer") {
    SECTION("zero maps to zero at every width") {
        for (int bits = 1; bits <= 8; ++bits) {
            const QuantSpec q{bits, true, 1.0};
            CHECK(quantize_value(0.0, q) == 0.0);
        }
    }
    SECTION("the scale itself is representable (clamp boundary)") {
        const QuantSpec q{8, true, 0.75};
        CHECK_THAT(quantize_value(0.75, q), Catch::Matchers::WithinRel(0.75, 1e-12));
        CHECK_THAT(quantize_value(10.0, q), Catch::Matchers::WithinRel(0.75, 1e-12));
        CHECK_THAT(quantize_value(-10.0, q), Catch::Matchers::WithinRel(-0.75, 1e-12));
    }
    SECTION("max error within half a step over random samples") {
        const QuantSpec q{8, true, 1.0};
        const double half_step = 0.5 / 127.0; // = 1/254
        RngStream rng(11);
        std::vector<double> xs(100000);
        for (double& x : xs) x = 2.0 * rng.uniform() - 1.0;
        const auto quantized = quantize(xs, q);
        double worst = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            worst = std::max(worst, std::abs(xs[i] - quantized[i]));
        CHECK(worst <= half_step + 1e-15);
    }
    SECTION("bad specs are rejected") {
        CHECK_THROWS_AS(quantize_value(0.1, QuantSpec{0, true, 1.0}), ContractError);
        CHECK_THROWS_AS(quantize_value(0.1, QuantSpec{8, true, 0.0}), ContractError);
    }
}

TEST_CASE("independent thermal and shot draws add in variance") {
    NoiseConfig cfg;
    const double g = 4e-7;
    const auto s = reram_noise_std(g, cfg);
    const int n = 200000;
    RngStream rng(13);
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = sample_reram_noise(g, cfg, rng);
        sum += d;
        sum_sq += d * d;
    }
    const double var = sum_sq / n - (sum / n) * (sum / n);
    CHECK_THAT(var, Catch::Matchers::WithinRel(s.combined_variance(), 0.02));
}

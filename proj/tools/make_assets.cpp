// SPDX-License-Identifier: Apache-2.0
//
// Regenerates the committed data/ assets: the synthetic blobs dataset, the
// trained surrogate checkpoint, the workload descriptors and the default
// tier configuration. Everything is seeded, so reruns are byte-identical.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiermap/noise.hpp"
#include "tiermap/rng.hpp"
#include "tiermap/surrogate.hpp"
#include "tiermap/tier_model.hpp"
#include "tiermap/workload.hpp"

using nlohmann::ordered_json;
using namespace tiermap;

namespace {

constexpr int kNumClasses = 4;
constexpr int kTrainSize = 2000;
constexpr int kTestSize = 500;
constexpr double kCenterRadius = 1.5;
constexpr double kBlobStd = 0.80;
constexpr std::uint64_t kDataSeed = 20240901;
constexpr std::uint64_t kInitSeed = 7;

Batch make_blobs(int n, std::uint64_t seed) {
    Batch b;
    b.n = n;
    b.in_dim = 2;
    b.num_classes = kNumClasses;
    RngStream rng(seed);
    for (int i = 0; i < n; ++i) {
        const int label = i % kNumClasses;
        const double angle = (0.25 + 0.5 * label) * std::numbers::pi;
        b.x.push_back(kCenterRadius * std::cos(angle) + rng.normal(0.0, kBlobStd));
        b.x.push_back(kCenterRadius * std::sin(angle) + rng.normal(0.0, kBlobStd));
        b.y.push_back(label);
    }
    return b;
}

void write_csv(const Batch& b, const std::string& path) {
    std::ofstream out(path);
    for (std::int64_t i = 0; i < b.n; ++i) {
        char line[96];
        std::snprintf(line, sizeof line, "%.6f,%.6f,%d\n", b.x[2 * i], b.x[2 * i + 1],
                      b.y[static_cast<std::size_t>(i)]);
        out << line;
    }
}

SurrogateModel init_model(std::uint64_t seed) {
    SurrogateModel m;
    const std::vector<std::pair<std::int64_t, std::int64_t>> dims = {{64, 2}, {64, 64}, {4, 64}};
    RngStream rng(seed);
    for (auto [rows, cols] : dims) {
        DenseLayer l;
        l.rows = rows;
        l.cols = cols;
        const double std_dev = std::sqrt(2.0 / static_cast<double>(cols));
        l.w.resize(static_cast<std::size_t>(rows * cols));
        for (double& v : l.w) v = rng.normal(0.0, std_dev);
        l.b.assign(static_cast<std::size_t>(rows), 0.0);
        m.layers.push_back(std::move(l));
    }
    m.refresh_scales();
    return m;
}

void train(SurrogateModel& m, const Batch& batch, int steps, double lr) {
    struct Adam {
        std::vector<double> mw, vw, mb, vb;
    };
    std::vector<Adam> state(m.layers.size());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        state[l].mw.assign(m.layers[l].w.size(), 0.0);
        state[l].vw.assign(m.layers[l].w.size(), 0.0);
        state[l].mb.assign(m.layers[l].b.size(), 0.0);
        state[l].vb.assign(m.layers[l].b.size(), 0.0);
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    for (int step = 1; step <= steps; ++step) {
        const Gradients g = gradients(m, batch);
        const double bc1 = 1.0 - std::pow(beta1, step);
        const double bc2 = 1.0 - std::pow(beta2, step);
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            auto update = [&](std::vector<double>& param, const std::vector<double>& grad,
                              std::vector<double>& mm, std::vector<double>& vv) {
                for (std::size_t i = 0; i < param.size(); ++i) {
                    mm[i] = beta1 * mm[i] + (1.0 - beta1) * grad[i];
                    vv[i] = beta2 * vv[i] + (1.0 - beta2) * grad[i] * grad[i];
                    param[i] -= lr * (mm[i] / bc1) / (std::sqrt(vv[i] / bc2) + eps);
                }
            };
            update(m.layers[l].w, g.dw[l], state[l].mw, state[l].vw);
            update(m.layers[l].b, g.db[l], state[l].mb, state[l].vb);
        }
        if (step % 400 == 0)
            std::printf("  step %4d  loss %.4f\n", step, loss_only(m, batch));
    }
    m.refresh_scales();
}

ordered_json layer_json(const std::string& name, const std::string& op, std::int64_t rows,
                        std::int64_t cols, std::int64_t iv, bool dynamic) {
    return ordered_json{{"name", name},          {"op_kind", op},
                        {"rows", rows},          {"cols", cols},
                        {"input_vectors", iv},   {"weight_dynamic", dynamic}};
}

void write_pythia70m(const std::string& path) {
    ordered_json j;
    j["name"] = "pythia70m";
    j["note"] = "Shape-only descriptor of a 6-block decoder-style transformer "
                "(hidden 512, 8 heads, seq 128): 24 linear + 12 dynamic matmul "
                "layers. Used for cost-only mapping searches.";
    j["layers"] = ordered_json::array();
    for (int b = 0; b < 6; ++b) {
        const std::string p = "block" + std::to_string(b) + ".";
        j["layers"].push_back(layer_json(p + "attn_qkv", "attention_proj", 1536, 512, 128, false));
        j["layers"].push_back(layer_json(p + "qk_matmul", "dynamic_matmul", 128, 64, 1024, true));
        j["layers"].push_back(layer_json(p + "scorev_matmul", "dynamic_matmul", 64, 128, 1024, true));
        j["layers"].push_back(layer_json(p + "attn_out", "attention_proj", 512, 512, 128, false));
        j["layers"].push_back(layer_json(p + "mlp_up", "linear", 2048, 512, 128, false));
        j["layers"].push_back(layer_json(p + "mlp_down", "linear", 512, 2048, 128, false));
    }
    std::ofstream(path) << j.dump(2) << "\n";
}

void write_mobilevit_s(const std::string& path) {
    ordered_json j;
    j["name"] = "mobilevit_s";
    j["note"] = "Approximate shape-only descriptor of a small hybrid conv/"
                "transformer vision model: 37 linear + 32 conv2d + 18 dynamic "
                "matmul layers. Channel widths and patch counts are taken from "
                "the published architecture; spatial sizes assume 256x256 input.";
    auto& L = j["layers"] = ordered_json::array();

    auto conv = [&](const std::string& name, std::int64_t out_ch, std::int64_t in_ch,
                    std::int64_t k, std::int64_t hw) {
        L.push_back(layer_json(name, "conv2d", out_ch, in_ch * k * k, hw * hw, false));
    };
    // stem + inverted-residual stages (expand 1x1 / depthwise 3x3 / project 1x1)
    conv("stem.conv3x3", 16, 3, 3, 128);
    const struct {
        std::int64_t in, out, hw;
    } mv2[] = {{16, 32, 64}, {32, 64, 32}, {64, 64, 32},
               {64, 96, 16}, {96, 128, 8}, {128, 160, 4}};
    for (int i = 0; i < 6; ++i) {
        const std::string p = "mv2_" + std::to_string(i + 1) + ".";
        conv(p + "expand1x1", mv2[i].in * 4, mv2[i].in, 1, mv2[i].hw);
        conv(p + "dw3x3", mv2[i].in * 4, 1, 3, mv2[i].hw);
        conv(p + "project1x1", mv2[i].out, mv2[i].in * 4, 1, mv2[i].hw);
    }
    // three transformer stages: (channels, embed dim, #blocks, patches, head dim)
    const struct {
        std::int64_t ch, d, blocks, patches, head;
    } vit[] = {{96, 144, 2, 256, 36}, {128, 192, 4, 64, 48}, {160, 240, 3, 16, 60}};
    for (int s = 0; s < 3; ++s) {
        const std::string sp = "vit" + std::to_string(s + 1) + ".";
        conv(sp + "local3x3", vit[s].ch, vit[s].ch, 3, static_cast<std::int64_t>(
                                                           std::sqrt(vit[s].patches * 4.0)));
        conv(sp + "to_embed1x1", vit[s].d, vit[s].ch, 1,
             static_cast<std::int64_t>(std::sqrt(vit[s].patches * 4.0)));
        for (int b = 0; b < vit[s].blocks; ++b) {
            const std::string bp = sp + "block" + std::to_string(b) + ".";
            L.push_back(layer_json(bp + "attn_qkv", "attention_proj", 3 * vit[s].d, vit[s].d,
                                   vit[s].patches * 4, false));
            L.push_back(layer_json(bp + "qk_matmul", "dynamic_matmul", vit[s].patches,
                                   vit[s].head, vit[s].patches * 16, true));
            L.push_back(layer_json(bp + "scorev_matmul", "dynamic_matmul", vit[s].head,
                                   vit[s].patches, vit[s].patches * 16, true));
            L.push_back(layer_json(bp + "attn_out", "attention_proj", vit[s].d, vit[s].d,
                                   vit[s].patches * 4, false));
            L.push_back(layer_json(bp + "mlp_up", "linear", 2 * vit[s].d, vit[s].d,
                                   vit[s].patches * 4, false));
            L.push_back(layer_json(bp + "mlp_down", "linear", vit[s].d, 2 * vit[s].d,
                                   vit[s].patches * 4, false));
        }
        conv(sp + "from_embed1x1", vit[s].ch, vit[s].d, 1,
             static_cast<std::int64_t>(std::sqrt(vit[s].patches * 4.0)));
        conv(sp + "fusion3x3", vit[s].ch, 2 * vit[s].ch, 3,
             static_cast<std::int64_t>(std::sqrt(vit[s].patches * 4.0)));
    }
    conv("head.conv1x1", 640, 160, 1, 4);
    L.push_back(layer_json("head.classifier", "linear", 1000, 640, 1, false));
    std::ofstream(path) << j.dump(2) << "\n";
}

void write_toy_mlp(const SurrogateModel& m, const std::string& path) {
    ordered_json j;
    j["name"] = "toy_mlp";
    j["note"] = "Workload view of the bundled surrogate classifier; dims must "
                "match toy_checkpoint.json.";
    j["layers"] = ordered_json::array();
    for (std::size_t l = 0; l < m.layers.size(); ++l)
        j["layers"].push_back(layer_json("fc" + std::to_string(l + 1), "linear",
                                         m.layers[l].rows, m.layers[l].cols, 256, false));
    std::ofstream(path) << j.dump(2) << "\n";
}

void write_tiers(const std::string& path) {
    ordered_json j = ordered_json::array();
    for (const TierSpec& t : default_tiers()) {
        ordered_json e;
        e["tier_id"] = to_string(t.id);
        e["clock_hz"] = t.clock_hz;
        e["xbar_rows"] = t.xbar_rows;
        e["xbar_cols"] = t.xbar_cols;
        e["crossbars_per_tile"] = t.crossbars_per_tile;
        e["tiles"] = t.tiles;
        e["weight_bits"] = t.weight_bits;
        e["input_bits"] = t.input_bits;
        e["adc_per_tile"] = t.adc_per_tile;
        e["adc_bits"] = t.adc_bits;
        e["program_latency_s"] = t.program_latency_s;
        e["e_mac_j"] = t.e_mac_j;
        e["e_adc_j"] = t.e_adc_j;
        e["e_write_j"] = t.e_write_j;
        e["static_power_w"] = t.static_power_w;
        e["tsv_bandwidth_bytes_per_s"] = t.tsv_bandwidth_bytes_per_s;
        e["e_per_byte_j"] = t.e_per_byte_j;
        j.push_back(e);
    }
    std::ofstream out(path);
    out << "// Default 3-tier configuration. Geometry, clock, precision and\n"
           "// program latency describe the modeled hardware; the energy and\n"
           "// bandwidth coefficients are desk-scale calibration constants, not\n"
           "// measured device data. Photonic e_adc_j is unused: its ADC cost\n"
           "// is amortized into e_mac_j.\n";
    out << j.dump(2) << "\n";
}

} // namespace

int main(int argc, char** argv) {
    const std::string out_dir = argc > 1 ? argv[1] : "data";
    std::filesystem::create_directories(out_dir);

    std::printf("generating blobs dataset...\n");
    const Batch train_set = make_blobs(kTrainSize, derive_seed(kDataSeed, 1));
    const Batch test_set = make_blobs(kTestSize, derive_seed(kDataSeed, 2));
    write_csv(train_set, out_dir + "/blobs_train.csv");
    write_csv(test_set, out_dir + "/blobs_test.csv");

    std::printf("training surrogate...\n");
    SurrogateModel model = init_model(kInitSeed);
    train(model, train_set, 2000, 0.01);

    save_checkpoint(model, out_dir + "/toy_checkpoint.bin", out_dir + "/toy_checkpoint.json");
    write_toy_mlp(model, out_dir + "/toy_mlp.json");
    write_pythia70m(out_dir + "/pythia70m.json");
    write_mobilevit_s(out_dir + "/mobilevit_s.json");
    write_tiers(out_dir + "/tiers_default.json");

    // quick fidelity report for calibration
    const SurrogateEvaluator ev(model, test_set, default_tiers(), NoiseConfig{});
    std::printf("baseline (all-SRAM 8-bit) accuracy: %.4f  ppl: %.4f\n", ev.acc0(), ev.ppl0());
    const Workload w = model_workload(model, "toy_mlp", 256);
    for (TierId t : kAllTiers) {
        double acc_sum = 0.0;
        for (std::uint64_t s = 1; s <= 10; ++s) {
            const auto r = ev.evaluate(homogeneous_assignment(w, t), s);
            acc_sum += r.accuracy;
        }
        std::printf("  100%% %-8s mean accuracy over 10 seeds: %.4f\n", to_string(t),
                    acc_sum / 10.0);
    }
    std::printf("assets written to %s/\n", out_dir.c_str());
    return 0;
}

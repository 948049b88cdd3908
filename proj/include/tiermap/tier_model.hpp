// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiermap/errors.hpp"
#include "tiermap/types.hpp"
#include "tiermap/workload.hpp"

namespace tiermap {

/// Physical parameters and cost coefficients of one compute tier.
///
/// Geometry, clock, precision and program latency follow the multi-tile
/// accelerator configurations this model targets; the energy coefficients
/// (e_mac_j, e_adc_j, e_write_j, static_power_w, tsv_bandwidth_bytes_per_s,
/// e_per_byte_j) are calibration constants shipped in tiers_default.json.
struct TierSpec {
    TierId id = TierId::SRAM;
    double clock_hz = 1e8;
    std::int64_t xbar_rows = 128;
    std::int64_t xbar_cols = 128;
    std::int64_t crossbars_per_tile = 256;
    std::int64_t tiles = 100;
    int weight_bits = 8;
    int input_bits = 8;
    int adc_per_tile = 256;
    int adc_bits = 7;
    double program_latency_s = 1e-9;
    double e_mac_j = 1e-12;
    double e_adc_j = 1e-12;
    double e_write_j = 1e-12;
    double static_power_w = 1.0;
    double tsv_bandwidth_bytes_per_s = 1e10;
    double e_per_byte_j = 1e-12;

    void validate() const {
        const bool positive = clock_hz > 0 && xbar_rows > 0 && xbar_cols > 0 &&
                              crossbars_per_tile > 0 && tiles > 0 && input_bits > 0 &&
                              adc_per_tile > 0 && adc_bits > 0 && program_latency_s > 0 &&
                              e_mac_j > 0 && e_adc_j > 0 && e_write_j > 0 &&
                              static_power_w > 0 && tsv_bandwidth_bytes_per_s > 0 &&
                              e_per_byte_j > 0;
        if (!positive)
            throw ConfigError(msg_cat("tier ", to_string(id),
                                      ": all physical quantities must be positive"));
        if (weight_bits < 1 || weight_bits > 8)
            throw ConfigError(msg_cat("tier ", to_string(id), ": weight_bits must be in [1,8]"));
    }
};

/// Per-share cost split into sequential phases. Latency total is
/// compute_s + comm_s + program_s; energy total is the sum of the _j parts.
/// ADC conversion energy is folded into compute_j.
struct CostBreakdown {
    double compute_s = 0.0;
    double comm_s = 0.0;
    double program_s = 0.0;
    double compute_j = 0.0;
    double comm_j = 0.0;
    double program_j = 0.0;
    double static_j = 0.0;

    double latency_s() const { return compute_s + comm_s + program_s; }
    double energy_j() const { return compute_j + comm_j + program_j + static_j; }
};

// Closed-form first-order cost model of one tier executing `rows_assigned`
// rows of a layer:
//
//   tiles_needed   = ceil(rows/xbar_rows) * ceil(cols/xbar_cols)
//   serial_factor  = ceil(tiles_needed / (crossbars_per_tile * tiles))
//   bit_passes     = input_bits for PIM tiers (bit-serial input), 1 for photonic
//   compute_s      = input_vectors * bit_passes * serial_factor / clock_hz
//   bytes          = input_vectors * cols * input_bits/8 * rows/R_l   (input stream,
//                    apportioned to the share by row fraction)
//                  + input_vectors * rows * adc_bits/8                (output stream)
//   comm_s         = bytes / tsv_bandwidth
//   program_s      = rows * ceil(cols/xbar_cols) * program_latency_s, weight-dynamic
//                    layers only (one crossbar row per write, re-programmed each
//                    inference)
//   compute_j      = input_vectors * rows * cols * e_mac
//                  + input_vectors * rows * bit_passes * e_adc        (PIM only; the
//                    photonic ADC cost is amortized into its e_mac)
//   comm_j         = bytes * e_per_byte
//   program_j      = rows * cols * e_write, weight-dynamic layers only
//   static_j       = static_power_w * (compute_s + comm_s + program_s)
//
// Every term except static_j and the ceil'd serialization is linear in
// rows_assigned, so dynamic energy is additive across shares of one layer
// while latency is sub-additive (parallel tiles).
inline CostBreakdown tier_cost(const TierSpec& tier, const LayerSpec& layer,
                               std::int64_t rows_assigned) {
    require(rows_assigned >= 0 && rows_assigned <= layer.rows,
            msg_cat("tier_cost: rows_assigned ", rows_assigned, " out of [0, ",
                    layer.rows, "] for layer \"", layer.name, "\""));
    CostBreakdown c;
    if (rows_assigned == 0) return c;

    const double iv = static_cast<double>(layer.input_vectors);
    const double rows = static_cast<double>(rows_assigned);
    const double cols = static_cast<double>(layer.cols);
    const bool photonic = tier.id == TierId::Photonic;

    const std::int64_t col_blocks = (layer.cols + tier.xbar_cols - 1) / tier.xbar_cols;
    const std::int64_t row_blocks = (rows_assigned + tier.xbar_rows - 1) / tier.xbar_rows;
    const std::int64_t tiles_needed = row_blocks * col_blocks;
    const std::int64_t capacity = tier.crossbars_per_tile * tier.tiles;
    const std::int64_t serial_factor = (tiles_needed + capacity - 1) / capacity;
    const double bit_passes = photonic ? 1.0 : static_cast<double>(tier.input_bits);

    c.compute_s = iv * bit_passes * static_cast<double>(serial_factor) / tier.clock_hz;

    const double row_fraction = rows / static_cast<double>(layer.rows);
    const double bytes = iv * cols * tier.input_bits / 8.0 * row_fraction +
                         iv * rows * tier.adc_bits / 8.0;
    c.comm_s = bytes / tier.tsv_bandwidth_bytes_per_s;

    if (layer.weight_dynamic)
        c.program_s = rows * static_cast<double>(col_blocks) * tier.program_latency_s;

    c.compute_j = iv * rows * cols * tier.e_mac_j;
    if (!photonic) c.compute_j += iv * rows * bit_passes * tier.e_adc_j;
    c.comm_j = bytes * tier.e_per_byte_j;
    if (layer.weight_dynamic) c.program_j = rows * cols * tier.e_write_j;
    c.static_j = tier.static_power_w * c.latency_s();
    return c;
}

inline double tier_latency(const TierSpec& tier, const LayerSpec& layer,
                           std::int64_t rows_assigned) {
    return tier_cost(tier, layer, rows_assigned).latency_s();
}

inline double tier_energy(const TierSpec& tier, const LayerSpec& layer,
                          std::int64_t rows_assigned) {
    return tier_cost(tier, layer, rows_assigned).energy_j();
}

/// Built-in tier set: SRAM-PIM (22nm class), ReRAM-PIM (32nm class) and a
/// photonic tensor-core tier. Same values as data/tiers_default.json.
inline std::vector<TierSpec> default_tiers() {
    std::vector<TierSpec> tiers(kTierCount);

    TierSpec& sram = tiers[static_cast<std::size_t>(TierId::SRAM)];
    sram.id = TierId::SRAM;
    sram.clock_hz = 1e8;
    sram.xbar_rows = 128;
    sram.xbar_cols = 128;
    sram.crossbars_per_tile = 256;
    sram.tiles = 100;
    sram.weight_bits = 8;
    sram.input_bits = 8;
    sram.adc_per_tile = 256;
    sram.adc_bits = 7;
    sram.program_latency_s = 1e-9;
    sram.e_mac_j = 5.0e-12;
    sram.e_adc_j = 2.0e-12;
    sram.e_write_j = 5.0e-13;
    sram.static_power_w = 0.5;
    sram.tsv_bandwidth_bytes_per_s = 2.0e10;
    sram.e_per_byte_j = 1.0e-11;

    TierSpec& reram = tiers[static_cast<std::size_t>(TierId::ReRAM)];
    reram.id = TierId::ReRAM;
    reram.clock_hz = 1e8;
    reram.xbar_rows = 128;
    reram.xbar_cols = 128;
    reram.crossbars_per_tile = 64;
    reram.tiles = 100;
    reram.weight_bits = 8;
    reram.input_bits = 8;
    reram.adc_per_tile = 64;
    reram.adc_bits = 8;
    reram.program_latency_s = 1e-7;
    reram.e_mac_j = 4.0e-12;
    reram.e_adc_j = 3.0e-12;
    reram.e_write_j = 1.0e-11;
    reram.static_power_w = 0.15;
    reram.tsv_bandwidth_bytes_per_s = 5.0e9;
    reram.e_per_byte_j = 1.0e-11;

    TierSpec& pho = tiers[static_cast<std::size_t>(TierId::Photonic)];
    pho.id = TierId::Photonic;
    pho.clock_hz = 3e9;
    pho.xbar_rows = 14;
    pho.xbar_cols = 14;
    pho.crossbars_per_tile = 2;
    pho.tiles = 2;
    pho.weight_bits = 6;
    pho.input_bits = 6;
    pho.adc_per_tile = 392;
    pho.adc_bits = 8;
    pho.program_latency_s = 1e-10;
    pho.e_mac_j = 3.0e-12; // ADC conversion amortized in
    pho.e_adc_j = 1e-15;   // unused: folded into e_mac_j
    pho.e_write_j = 1.0e-13;
    pho.static_power_w = 2.0;
    pho.tsv_bandwidth_bytes_per_s = 1.0e11;
    pho.e_per_byte_j = 5.0e-12;

    for (const auto& t : tiers) t.validate();
    return tiers;
}

inline TierSpec tier_spec_from_json(const nlohmann::json& j) {
    TierSpec t;
    try {
        t.id = tier_from_string(j.at("tier_id").get<std::string>());
        t.clock_hz = j.at("clock_hz").get<double>();
        t.xbar_rows = j.at("xbar_rows").get<std::int64_t>();
        t.xbar_cols = j.at("xbar_cols").get<std::int64_t>();
        t.crossbars_per_tile = j.at("crossbars_per_tile").get<std::int64_t>();
        t.tiles = j.at("tiles").get<std::int64_t>();
        t.weight_bits = j.at("weight_bits").get<int>();
        t.input_bits = j.at("input_bits").get<int>();
        t.adc_per_tile = j.at("adc_per_tile").get<int>();
        t.adc_bits = j.at("adc_bits").get<int>();
        t.program_latency_s = j.at("program_latency_s").get<double>();
        t.e_mac_j = j.at("e_mac_j").get<double>();
        t.e_adc_j = j.at("e_adc_j").get<double>();
        t.e_write_j = j.at("e_write_j").get<double>();
        t.static_power_w = j.at("static_power_w").get<double>();
        t.tsv_bandwidth_bytes_per_s = j.at("tsv_bandwidth_bytes_per_s").get<double>();
        t.e_per_byte_j = j.at("e_per_byte_j").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(msg_cat("tier spec: ", e.what()));
    }
    t.validate();
    return t;
}

/// Loads a 3-tier configuration; entries must cover SRAM, ReRAM and
/// Photonic exactly once, in any order.
inline std::vector<TierSpec> load_tiers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open tier config: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(msg_cat("parse error in ", path, ": ", e.what()));
    }
    if (!j.is_array()) throw ConfigError("tier config must be a JSON array");
    std::vector<TierSpec> tiers(kTierCount);
    std::array<bool, kTierCount> seen{};
    for (const auto& jt : j) {
        TierSpec t = tier_spec_from_json(jt);
        const auto idx = static_cast<std::size_t>(t.id);
        if (seen[idx]) throw ConfigError(msg_cat("duplicate tier entry: ", to_string(t.id)));
        seen[idx] = true;
        tiers[idx] = t;
    }
    for (std::size_t i = 0; i < kTierCount; ++i)
        if (!seen[i])
            throw ConfigError(msg_cat("tier config missing entry: ",
                                      to_string(static_cast<TierId>(i))));
    return tiers;
}

} // namespace tiermap

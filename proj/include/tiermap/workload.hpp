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

namespace tiermap {

/// One tier-mappable matrix multiply. `rows` are weight-matrix rows (output
/// neurons), `input_vectors` is the number of input column-vectors streamed
/// per inference (sequence length x batch, or conv output positions).
struct LayerSpec {
    std::string name;
    OpKind op_kind = OpKind::Linear;
    std::int64_t rows = 1;
    std::int64_t cols = 1;
    std::int64_t input_vectors = 1;
    bool weight_dynamic = false;

    void validate() const {
        if (rows < 1 || cols < 1 || input_vectors < 1)
            throw ConfigError(msg_cat("layer \"", name,
                                      "\": rows, cols and input_vectors must be >= 1"));
        if (op_kind == OpKind::DynamicMatmul && !weight_dynamic)
            throw ConfigError(msg_cat("layer \"", name,
                                      "\": dynamic_matmul implies weight_dynamic=true"));
    }
};

/// Layer order is execution order; per-layer latencies sum over the list.
struct Workload {
    std::string name;
    std::vector<LayerSpec> layers;

    void validate() const {
        if (layers.empty())
            throw ConfigError("workload \"" + name + "\" has no layers");
        for (const auto& l : layers) l.validate();
    }

    std::int64_t total_rows() const {
        std::int64_t n = 0;
        for (const auto& l : layers) n += l.rows;
        return n;
    }
};

/// Boolean op-kind x tier support table. The default excludes ReRAM from
/// weight-dynamic ops (endurance); everything else is allowed.
struct TierSupportMatrix {
    std::array<std::array<bool, kTierCount>, kOpKindCount> supports{};

    bool allowed(OpKind op, TierId tier) const {
        return supports[static_cast<std::size_t>(op)][static_cast<std::size_t>(tier)];
    }

    void set(OpKind op, TierId tier, bool value) {
        supports[static_cast<std::size_t>(op)][static_cast<std::size_t>(tier)] = value;
    }

    /// Every op kind must land somewhere or the workload is unmappable.
    void validate() const {
        for (std::size_t op = 0; op < kOpKindCount; ++op) {
            bool any = false;
            for (std::size_t t = 0; t < kTierCount; ++t) any = any || supports[op][t];
            if (!any)
                throw ConfigError(msg_cat("unmappable op_kind: ",
                                          to_string(static_cast<OpKind>(op)),
                                          " is not supported by any tier"));
        }
    }
};

inline TierSupportMatrix default_support_matrix() {
    TierSupportMatrix m;
    for (std::size_t op = 0; op < kOpKindCount; ++op)
        for (std::size_t t = 0; t < kTierCount; ++t) m.supports[op][t] = true;
    m.set(OpKind::DynamicMatmul, TierId::ReRAM, false);
    return m;
}

/// Support overrides on top of the defaults: a JSON array of
/// {"op_kind", "tier_id", "allowed"} entries.
inline TierSupportMatrix load_support_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open support matrix: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(msg_cat("parse error in ", path, ": ", e.what()));
    }
    if (!j.is_array()) throw ConfigError("support matrix must be a JSON array");
    TierSupportMatrix m = default_support_matrix();
    try {
        for (const auto& e : j)
            m.set(op_kind_from_string(e.at("op_kind").get<std::string>()),
                  tier_from_string(e.at("tier_id").get<std::string>()),
                  e.at("allowed").get<bool>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(msg_cat("support matrix: ", e.what()));
    }
    m.validate();
    return m;
}

inline std::vector<TierId> supported_tiers(const LayerSpec& layer,
                                           const TierSupportMatrix& matrix) {
    std::vector<TierId> out;
    for (TierId t : kAllTiers)
        if (matrix.allowed(layer.op_kind, t)) out.push_back(t);
    require(!out.empty(), msg_cat("layer \"", layer.name, "\": no supported tier"));
    return out;
}

inline Workload workload_from_json(const nlohmann::json& j) {
    Workload w;
    try {
        w.name = j.at("name").get<std::string>();
        for (const auto& jl : j.at("layers")) {
            LayerSpec l;
            l.name = jl.at("name").get<std::string>();
            l.op_kind = op_kind_from_string(jl.at("op_kind").get<std::string>());
            l.rows = jl.at("rows").get<std::int64_t>();
            l.cols = jl.at("cols").get<std::int64_t>();
            l.input_vectors = jl.at("input_vectors").get<std::int64_t>();
            l.weight_dynamic = jl.at("weight_dynamic").get<bool>();
            w.layers.push_back(std::move(l));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(msg_cat("workload descriptor: ", e.what()));
    }
    w.validate();
    return w;
}

/// Loads and validates a workload descriptor. The support matrix check
/// rejects descriptors containing an op kind no tier can host.
inline Workload load_workload(const std::string& path,
                              const TierSupportMatrix& matrix = default_support_matrix()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open workload descriptor: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true); // allow comments
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(msg_cat("parse error in ", path, ": ", e.what()));
    }
    Workload w = workload_from_json(j);
    matrix.validate();
    for (const auto& l : w.layers) supported_tiers(l, matrix);
    return w;
}

enum class SpaceMode { PerRow, PerCount };

/// log10 of the number of distinct mappings. PerRow counts every
/// row-to-tier function (n^{sum R_l}); PerCount counts only per-layer
/// row-count splits (prod_l C(R_l + n - 1, n - 1)).
inline double search_space_size_log10(const Workload& w, int n_tiers, SpaceMode mode) {
    require(n_tiers >= 1, "search_space_size: n_tiers must be >= 1");
    double total = 0.0;
    constexpr double ln10 = 2.302585092994045684;
    for (const auto& l : w.layers) {
        const double r = static_cast<double>(l.rows);
        const double n = static_cast<double>(n_tiers);
        if (mode == SpaceMode::PerRow) {
            total += r * std::log10(n);
        } else {
            // log C(R+n-1, n-1) via lgamma
            total += (std::lgamma(r + n) - std::lgamma(r + 1.0) - std::lgamma(n)) / ln10;
        }
    }
    return total;
}

} // namespace tiermap

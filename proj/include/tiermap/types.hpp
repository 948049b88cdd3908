// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "tiermap/errors.hpp"

namespace tiermap {

/// Compute tiers of the 3D stack, best-known-first is NOT implied by the
/// enum order; fidelity ordering is measured at runtime.
enum class TierId : int { SRAM = 0, ReRAM = 1, Photonic = 2 };

inline constexpr std::size_t kTierCount = 3;

inline constexpr std::array<TierId, kTierCount> kAllTiers = {
    TierId::SRAM, TierId::ReRAM, TierId::Photonic};

enum class OpKind : int { Linear = 0, Conv2d = 1, AttentionProj = 2, DynamicMatmul = 3 };

inline constexpr std::size_t kOpKindCount = 4;

inline const char* to_string(TierId t) {
    switch (t) {
        case TierId::SRAM: return "SRAM";
        case TierId::ReRAM: return "ReRAM";
        case TierId::Photonic: return "Photonic";
    }
    throw ContractError("unknown TierId");
}

inline const char* to_string(OpKind k) {
    switch (k) {
        case OpKind::Linear: return "linear";
        case OpKind::Conv2d: return "conv2d";
        case OpKind::AttentionProj: return "attention_proj";
        case OpKind::DynamicMatmul: return "dynamic_matmul";
    }
    throw ContractError("unknown OpKind");
}

inline OpKind op_kind_from_string(const std::string& s) {
    if (s == "linear") return OpKind::Linear;
    if (s == "conv2d") return OpKind::Conv2d;
    if (s == "attention_proj") return OpKind::AttentionProj;
    if (s == "dynamic_matmul") return OpKind::DynamicMatmul;
    throw ConfigError("unknown op_kind: \"" + s + "\"");
}

inline TierId tier_from_string(const std::string& s) {
    if (s == "SRAM") return TierId::SRAM;
    if (s == "ReRAM") return TierId::ReRAM;
    if (s == "Photonic") return TierId::Photonic;
    throw ConfigError("unknown tier_id: \"" + s + "\"");
}

} // namespace tiermap

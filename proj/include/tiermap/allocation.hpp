// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tiermap/errors.hpp"
#include "tiermap/types.hpp"
#include "tiermap/workload.hpp"

namespace tiermap {

/// Per-layer row counts across tiers; the stage-1 genome. counts[l][i] rows
/// of layer l run on tier i, and each layer's counts sum to its row count.
struct Allocation {
    std::vector<std::array<std::int64_t, kTierCount>> counts;

    std::size_t num_layers() const { return counts.size(); }

    std::int64_t layer_sum(std::size_t l) const {
        return std::accumulate(counts[l].begin(), counts[l].end(), std::int64_t{0});
    }

    std::array<std::int64_t, kTierCount> tier_totals() const {
        std::array<std::int64_t, kTierCount> tot{};
        for (const auto& row : counts)
            for (std::size_t i = 0; i < kTierCount; ++i) tot[i] += row[i];
        return tot;
    }

    bool operator==(const Allocation&) const = default;

    /// Compact "a/b/c;d/e/f" form used in front.csv and by --alloc.
    std::string digest() const {
        std::ostringstream os;
        for (std::size_t l = 0; l < counts.size(); ++l) {
            if (l) os << ';';
            for (std::size_t i = 0; i < kTierCount; ++i) {
                if (i) os << '/';
                os << counts[l][i];
            }
        }
        return os.str();
    }

    static Allocation from_digest(const std::string& digest, const Workload& w) {
        Allocation a;
        std::istringstream layers(digest);
        std::string layer_part;
        while (std::getline(layers, layer_part, ';')) {
            std::array<std::int64_t, kTierCount> row{};
            std::istringstream fields(layer_part);
            std::string field;
            std::size_t i = 0;
            while (std::getline(fields, field, '/')) {
                if (i >= kTierCount) throw ConfigError("allocation digest: too many tiers");
                try {
                    row[i++] = std::stoll(field);
                } catch (const std::exception&) {
                    throw ConfigError("allocation digest: bad count \"" + field + "\"");
                }
            }
            if (i != kTierCount) throw ConfigError("allocation digest: too few tiers");
            a.counts.push_back(row);
        }
        if (a.counts.size() != w.layers.size())
            throw ConfigError(msg_cat("allocation digest: ", a.counts.size(),
                                      " layers, workload has ", w.layers.size()));
        return a;
    }
};

/// Lexicographic order over the flattened counts; used as the deterministic
/// final tie-break in tournament selection.
inline bool allocation_less(const Allocation& a, const Allocation& b) {
    return a.counts < b.counts;
}

inline void validate_allocation(const Allocation& a, const Workload& w,
                                const TierSupportMatrix& support) {
    require(a.counts.size() == w.layers.size(), "allocation: layer count mismatch");
    for (std::size_t l = 0; l < a.counts.size(); ++l) {
        std::int64_t sum = 0;
        for (std::size_t i = 0; i < kTierCount; ++i) {
            const std::int64_t c = a.counts[l][i];
            require(c >= 0, msg_cat("allocation: negative count at layer ", l));
            if (c > 0)
                require(support.allowed(w.layers[l].op_kind, static_cast<TierId>(i)),
                        msg_cat("allocation: layer ", l, " (", w.layers[l].name,
                                ") assigns rows to unsupported tier ",
                                to_string(static_cast<TierId>(i))));
            sum += c;
        }
        require(sum == w.layers[l].rows,
                msg_cat("allocation: layer ", l, " counts sum to ", sum, ", expected ",
                        w.layers[l].rows));
    }
}

/// Explicit row-index -> tier map refining an Allocation; one entry per
/// weight row of every layer.
struct RowAssignment {
    std::vector<std::vector<TierId>> rows; // [layer][row]

    std::size_t num_layers() const { return rows.size(); }

    std::array<std::int64_t, kTierCount> histogram(std::size_t l) const {
        std::array<std::int64_t, kTierCount> h{};
        for (TierId t : rows[l]) ++h[static_cast<std::size_t>(t)];
        return h;
    }

    bool operator==(const RowAssignment&) const = default;
};

/// All rows of every layer on one tier.
inline RowAssignment homogeneous_assignment(const Workload& w, TierId tier) {
    RowAssignment a;
    a.rows.reserve(w.layers.size());
    for (const auto& l : w.layers)
        a.rows.emplace_back(static_cast<std::size_t>(l.rows), tier);
    return a;
}

inline void validate_assignment(const RowAssignment& a, const Workload& w,
                                const TierSupportMatrix& support) {
    require(a.rows.size() == w.layers.size(), "assignment: layer count mismatch");
    for (std::size_t l = 0; l < a.rows.size(); ++l) {
        require(a.rows[l].size() == static_cast<std::size_t>(w.layers[l].rows),
                msg_cat("assignment: layer ", l, " covers ", a.rows[l].size(),
                        " rows, expected ", w.layers[l].rows));
        for (TierId t : a.rows[l])
            require(support.allowed(w.layers[l].op_kind, t),
                    msg_cat("assignment: layer ", l, " row on unsupported tier ",
                            to_string(t)));
    }
}

} // namespace tiermap

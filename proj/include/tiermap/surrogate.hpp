// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiermap/allocation.hpp"
#include "tiermap/errors.hpp"
#include "tiermap/noise.hpp"
#include "tiermap/rng.hpp"
#include "tiermap/tier_model.hpp"
#include "tiermap/types.hpp"
#include "tiermap/workload.hpp"

namespace tiermap {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

/// Dense layer, weights row-major rows x cols.
struct DenseLayer {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> w;
    std::vector<double> b;

    std::span<const double> row(std::int64_t r) const {
        return {w.data() + r * cols, static_cast<std::size_t>(cols)};
    }
};

/// Feedforward classifier: ReLU between layers, softmax head. Stands in for
/// full-size models when measuring mapping-induced accuracy loss.
struct SurrogateModel {
    std::vector<DenseLayer> layers;
    std::vector<double> weight_scale; // per-layer max |w|, captured at load

    std::int64_t in_dim() const { return layers.front().cols; }
    std::int64_t out_dim() const { return layers.back().rows; }

    void refresh_scales() {
        weight_scale.resize(layers.size());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            double m = 0.0;
            for (double v : layers[l].w) m = std::max(m, std::abs(v));
            weight_scale[l] = m;
        }
    }

    void validate() const {
        require(!layers.empty(), "surrogate model: no layers");
        for (std::size_t l = 0; l + 1 < layers.size(); ++l)
            require(layers[l].rows == layers[l + 1].cols,
                    msg_cat("surrogate model: dim mismatch between layers ", l, " and ", l + 1));
        for (const auto& layer : layers) {
            require(layer.w.size() == static_cast<std::size_t>(layer.rows * layer.cols) &&
                        layer.b.size() == static_cast<std::size_t>(layer.rows),
                    "surrogate model: tensor size mismatch");
            for (double v : layer.w) require(std::isfinite(v), "surrogate model: non-finite weight");
            for (double v : layer.b) require(std::isfinite(v), "surrogate model: non-finite bias");
        }
    }
};

/// Sample batch, features row-major n x in_dim.
struct Batch {
    std::int64_t n = 0;
    std::int64_t in_dim = 0;
    std::int64_t num_classes = 0;
    std::vector<double> x;
    std::vector<int> y;

    std::span<const double> sample(std::int64_t i) const {
        return {x.data() + i * in_dim, static_cast<std::size_t>(in_dim)};
    }

    Batch head(std::int64_t count) const {
        Batch b;
        b.n = std::min(count, n);
        b.in_dim = in_dim;
        b.num_classes = num_classes;
        b.x.assign(x.begin(), x.begin() + b.n * in_dim);
        b.y.assign(y.begin(), y.begin() + b.n);
        return b;
    }
};

// ---------------------------------------------------------------------------
// Checkpoint and dataset I/O
// ---------------------------------------------------------------------------

/// Binary layout: for each layer, rows*cols little-endian f32 weights
/// (row-major) followed by rows f32 biases. Shapes live in the JSON sidecar.
inline SurrogateModel load_checkpoint(const std::string& bin_path,
                                      const std::string& sidecar_path) {
    std::ifstream side(sidecar_path);
    if (!side) throw ConfigError("cannot open checkpoint sidecar: " + sidecar_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(side);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(msg_cat("parse error in ", sidecar_path, ": ", e.what()));
    }

    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw ConfigError("cannot open checkpoint: " + bin_path);

    SurrogateModel m;
    auto read_f32 = [&](std::size_t count) {
        std::vector<float> buf(count);
        bin.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(count * sizeof(float)));
        if (!bin) throw ConfigError("checkpoint truncated: " + bin_path);
        return std::vector<double>(buf.begin(), buf.end());
    };
    try {
        for (const auto& js : j.at("layers")) {
            DenseLayer l;
            l.rows = js.at("rows").get<std::int64_t>();
            l.cols = js.at("cols").get<std::int64_t>();
            l.w = read_f32(static_cast<std::size_t>(l.rows * l.cols));
            l.b = read_f32(static_cast<std::size_t>(l.rows));
            m.layers.push_back(std::move(l));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(msg_cat("checkpoint sidecar: ", e.what()));
    }
    bin.peek();
    if (!bin.eof()) throw ConfigError("checkpoint has trailing bytes: " + bin_path);
    m.validate();
    m.refresh_scales();
    return m;
}

inline void save_checkpoint(const SurrogateModel& m, const std::string& bin_path,
                            const std::string& sidecar_path) {
    nlohmann::ordered_json j;
    j["layers"] = nlohmann::ordered_json::array();
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw ConfigError("cannot write checkpoint: " + bin_path);
    for (const auto& l : m.layers) {
        j["layers"].push_back({{"rows", l.rows}, {"cols", l.cols}});
        auto write_f32 = [&](const std::vector<double>& v) {
            std::vector<float> buf(v.begin(), v.end());
            bin.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size() * sizeof(float)));
        };
        write_f32(l.w);
        write_f32(l.b);
    }
    std::ofstream side(sidecar_path);
    if (!side) throw ConfigError("cannot write checkpoint sidecar: " + sidecar_path);
    side << j.dump(2) << "\n";
}

/// CSV rows: feature values then an integer class label, no header.
inline Batch load_dataset_csv(const std::string& path, std::int64_t in_dim,
                              std::int64_t num_classes) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset: " + path);
    Batch b;
    b.in_dim = in_dim;
    b.num_classes = num_classes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string field;
        std::vector<double> vals;
        while (std::getline(fields, field, ',')) {
            try {
                vals.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw ConfigError(msg_cat(path, ":", line_no, ": bad value \"", field, "\""));
            }
        }
        if (vals.size() != static_cast<std::size_t>(in_dim + 1))
            throw ConfigError(msg_cat(path, ":", line_no, ": expected ", in_dim + 1, " fields"));
        for (std::int64_t d = 0; d < in_dim; ++d) b.x.push_back(vals[d]);
        const int label = static_cast<int>(vals.back());
        if (label < 0 || label >= num_classes)
            throw ConfigError(msg_cat(path, ":", line_no, ": label out of range"));
        b.y.push_back(label);
        ++b.n;
    }
    if (b.n == 0) throw ConfigError("dataset is empty: " + path);
    return b;
}

/// Shape-only view of the surrogate as a mappable workload; all layers are
/// static linear ops.
inline Workload model_workload(const SurrogateModel& m, const std::string& name,
                               std::int64_t input_vectors) {
    Workload w;
    w.name = name;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        LayerSpec s;
        s.name = "fc" + std::to_string(l + 1);
        s.op_kind = OpKind::Linear;
        s.rows = m.layers[l].rows;
        s.cols = m.layers[l].cols;
        s.input_vectors = input_vectors;
        s.weight_dynamic = false;
        w.layers.push_back(s);
    }
    w.validate();
    return w;
}

// ---------------------------------------------------------------------------
// Evaluation under a row assignment
// ---------------------------------------------------------------------------

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
    double perplexity = 0.0; // exp(mean cross-entropy)
    double acc0 = 0.0;
    double ppl0 = 0.0;
    double gap = 0.0;     // acc0 - accuracy
    double ppl_gap = 0.0; // perplexity - ppl0
};

/// Which quality number the degradation bound tau refers to.
enum class QualityMetric { Accuracy, Perplexity };

inline double quality_gap(const EvalResult& r, QualityMetric m) {
    return m == QualityMetric::Accuracy ? r.gap : r.ppl_gap;
}

namespace detail {

/// Weights as they look on silicon: quantized at each row's tier precision,
/// ReRAM rows carrying one conductance-noise draw for this evaluation.
inline std::vector<DenseLayer> materialize_weights(const SurrogateModel& model,
                                                   const RowAssignment& assignment,
                                                   const std::vector<TierSpec>& tiers,
                                                   const NoiseConfig& noise,
                                                   std::uint64_t seed) {
    std::vector<DenseLayer> out(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const DenseLayer& src = model.layers[l];
        DenseLayer& dst = out[l];
        dst.rows = src.rows;
        dst.cols = src.cols;
        dst.b = src.b; // biases stay digital
        dst.w.resize(src.w.size());
        const double scale = model.weight_scale[l];
        RngStream reram_stream(seed, 0x5245u, static_cast<std::uint64_t>(l));
        for (std::int64_t r = 0; r < src.rows; ++r) {
            const TierId tier = assignment.rows[l][static_cast<std::size_t>(r)];
            const TierSpec& spec = tiers[static_cast<std::size_t>(tier)];
            std::vector<double> row(src.row(r).begin(), src.row(r).end());
            if (scale > 0.0) {
                QuantSpec q{spec.weight_bits, true, scale};
                row = quantize(row, q);
            }
            if (tier == TierId::ReRAM)
                row = perturb_reram_weights(row, scale, noise, reram_stream);
            std::copy(row.begin(), row.end(), dst.w.begin() + r * src.cols);
        }
    }
    return out;
}

inline int argmax(std::span<const double> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace detail

/// Evaluates the model with rows mapped per `assignment`: every row is
/// quantized at its tier's precision, ReRAM rows get conductance noise, and
/// inputs feeding photonic rows get relative Gaussian noise while rows on
/// other tiers of the same layer see clean inputs. Pure function of
/// (model, batch, assignment, configs, seed).
///
/// `baseline` carries the cached clean all-SRAM reference (acc0/ppl0); pass
/// zeros when computing the baseline itself.
inline EvalResult forward(const SurrogateModel& model, const Batch& batch,
                          const RowAssignment& assignment, const std::vector<TierSpec>& tiers,
                          const NoiseConfig& noise, std::uint64_t seed,
                          const EvalResult& baseline = {}) {
    require(assignment.rows.size() == model.layers.size(),
            "forward: assignment/model layer mismatch");
    for (std::size_t l = 0; l < model.layers.size(); ++l)
        require(assignment.rows[l].size() == static_cast<std::size_t>(model.layers[l].rows),
                msg_cat("forward: assignment covers ", assignment.rows[l].size(),
                        " rows of layer ", l, ", expected ", model.layers[l].rows));
    require(batch.in_dim == model.in_dim() && batch.num_classes == model.out_dim(),
            "forward: batch/model shape mismatch");

    const auto weights = detail::materialize_weights(model, assignment, tiers, noise, seed);

    std::vector<bool> layer_has_photonic(model.layers.size(), false);
    for (std::size_t l = 0; l < model.layers.size(); ++l)
        for (TierId t : assignment.rows[l])
            if (t == TierId::Photonic) layer_has_photonic[l] = true;

    std::vector<RngStream> photon_streams;
    photon_streams.reserve(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l)
        photon_streams.emplace_back(seed, 0x5048u, static_cast<std::uint64_t>(l));

    double loss_sum = 0.0;
    std::int64_t correct = 0;
    std::vector<double> act, next, noisy_in;
    for (std::int64_t i = 0; i < batch.n; ++i) {
        act.assign(batch.sample(i).begin(), batch.sample(i).end());
        for (std::size_t l = 0; l < weights.size(); ++l) {
            const DenseLayer& layer = weights[l];
            const bool last = l + 1 == weights.size();
            if (layer_has_photonic[l])
                noisy_in = perturb_photonic_inputs(act, noise.photonic_sigma, photon_streams[l]);
            next.assign(static_cast<std::size_t>(layer.rows), 0.0);
            for (std::int64_t r = 0; r < layer.rows; ++r) {
                const bool photonic_row =
                    assignment.rows[l][static_cast<std::size_t>(r)] == TierId::Photonic;
                const double* in = photonic_row ? noisy_in.data() : act.data();
                const double* wr = layer.w.data() + r * layer.cols;
                double acc = layer.b[static_cast<std::size_t>(r)];
                for (std::int64_t c = 0; c < layer.cols; ++c) acc += wr[c] * in[c];
                next[static_cast<std::size_t>(r)] = acc;
            }
            if (!last)
                for (double& v : next) v = v > 0.0 ? v : 0.0;
            act.swap(next);
        }
        // softmax cross-entropy, max-shifted
        const double zmax = *std::max_element(act.begin(), act.end());
        double denom = 0.0;
        for (double v : act) denom += std::exp(v - zmax);
        const int label = batch.y[static_cast<std::size_t>(i)];
        loss_sum += -(act[static_cast<std::size_t>(label)] - zmax - std::log(denom));
        if (detail::argmax(act) == label) ++correct;
    }

    EvalResult r;
    r.loss = loss_sum / static_cast<double>(batch.n);
    r.accuracy = static_cast<double>(correct) / static_cast<double>(batch.n);
    r.perplexity = std::exp(r.loss);
    r.acc0 = baseline.acc0;
    r.ppl0 = baseline.ppl0;
    r.gap = r.acc0 - r.accuracy;
    r.ppl_gap = r.perplexity - r.ppl0;
    return r;
}

// ---------------------------------------------------------------------------
// Gradients and row sensitivity
// ---------------------------------------------------------------------------

struct Gradients {
    std::vector<std::vector<double>> dw; // per layer, row-major rows x cols
    std::vector<std::vector<double>> db;
};

namespace detail {

/// One backprop pass; accumulates mean-reduced gradients into `grad` and,
/// when `fisher` is non-null, per-sample squared gradients (empirical
/// Fisher) into it.
inline void backprop_accumulate(const SurrogateModel& model, const Batch& batch,
                                Gradients& grad, Gradients* fisher) {
    const std::size_t L = model.layers.size();
    const double inv_n = 1.0 / static_cast<double>(batch.n);

    std::vector<std::vector<double>> acts(L + 1), pre(L);
    std::vector<std::vector<double>> delta(L);
    for (std::int64_t i = 0; i < batch.n; ++i) {
        acts[0].assign(batch.sample(i).begin(), batch.sample(i).end());
        for (std::size_t l = 0; l < L; ++l) {
            const DenseLayer& layer = model.layers[l];
            pre[l].assign(static_cast<std::size_t>(layer.rows), 0.0);
            for (std::int64_t r = 0; r < layer.rows; ++r) {
                const double* wr = layer.w.data() + r * layer.cols;
                double acc = layer.b[static_cast<std::size_t>(r)];
                for (std::int64_t c = 0; c < layer.cols; ++c) acc += wr[c] * acts[l][c];
                pre[l][static_cast<std::size_t>(r)] = acc;
            }
            acts[l + 1] = pre[l];
            if (l + 1 < L)
                for (double& v : acts[l + 1]) v = v > 0.0 ? v : 0.0;
        }

        // dL/dz at the head: softmax(z) - onehot(y)
        std::vector<double>& z = acts[L];
        const double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double v : z) denom += std::exp(v - zmax);
        delta[L - 1].resize(z.size());
        for (std::size_t k = 0; k < z.size(); ++k)
            delta[L - 1][k] = std::exp(z[k] - zmax) / denom;
        delta[L - 1][static_cast<std::size_t>(batch.y[static_cast<std::size_t>(i)])] -= 1.0;

        for (std::size_t lp = L; lp-- > 0;) {
            const DenseLayer& layer = model.layers[lp];
            for (std::int64_t r = 0; r < layer.rows; ++r) {
                const double d = delta[lp][static_cast<std::size_t>(r)];
                double* gw = grad.dw[lp].data() + r * layer.cols;
                double* fw = fisher ? fisher->dw[lp].data() + r * layer.cols : nullptr;
                for (std::int64_t c = 0; c < layer.cols; ++c) {
                    const double g = d * acts[lp][static_cast<std::size_t>(c)];
                    gw[c] += g * inv_n;
                    if (fw) fw[c] += g * g * inv_n;
                }
                grad.db[lp][static_cast<std::size_t>(r)] += d * inv_n;
                if (fisher) fisher->db[lp][static_cast<std::size_t>(r)] += d * d * inv_n;
            }
            if (lp == 0) break;
            const DenseLayer& cur = model.layers[lp];
            delta[lp - 1].assign(static_cast<std::size_t>(cur.cols), 0.0);
            for (std::int64_t r = 0; r < cur.rows; ++r) {
                const double d = delta[lp][static_cast<std::size_t>(r)];
                const double* wr = cur.w.data() + r * cur.cols;
                for (std::int64_t c = 0; c < cur.cols; ++c)
                    delta[lp - 1][static_cast<std::size_t>(c)] += wr[c] * d;
            }
            for (std::size_t c = 0; c < delta[lp - 1].size(); ++c)
                if (pre[lp - 1][c] <= 0.0) delta[lp - 1][c] = 0.0;
        }
    }
}

inline Gradients zero_like(const SurrogateModel& model) {
    Gradients g;
    for (const auto& l : model.layers) {
        g.dw.emplace_back(static_cast<std::size_t>(l.rows * l.cols), 0.0);
        g.db.emplace_back(static_cast<std::size_t>(l.rows), 0.0);
    }
    return g;
}

} // namespace detail

/// Mean-reduced analytic gradients of the cross-entropy loss on the clean
/// (unquantized) model.
inline Gradients gradients(const SurrogateModel& model, const Batch& batch) {
    Gradients g = detail::zero_like(model);
    detail::backprop_accumulate(model, batch, g, nullptr);
    return g;
}

/// Mean and mean-square (empirical Fisher) gradients in one pass.
inline std::pair<Gradients, Gradients> gradients_with_fisher(const SurrogateModel& model,
                                                             const Batch& batch) {
    Gradients g = detail::zero_like(model);
    Gradients f = detail::zero_like(model);
    detail::backprop_accumulate(model, batch, g, &f);
    return {std::move(g), std::move(f)};
}

/// Loss on clean weights; finite-difference and perturbation oracles use it.
inline double loss_only(const SurrogateModel& model, const Batch& batch) {
    double loss_sum = 0.0;
    std::vector<double> act, next;
    for (std::int64_t i = 0; i < batch.n; ++i) {
        act.assign(batch.sample(i).begin(), batch.sample(i).end());
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            const DenseLayer& layer = model.layers[l];
            next.assign(static_cast<std::size_t>(layer.rows), 0.0);
            for (std::int64_t r = 0; r < layer.rows; ++r) {
                const double* wr = layer.w.data() + r * layer.cols;
                double acc = layer.b[static_cast<std::size_t>(r)];
                for (std::int64_t c = 0; c < layer.cols; ++c) acc += wr[c] * act[c];
                next[static_cast<std::size_t>(r)] = acc;
            }
            if (l + 1 < model.layers.size())
                for (double& v : next) v = v > 0.0 ? v : 0.0;
            act.swap(next);
        }
        const double zmax = *std::max_element(act.begin(), act.end());
        double denom = 0.0;
        for (double v : act) denom += std::exp(v - zmax);
        loss_sum += -(act[static_cast<std::size_t>(batch.y[static_cast<std::size_t>(i)])] -
                      zmax - std::log(denom));
    }
    return loss_sum / static_cast<double>(batch.n);
}

/// Per-layer per-row sensitivity scores.
struct SensitivityProfile {
    std::vector<std::vector<double>> s; // [layer][row]
    int num_probes = 0;
    double perturb_std = 0.0;

    void validate_against(const Workload& w) const {
        require(s.size() == w.layers.size(), "sensitivity profile: layer count mismatch");
        for (std::size_t l = 0; l < s.size(); ++l)
            require(s[l].size() == static_cast<std::size_t>(w.layers[l].rows),
                    msg_cat("sensitivity profile: layer ", l, " row count mismatch"));
    }
};

/// Second-order Taylor sensitivity of each weight row under Gaussian
/// perturbations: S = mean over probes of g'dW + 0.5 h'dW^2, with g the
/// row gradient and h the diagonal empirical-Fisher Hessian surrogate.
/// The first-order term vanishes in expectation, leaving 0.5 sum(h) std^2.
inline SensitivityProfile row_sensitivity(const SurrogateModel& model, const Batch& batch,
                                          int probes, double perturb_std,
                                          std::uint64_t seed) {
    require(probes >= 1, "row_sensitivity: probes must be >= 1");
    require(perturb_std > 0.0, "row_sensitivity: perturb_std must be > 0");
    auto [grad, fisher] = gradients_with_fisher(model, batch);

    SensitivityProfile prof;
    prof.num_probes = probes;
    prof.perturb_std = perturb_std;
    prof.s.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const DenseLayer& layer = model.layers[l];
        prof.s[l].resize(static_cast<std::size_t>(layer.rows));
        for (std::int64_t r = 0; r < layer.rows; ++r) {
            RngStream rng(seed, 0x53454eu, static_cast<std::uint64_t>(l),
                          static_cast<std::uint64_t>(r));
            const double* g = grad.dw[l].data() + r * layer.cols;
            const double* h = fisher.dw[l].data() + r * layer.cols;
            double sum = 0.0;
            for (int p = 0; p < probes; ++p) {
                double sp = 0.0;
                for (std::int64_t c = 0; c < layer.cols; ++c) {
                    const double d = rng.normal(0.0, perturb_std);
                    sp += g[c] * d + 0.5 * h[c] * d * d;
                }
                sum += sp;
            }
            prof.s[l][static_cast<std::size_t>(r)] = sum / static_cast<double>(probes);
        }
    }
    return prof;
}

// ---------------------------------------------------------------------------
// Cached-baseline evaluator and tier fidelity ordering
// ---------------------------------------------------------------------------

/// Binds model, batch and configs; computes the clean all-SRAM baseline once
/// and stamps acc0/ppl0 into every result.
class SurrogateEvaluator {
public:
    SurrogateEvaluator(SurrogateModel model, Batch batch, std::vector<TierSpec> tiers,
                       NoiseConfig noise)
        : model_(std::move(model)), batch_(std::move(batch)), tiers_(std::move(tiers)),
          noise_(noise) {
        noise_.validate();
        model_.validate();
        if (model_.weight_scale.size() != model_.layers.size()) model_.refresh_scales();
        RowAssignment all_sram;
        for (const auto& l : model_.layers)
            all_sram.rows.emplace_back(static_cast<std::size_t>(l.rows), TierId::SRAM);
        baseline_ = forward(model_, batch_, all_sram, tiers_, noise_, /*seed=*/0);
        baseline_.acc0 = baseline_.accuracy;
        baseline_.ppl0 = baseline_.perplexity;
        baseline_.gap = 0.0;
        baseline_.ppl_gap = 0.0;
    }

    EvalResult evaluate(const RowAssignment& assignment, std::uint64_t seed) const {
        return forward(model_, batch_, assignment, tiers_, noise_, seed, baseline_);
    }

    double acc0() const { return baseline_.acc0; }
    double ppl0() const { return baseline_.ppl0; }
    const std::vector<TierSpec>& tiers() const { return tiers_; }
    const NoiseConfig& noise() const { return noise_; }
    const SurrogateModel& model() const { return model_; }
    const Batch& batch() const { return batch_; }

private:
    SurrogateModel model_;
    Batch batch_;
    std::vector<TierSpec> tiers_;
    NoiseConfig noise_;
    EvalResult baseline_;
};

/// Tiers sorted best to worst by homogeneous-mapping accuracy, measured as
/// the mean over `draws` noise realizations; ties broken by lower
/// homogeneous energy on the model's own workload, then tier index.
inline std::vector<TierId> tier_fidelity_order(const SurrogateEvaluator& ev,
                                               std::uint64_t seed, int draws = 5) {
    require(draws >= 1, "tier_fidelity_order: draws must be >= 1");
    const SurrogateModel& model = ev.model();
    const Workload w = model_workload(model, "fidelity-probe", ev.batch().n);

    struct Entry {
        TierId tier;
        double accuracy;
        double energy;
    };
    std::vector<Entry> entries;
    for (TierId t : kAllTiers) {
        const RowAssignment a = homogeneous_assignment(w, t);
        double acc_sum = 0.0;
        for (int k = 0; k < draws; ++k)
            acc_sum += ev.evaluate(a, derive_seed(seed, static_cast<std::uint64_t>(t),
                                                  static_cast<std::uint64_t>(k)))
                            .accuracy;
        double energy = 0.0;
        for (const auto& layer : w.layers)
            energy += tier_energy(ev.tiers()[static_cast<std::size_t>(t)], layer, layer.rows);
        entries.push_back({t, acc_sum / static_cast<double>(draws), energy});
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
        if (a.energy != b.energy) return a.energy < b.energy;
        return static_cast<int>(a.tier) < static_cast<int>(b.tier);
    });
    std::vector<TierId> order;
    for (const auto& e : entries) order.push_back(e.tier);
    return order;
}

} // namespace tiermap

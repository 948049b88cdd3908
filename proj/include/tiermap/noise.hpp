// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tiermap/errors.hpp"
#include "tiermap/rng.hpp"

namespace tiermap {

/// Device non-ideality constants. Conductance noise acts on the ReRAM tier,
/// relative Gaussian input noise on the photonic tier; SRAM stays clean.
struct NoiseConfig {
    double temperature_k = 300.0;
    double freq_hz = 1e8;
    double read_voltage_v = 0.2;
    double g_max_s = 1e-6;
    double photonic_sigma = 0.0031;
    double boltzmann_k = 1.380649e-23;
    double electron_q = 1.602177e-19;
    std::uint64_t seed = 0;

    void validate() const {
        if (temperature_k <= 0 || read_voltage_v <= 0 || photonic_sigma < 0 ||
            freq_hz <= 0 || g_max_s <= 0)
            throw ConfigError("noise config: temperature, voltage, frequency and g_max "
                              "must be positive; photonic_sigma non-negative");
    }
};

/// Uniform symmetric per-tensor quantizer. The grid step is
/// per_tensor_scale / (2^(bits-1) - 1).
struct QuantSpec {
    int bits = 8;
    bool symmetric = true;
    double per_tensor_scale = 1.0;

    void validate() const {
        if (bits < 1 || bits > 8) throw ContractError("quant spec: bits must be in [1,8]");
        if (per_tensor_scale <= 0) throw ContractError("quant spec: scale must be > 0");
    }

    double step() const {
        const double levels = static_cast<double>((1 << (bits - 1)) - 1);
        return per_tensor_scale / (levels > 0 ? levels : 1.0);
    }
};

struct ReramNoiseStd {
    double thermal = 0.0;
    double shot = 0.0;
    double combined_variance() const { return thermal * thermal + shot * shot; }
};

/// Thermal and shot conductance-noise standard deviations at conductance g:
///   thermal_std = sqrt(4 g Freq K_B T / V),  shot_std = sqrt(2 g Freq q / V).
/// Note the voltage divisor is taken verbatim from the device model even
/// though the units do not close dimensionally.
inline ReramNoiseStd reram_noise_std(double g, const NoiseConfig& cfg) {
    require(g >= 0.0, "reram_noise_std: conductance must be non-negative");
    ReramNoiseStd s;
    s.thermal = std::sqrt(4.0 * g * cfg.freq_hz * cfg.boltzmann_k * cfg.temperature_k /
                          cfg.read_voltage_v);
    s.shot = std::sqrt(2.0 * g * cfg.freq_hz * cfg.electron_q / cfg.read_voltage_v);
    return s;
}

/// One combined conductance-noise draw at conductance g; thermal and shot
/// components are independent.
inline double sample_reram_noise(double g, const NoiseConfig& cfg, RngStream& rng) {
    const ReramNoiseStd s = reram_noise_std(g, cfg);
    const double thermal = rng.normal(0.0, s.thermal);
    const double shot = rng.normal(0.0, s.shot);
    return thermal + shot;
}

/// Perturbs one already-quantized weight row with conductance noise.
/// |w| maps linearly onto [0, g_max] with w_max at g_max; the sign is kept
/// digitally (differential-pair abstraction) and the perturbed conductance
/// maps back on the same scale.
inline std::vector<double> perturb_reram_weights(std::span<const double> w_row,
                                                 double w_max, const NoiseConfig& cfg,
                                                 RngStream& rng) {
    std::vector<double> out(w_row.begin(), w_row.end());
    if (w_max <= 0.0) return out; // all-zero tensor, nothing to map
    const double to_g = cfg.g_max_s / w_max;
    for (double& w : out) {
        const double g = std::abs(w) * to_g;
        const double g_noisy = g + sample_reram_noise(g, cfg, rng);
        const double sign = w < 0.0 ? -1.0 : 1.0;
        w = sign * g_noisy / to_g;
    }
    return out;
}

/// Relative Gaussian input noise x~ = x + N(0, (sigma |x|)^2); zeros pass
/// through untouched.
inline std::vector<double> perturb_photonic_inputs(std::span<const double> x, double sigma,
                                                   RngStream& rng) {
    require(sigma >= 0.0, "perturb_photonic_inputs: sigma must be non-negative");
    std::vector<double> out(x.begin(), x.end());
    for (double& v : out) v += rng.normal(0.0, sigma * std::abs(v));
    return out;
}

inline double quantize_value(double x, const QuantSpec& spec) {
    spec.validate();
    const double step = spec.step();
    const double levels = static_cast<double>((1 << (spec.bits - 1)) - 1);
    double code = std::round(x / step);
    if (code > levels) code = levels;
    if (code < -levels) code = -levels;
    return code * step;
}

inline std::vector<double> quantize(std::span<const double> x, const QuantSpec& spec) {
    spec.validate();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = quantize_value(x[i], spec);
    return out;
}

} // namespace tiermap

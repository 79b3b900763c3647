#pragma once

#include <complex>
#include <string>

#include "feinfn/layers.hpp"

namespace feinfn {

enum class DecoderActivation { kGabor, kRelu, kGelu, kLeakyRelu };

DecoderActivation decoder_activation_from_string(const std::string& s);
std::string to_string(DecoderActivation a);

struct GaborParams {
    double omega0 = 10.0;    // center angular frequency
    double upsilon0 = 10.0;  // Gaussian spread
    bool trainable = false;

    void validate() const;
};

/// Scalar complex Gabor wavelet G(x) = exp(j*omega0*Re(x)) * exp(-|upsilon0*x|^2).
std::complex<double> gabor_scalar(std::complex<double> x, const GaborParams& params);

struct SpreadResult {
    double sigma_t = 0.0;      // time-domain standard deviation of |G|^2
    double sigma_omega = 0.0;  // frequency-domain standard deviation
    double product = 0.0;      // uncertainty product sigma_t * sigma_omega
    i64 time_samples = 0;      // quadrature diagnostics
    double tail_mass = 0.0;    // energy fraction at the grid edges (should be ~0)
};

/// Numerically integrate the wavelet's energy density and its spectrum to get
/// the joint time-frequency spread. Throws a runtime error with diagnostics if
/// the quadrature grid cannot resolve the requested parameters.
SpreadResult time_frequency_spread(const GaborParams& params);

/// Dual-stream interactive decoder: three blocks of cross-coupled linear maps
/// with complex wavelet activation, then a real projection of the summed
/// streams. The first block's maps are real (its inputs are); streams are
/// complex from the first activation on. The activation is swappable for the
/// ablation harness (non-Gabor choices act componentwise on re and im).
struct SfidDecoder {
    struct ComplexBlock {
        nn::ComplexLinear w_s, u_s, w_f, u_f;
    };
    i64 channels = 31;
    DecoderActivation activation = DecoderActivation::kGabor;
    GaborParams gabor_params;
    nn::Var omega, upsilon;                    // single-element Vars
    nn::Linear w_s0, u_s0, w_f0, u_f0;         // block 1
    ComplexBlock blocks[2];                    // blocks 2 and 3
    nn::Var out_w_re, out_w_im;                // (channels, out_bands)
    nn::Var out_bias;                          // (out_bands), real

    static SfidDecoder create(nn::ParamStore& params, const std::string& prefix, i64 channels,
                              i64 out_bands, const GaborParams& gabor, DecoderActivation activation,
                              Rng& rng);

    /// eps_s, eps_f: (Q, channels) -> residual pixels (Q, out_bands).
    nn::Var apply(const nn::Var& eps_s, const nn::Var& eps_f) const;
};

}  // namespace feinfn

#include "feinfn/decoder.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace feinfn {

using nn::CVar;
using nn::Var;

DecoderActivation decoder_activation_from_string(const std::string& s) {
    if (s == "gabor") return DecoderActivation::kGabor;
    if (s == "relu") return DecoderActivation::kRelu;
    if (s == "gelu") return DecoderActivation::kGelu;
    if (s == "leaky_relu") return DecoderActivation::kLeakyRelu;
    throw std::invalid_argument("unknown decoder activation: " + s);
}

std::string to_string(DecoderActivation a) {
    switch (a) {
        case DecoderActivation::kGabor: return "gabor";
        case DecoderActivation::kRelu: return "relu";
        case DecoderActivation::kGelu: return "gelu";
        case DecoderActivation::kLeakyRelu: return "leaky_relu";
    }
    return "?";
}

void GaborParams::validate() const {
    if (!(omega0 > 0.0) || !(upsilon0 > 0.0) || !std::isfinite(omega0) || !std::isfinite(upsilon0)) {
        throw std::invalid_argument("wavelet parameters must be positive and finite");
    }
}

std::complex<double> gabor_scalar(std::complex<double> x, const GaborParams& params) {
    const double mag2 = std::norm(x) * params.upsilon0 * params.upsilon0;
    const double env = std::exp(-mag2);
    const double arg = params.omega0 * x.real();
    return {env * std::cos(arg), env * std::sin(arg)};
}

SpreadResult time_frequency_spread(const GaborParams& params) {
    params.validate();
    const double w0 = params.omega0, u0 = params.upsilon0;

    // Time grid: +-6/upsilon covers the Gaussian envelope; step fine enough to
    // resolve the fastest oscillation probed by the frequency sweep.
    const double t_span = 6.0 / u0;
    const double omega_span = 8.0 * u0;
    const double omega_max = std::abs(w0) + omega_span;
    const double dt_osc = std::numbers::pi / (8.0 * omega_max);
    const double dt_env = (1.0 / (2.0 * u0)) / 64.0;
    const double dt = std::min(dt_osc, dt_env);
    const i64 nt = 2 * static_cast<i64>(std::ceil(t_span / dt)) + 1;
    constexpr i64 kMaxSamples = 4'000'000;
    if (nt > kMaxSamples) {
        std::ostringstream os;
        os << "time-frequency quadrature cannot resolve omega0=" << w0 << " upsilon0=" << u0
           << ": needs " << nt << " samples (cap " << kMaxSamples << ")";
        throw std::runtime_error(os.str());
    }

    std::vector<double> t(static_cast<std::size_t>(nt)), gre(t.size()), gim(t.size()), p(t.size());
    const double half = static_cast<double>(nt - 1) / 2.0;
    for (i64 i = 0; i < nt; ++i) {
        const double ti = (static_cast<double>(i) - half) * dt;
        const auto g = gabor_scalar({ti, 0.0}, params);
        t[static_cast<std::size_t>(i)] = ti;
        gre[static_cast<std::size_t>(i)] = g.real();
        gim[static_cast<std::size_t>(i)] = g.imag();
        p[static_cast<std::size_t>(i)] = std::norm(g);
    }

    auto trapezoid = [&](auto f) {
        double acc = 0.5 * (f(0) + f(nt - 1));
        for (i64 i = 1; i + 1 < nt; ++i) acc += f(i);
        return acc * dt;
    };

    SpreadResult r;
    r.time_samples = nt;
    const double norm_t = trapezoid([&](i64 i) { return p[static_cast<std::size_t>(i)]; });
    const double cen_t =
        trapezoid([&](i64 i) { return t[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(i)]; }) / norm_t;
    const double var_t = trapezoid([&](i64 i) {
                             const double d = t[static_cast<std::size_t>(i)] - cen_t;
                             return d * d * p[static_cast<std::size_t>(i)];
                         }) /
                         norm_t;
    r.sigma_t = std::sqrt(var_t);
    r.tail_mass = (p.front() + p.back()) * dt / norm_t;

    // Spectrum on a grid centered at omega0.
    const i64 nw = 4001;
    const double dw = 2.0 * omega_span / static_cast<double>(nw - 1);
    std::vector<double> spec(static_cast<std::size_t>(nw));
    for (i64 k = 0; k < nw; ++k) {
        const double wk = w0 - omega_span + static_cast<double>(k) * dw;
        double sre = 0.0, sim = 0.0;
        for (i64 i = 0; i < nt; ++i) {
            const double ang = -wk * t[static_cast<std::size_t>(i)];
            const double cre = std::cos(ang), cim = std::sin(ang);
            const double scale = (i == 0 || i == nt - 1) ? 0.5 : 1.0;
            sre += scale * (gre[static_cast<std::size_t>(i)] * cre - gim[static_cast<std::size_t>(i)] * cim);
            sim += scale * (gre[static_cast<std::size_t>(i)] * cim + gim[static_cast<std::size_t>(i)] * cre);
        }
        spec[static_cast<std::size_t>(k)] = (sre * sre + sim * sim) * dt * dt;
    }
    double norm_w = 0.0, cen_w = 0.0;
    for (i64 k = 0; k < nw; ++k) {
        const double scale = (k == 0 || k == nw - 1) ? 0.5 : 1.0;
        norm_w += scale * spec[static_cast<std::size_t>(k)];
    }
    norm_w *= dw;
    if (!(norm_w > 0.0) || !std::isfinite(norm_w)) {
        throw std::runtime_error("time-frequency quadrature produced a degenerate spectrum");
    }
    for (i64 k = 0; k < nw; ++k) {
        const double wk = w0 - omega_span + static_cast<double>(k) * dw;
        const double scale = (k == 0 || k == nw - 1) ? 0.5 : 1.0;
        cen_w += scale * wk * spec[static_cast<std::size_t>(k)];
    }
    cen_w = cen_w * dw / norm_w;
    double var_w = 0.0;
    for (i64 k = 0; k < nw; ++k) {
        const double wk = w0 - omega_span + static_cast<double>(k) * dw;
        const double d = wk - cen_w;
        const double scale = (k == 0 || k == nw - 1) ? 0.5 : 1.0;
        var_w += scale * d * d * spec[static_cast<std::size_t>(k)];
    }
    var_w = var_w * dw / norm_w;
    r.sigma_omega = std::sqrt(var_w);
    r.product = r.sigma_t * r.sigma_omega;
    return r;
}

namespace {

CVar activate(const CVar& x, const SfidDecoder& d) {
    switch (d.activation) {
        case DecoderActivation::kGabor: return nn::gabor(x, d.omega, d.upsilon);
        case DecoderActivation::kRelu: return {nn::relu(x.re), nn::relu(x.im)};
        case DecoderActivation::kGelu: return {nn::gelu(x.re), nn::gelu(x.im)};
        case DecoderActivation::kLeakyRelu:
            return {nn::leaky_relu(x.re, 0.01), nn::leaky_relu(x.im, 0.01)};
    }
    throw std::logic_error("unhandled activation");
}

}  // namespace

SfidDecoder SfidDecoder::create(nn::ParamStore& params, const std::string& prefix, i64 channels,
                                i64 out_bands, const GaborParams& gabor, DecoderActivation activation,
                                Rng& rng) {
    gabor.validate();
    if (channels < 1 || out_bands < 1) throw std::invalid_argument("decoder widths must be positive");
    SfidDecoder d;
    d.channels = channels;
    d.activation = activation;
    d.gabor_params = gabor;
    if (gabor.trainable) {
        d.omega = params.create_full(prefix + ".omega", {1}, gabor.omega0);
        d.upsilon = params.create_full(prefix + ".upsilon", {1}, gabor.upsilon0);
    } else {
        d.omega = nn::constant(Tensor::full({1}, gabor.omega0));
        d.upsilon = nn::constant(Tensor::full({1}, gabor.upsilon0));
    }
    d.w_s0 = nn::Linear::create(params, prefix + ".b0.w_s", channels, channels, rng);
    d.u_s0 = nn::Linear::create(params, prefix + ".b0.u_s", channels, channels, rng);
    d.w_f0 = nn::Linear::create(params, prefix + ".b0.w_f", channels, channels, rng);
    d.u_f0 = nn::Linear::create(params, prefix + ".b0.u_f", channels, channels, rng);
    for (int b = 0; b < 2; ++b) {
        const std::string bp = prefix + ".b" + std::to_string(b + 1);
        d.blocks[b].w_s = nn::ComplexLinear::create(params, bp + ".w_s", channels, channels, rng);
        d.blocks[b].u_s = nn::ComplexLinear::create(params, bp + ".u_s", channels, channels, rng);
        d.blocks[b].w_f = nn::ComplexLinear::create(params, bp + ".w_f", channels, channels, rng);
        d.blocks[b].u_f = nn::ComplexLinear::create(params, bp + ".u_f", channels, channels, rng);
    }
    d.out_w_re = params.create_fan_in(prefix + ".out.w_re", {channels, out_bands}, channels, rng);
    d.out_w_im = params.create_fan_in(prefix + ".out.w_im", {channels, out_bands}, channels, rng);
    d.out_bias = params.create_fan_in(prefix + ".out.bias", {out_bands}, channels, rng);
    return d;
}

Var SfidDecoder::apply(const Var& eps_s, const Var& eps_f) const {
    if (eps_s.shape() != eps_f.shape() || eps_s.shape().size() != 2 || eps_s.shape()[1] != channels) {
        throw std::invalid_argument("decoder inputs must both be (q, " + std::to_string(channels) +
                                    "), got " + shape_to_string(eps_s.shape()) + " and " +
                                    shape_to_string(eps_f.shape()));
    }
    // Block 1: real maps, complex output through the activation.
    CVar h_s = activate({add(w_s0.apply(eps_s), u_s0.apply(eps_f)),
                         nn::constant(Tensor::zeros(eps_s.shape()))},
                        *this);
    CVar h_f = activate({add(w_f0.apply(eps_f), u_f0.apply(eps_s)),
                         nn::constant(Tensor::zeros(eps_s.shape()))},
                        *this);
    // Blocks 2..3: symmetric cross-coupling on the previous block's streams.
    for (const auto& blk : blocks) {
        CVar a_s = nn::cadd(blk.w_s.apply(h_s), blk.u_s.apply(h_f));
        CVar a_f = nn::cadd(blk.w_f.apply(h_f), blk.u_f.apply(h_s));
        h_s = activate(a_s, *this);
        h_f = activate(a_f, *this);
    }
    CVar sum = nn::cadd(h_s, h_f);
    Var out = sub(matmul(sum.re, out_w_re), matmul(sum.im, out_w_im));
    return add_bias(out, out_bias);
}

}  // namespace feinfn

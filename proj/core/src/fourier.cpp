#include "feinfn/fourier.hpp"

#include <stdexcept>

namespace feinfn {

double wrap_phase(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a > std::numbers::pi) a -= two_pi;
    if (a <= -std::numbers::pi) a += two_pi;
    return a;
}

SpectrumPatch fft2_patch(const Tensor& patch) {
    if (patch.rank() != 3) throw std::invalid_argument("fft2_patch: expected (H, W, C) tensor");
    i64 h = patch.dim(0), w = patch.dim(1), c = patch.dim(2);
    if (h < 1 || w < 1) throw std::invalid_argument("fft2_patch: empty spatial extent");

    std::vector<double> re, im;
    detail::dft2<double>(patch.data(), nullptr, h, w, c, re, im, false);

    SpectrumPatch out;
    out.amplitude = Tensor::zeros({h, w, c});
    out.phase = Tensor::zeros({h, w, c});
    for (i64 i = 0; i < patch.size(); ++i) {
        out.amplitude[i] = std::hypot(re[static_cast<size_t>(i)], im[static_cast<size_t>(i)]);
        out.phase[i] = std::atan2(im[static_cast<size_t>(i)], re[static_cast<size_t>(i)]);
    }
    return out;
}

InversePatch ifft2_patch(const SpectrumPatch& spec) {
    if (!spec.amplitude.same_shape(spec.phase))
        throw std::invalid_argument("ifft2_patch: amplitude/phase shape mismatch");
    if (spec.amplitude.rank() != 3) throw std::invalid_argument("ifft2_patch: expected (H, W, C) tensors");
    i64 h = spec.amplitude.dim(0), w = spec.amplitude.dim(1), c = spec.amplitude.dim(2);

    std::vector<double> re_in(static_cast<size_t>(spec.amplitude.size()));
    std::vector<double> im_in(re_in.size());
    for (i64 i = 0; i < spec.amplitude.size(); ++i) {
        re_in[static_cast<size_t>(i)] = spec.amplitude[i] * std::cos(spec.phase[i]);
        im_in[static_cast<size_t>(i)] = spec.amplitude[i] * std::sin(spec.phase[i]);
    }

    std::vector<double> re, im;
    detail::dft2<double>(re_in.data(), im_in.data(), h, w, c, re, im, true);

    InversePatch out;
    out.real = Tensor::zeros({h, w, c});
    out.max_imag_residual = 0.0;
    for (i64 i = 0; i < out.real.size(); ++i) {
        out.real[i] = re[static_cast<size_t>(i)];
        out.max_imag_residual = std::max(out.max_imag_residual, std::abs(im[static_cast<size_t>(i)]));
    }
    return out;
}

}  // namespace feinfn

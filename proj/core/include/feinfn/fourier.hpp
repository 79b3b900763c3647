#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "feinfn/tensor.hpp"

namespace feinfn {

/// Amplitude/phase split of the 2-D spectrum of a real (H, W, C) patch.
/// Convention: forward transform unnormalized, inverse divided by H*W.
/// Phase values lie in (-pi, pi].
struct SpectrumPatch {
    Tensor amplitude;  // (H, W, C), nonnegative
    Tensor phase;      // (H, W, C), radians
};

struct InversePatch {
    Tensor real;                // (H, W, C)
    double max_imag_residual;   // diagnostic: largest |imag| discarded
};

SpectrumPatch fft2_patch(const Tensor& patch);
InversePatch ifft2_patch(const SpectrumPatch& spec);

/// Wrap an angle into (-pi, pi].
double wrap_phase(double a);

namespace detail {

// Twiddle factor exp(i * sgn * 2pi * m / n) with exact values at quarter
// turns. Bins of a real input that are mathematically real then carry an
// imaginary part of exactly +0.0, which pins their phase to atan2's
// principal value (0 or +pi) instead of letting trig roundoff pick a side
// of the branch cut.
inline void twiddle(int64_t m, int64_t n, double sgn, double& c, double& s) {
    const int64_t r = m % n;
    if ((4 * r) % n == 0) {
        switch ((4 * r) / n) {
            case 0: c = 1.0; s = 0.0; return;
            case 1: c = 0.0; s = sgn; return;
            case 2: c = -1.0; s = 0.0; return;
            default: c = 0.0; s = -sgn; return;
        }
    }
    const double ang = sgn * 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n);
    c = std::cos(ang);
    s = std::sin(ang);
}

// Row-column direct DFT over the two leading spatial axes of an (H, W, C)
// buffer. Templated so precision behavior can be exercised at both float and
// double. inverse=true applies the conjugate transform and the 1/(H*W) factor.
template <typename T>
void dft2(const T* re_in, const T* im_in, int64_t h, int64_t w, int64_t c,
          std::vector<T>& re_out, std::vector<T>& im_out, bool inverse) {
    const size_t n = static_cast<size_t>(h * w * c);
    re_out.assign(n, T(0));
    im_out.assign(n, T(0));
    const double sgn = inverse ? 1.0 : -1.0;

    // Transform along columns (axis 1) first.
    std::vector<T> tre(n, T(0)), tim(n, T(0));
    std::vector<double> cw(static_cast<size_t>(w) * static_cast<size_t>(w));
    std::vector<double> sw(cw.size());
    for (int64_t k = 0; k < w; ++k)
        for (int64_t x = 0; x < w; ++x) {
            twiddle(k * x, w, sgn, cw[static_cast<size_t>(k * w + x)],
                    sw[static_cast<size_t>(k * w + x)]);
        }
    for (int64_t i = 0; i < h; ++i)
        for (int64_t k = 0; k < w; ++k)
            for (int64_t x = 0; x < w; ++x) {
                double cr = cw[static_cast<size_t>(k * w + x)];
                double ci = sw[static_cast<size_t>(k * w + x)];
                const T* pr = re_in + (i * w + x) * c;
                const T* pi = im_in ? im_in + (i * w + x) * c : nullptr;
                T* qr = tre.data() + (i * w + k) * c;
                T* qi = tim.data() + (i * w + k) * c;
                for (int64_t ch = 0; ch < c; ++ch) {
                    double xr = static_cast<double>(pr[ch]);
                    double xi = pi ? static_cast<double>(pi[ch]) : 0.0;
                    qr[ch] += static_cast<T>(xr * cr - xi * ci);
                    qi[ch] += static_cast<T>(xr * ci + xi * cr);
                }
            }

    // Then along rows (axis 0).
    std::vector<double> chh(static_cast<size_t>(h) * static_cast<size_t>(h));
    std::vector<double> shh(chh.size());
    for (int64_t k = 0; k < h; ++k)
        for (int64_t y = 0; y < h; ++y) {
            twiddle(k * y, h, sgn, chh[static_cast<size_t>(k * h + y)],
                    shh[static_cast<size_t>(k * h + y)]);
        }
    for (int64_t k = 0; k < h; ++k)
        for (int64_t y = 0; y < h; ++y) {
            double cr = chh[static_cast<size_t>(k * h + y)];
            double ci = shh[static_cast<size_t>(k * h + y)];
            for (int64_t j = 0; j < w; ++j) {
                const T* pr = tre.data() + (y * w + j) * c;
                const T* pi = tim.data() + (y * w + j) * c;
                T* qr = re_out.data() + (k * w + j) * c;
                T* qi = im_out.data() + (k * w + j) * c;
                for (int64_t ch = 0; ch < c; ++ch) {
                    double xr = static_cast<double>(pr[ch]);
                    double xi = static_cast<double>(pi[ch]);
                    qr[ch] += static_cast<T>(xr * cr - xi * ci);
                    qi[ch] += static_cast<T>(xr * ci + xi * cr);
                }
            }
        }

    if (inverse) {
        T norm = static_cast<T>(1.0 / static_cast<double>(h * w));
        for (size_t i = 0; i < n; ++i) {
            re_out[i] *= norm;
            im_out[i] *= norm;
        }
    }
}

}  // namespace detail

}  // namespace feinfn

#include "feinfn/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace feinfn {

void HyperspectralImage::validate() const {
    if (data.rank() != 3) throw std::invalid_argument("image '" + name + "': data must be (h, w, bands)");
    if (bands() < 1) throw std::invalid_argument("image '" + name + "': needs at least one band");
    for (i64 i = 0; i < data.size(); ++i) {
        double v = data[i];
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("image '" + name + "': value outside [0,1]");
    }
    if (!band_wavelengths.empty()) {
        if (static_cast<i64>(band_wavelengths.size()) != bands())
            throw std::invalid_argument("image '" + name + "': wavelength count != band count");
        for (size_t i = 1; i < band_wavelengths.size(); ++i)
            if (band_wavelengths[i] <= band_wavelengths[i - 1])
                throw std::invalid_argument("image '" + name + "': wavelengths not strictly increasing");
    }
}

HyperspectralImage make_image(Tensor data, std::string name, std::vector<double> wavelengths) {
    HyperspectralImage img;
    img.data = std::move(data);
    img.name = std::move(name);
    img.band_wavelengths = std::move(wavelengths);
    return img;
}

namespace {

// Keys cubic-convolution kernel, a = -0.5 (reproduces linear ramps exactly).
double cubic_kernel(double s) {
    constexpr double a = -0.5;
    s = std::abs(s);
    if (s <= 1.0) return ((a + 2.0) * s - (a + 3.0)) * s * s + 1.0;
    if (s < 2.0) return ((a * s - 5.0 * a) * s + 8.0 * a) * s - 4.0 * a;
    return 0.0;
}

struct Taps {
    i64 idx[4];
    double w[4];
};

// Pixel-center mapping: output center (o + 0.5) * in/out - 0.5 in input
// pixel units, taps clamped to the edge.
std::vector<Taps> make_taps(i64 n_in, i64 n_out) {
    std::vector<Taps> taps(static_cast<size_t>(n_out));
    double scale = static_cast<double>(n_in) / static_cast<double>(n_out);
    for (i64 o = 0; o < n_out; ++o) {
        double u = (static_cast<double>(o) + 0.5) * scale - 0.5;
        i64 base = static_cast<i64>(std::floor(u));
        double t = u - static_cast<double>(base);
        Taps& tp = taps[static_cast<size_t>(o)];
        for (int k = 0; k < 4; ++k) {
            i64 src = base - 1 + k;
            tp.idx[k] = std::clamp<i64>(src, 0, n_in - 1);
            tp.w[k] = cubic_kernel(t - static_cast<double>(k - 1));
        }
    }
    return taps;
}

}  // namespace

Tensor bicubic_resample_raw(const Tensor& hwc, i64 out_height, i64 out_width) {
    if (hwc.rank() != 3) throw std::invalid_argument("bicubic_resample: expected (h, w, bands)");
    if (out_height < 1 || out_width < 1)
        throw std::invalid_argument("bicubic_resample: target dimensions must be positive");
    i64 h = hwc.dim(0), w = hwc.dim(1), c = hwc.dim(2);
    if (h < 1 || w < 1) throw std::invalid_argument("bicubic_resample: empty source");

    auto col_taps = make_taps(w, out_width);
    auto row_taps = make_taps(h, out_height);

    // Horizontal pass then vertical pass.
    Tensor mid = Tensor::zeros({h, out_width, c});
    for (i64 i = 0; i < h; ++i) {
        const double* src = hwc.data() + i * w * c;
        double* dst = mid.data() + i * out_width * c;
        for (i64 j = 0; j < out_width; ++j) {
            const Taps& tp = col_taps[static_cast<size_t>(j)];
            for (i64 ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += tp.w[k] * src[tp.idx[k] * c + ch];
                dst[j * c + ch] = acc;
            }
        }
    }

    Tensor out = Tensor::zeros({out_height, out_width, c});
    for (i64 i = 0; i < out_height; ++i) {
        const Taps& tp = row_taps[static_cast<size_t>(i)];
        double* dst = out.data() + i * out_width * c;
        for (i64 j = 0; j < out_width; ++j)
            for (i64 ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += tp.w[k] * mid.data()[(tp.idx[k] * out_width + j) * c + ch];
                dst[j * c + ch] = acc;
            }
    }
    return out;
}

HyperspectralImage bicubic_resample(const HyperspectralImage& image, i64 out_height, i64 out_width) {
    Tensor t = bicubic_resample_raw(image.data, out_height, out_width);
    for (i64 i = 0; i < t.size(); ++i) t[i] = std::clamp(t[i], 0.0, 1.0);
    HyperspectralImage out;
    out.data = std::move(t);
    out.band_wavelengths = image.band_wavelengths;
    out.name = image.name;
    return out;
}

void save_raw_container(const HyperspectralImage& image, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_raw_container: cannot open " + path);
    std::uint32_t header[4] = {kRawContainerMagic, static_cast<std::uint32_t>(image.height()),
                               static_cast<std::uint32_t>(image.width()),
                               static_cast<std::uint32_t>(image.bands())};
    f.write(reinterpret_cast<const char*>(header), sizeof(header));
    std::vector<float> buf(static_cast<size_t>(image.data.size()));
    for (i64 i = 0; i < image.data.size(); ++i) buf[static_cast<size_t>(i)] = static_cast<float>(image.data[i]);
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) throw std::runtime_error("save_raw_container: write failed for " + path);
}

HyperspectralImage load_raw_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_raw_container: cannot open " + path);
    std::uint32_t header[4] = {0, 0, 0, 0};
    f.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!f || header[0] != kRawContainerMagic)
        throw std::runtime_error("load_raw_container: bad magic in " + path);
    i64 h = header[1], w = header[2], c = header[3];
    if (h < 1 || w < 1 || c < 1) throw std::runtime_error("load_raw_container: bad dimensions in " + path);
    std::vector<float> buf(static_cast<size_t>(h * w * c));
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) throw std::runtime_error("load_raw_container: truncated data in " + path);

    HyperspectralImage img;
    img.data = Tensor::zeros({h, w, c});
    for (i64 i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(buf[static_cast<size_t>(i)]);
    img.name = path;
    return img;
}

}  // namespace feinfn

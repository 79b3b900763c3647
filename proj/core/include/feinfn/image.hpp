#pragma once

#include <string>
#include <vector>

#include "feinfn/tensor.hpp"

namespace feinfn {

/// A multi-band raster in [0,1], stored channels-last as (height, width, bands).
struct HyperspectralImage {
    Tensor data;
    std::vector<double> band_wavelengths;  // optional, nm, strictly increasing
    std::string name;
    double normalization_scale = 1.0;  // raw max divided out at load time

    i64 height() const { return data.rank() == 3 ? data.dim(0) : 0; }
    i64 width() const { return data.rank() == 3 ? data.dim(1) : 0; }
    i64 bands() const { return data.rank() == 3 ? data.dim(2) : 0; }

    /// Enforces the type invariants: 3-D data, at least one band, values in
    /// [0,1], wavelengths (when present) one per band and strictly increasing.
    void validate() const;
};

HyperspectralImage make_image(Tensor data, std::string name = "",
                              std::vector<double> wavelengths = {});

/// One training/evaluation unit: the degraded pair plus its reference.
struct FusionTriplet {
    HyperspectralImage lr_hsi;
    HyperspectralImage hr_msi;
    HyperspectralImage gt;
};

/// Per-band cubic-convolution (Keys a = -0.5) resampling with pixel-center
/// alignment and clamp-to-edge taps. The public form clips to [0,1]; the raw
/// form keeps overshoots and backs the resampling-identity tests.
Tensor bicubic_resample_raw(const Tensor& hwc, i64 out_height, i64 out_width);
HyperspectralImage bicubic_resample(const HyperspectralImage& image, i64 out_height, i64 out_width);

/// Raw binary container: 16-byte header of four little-endian uint32 values
/// (magic "HSI1" = 0x31495348, height, width, bands) followed by row-major
/// (height, width, bands) float32 samples. Wavelength metadata is not stored.
void save_raw_container(const HyperspectralImage& image, const std::string& path);
HyperspectralImage load_raw_container(const std::string& path);

constexpr std::uint32_t kRawContainerMagic = 0x31495348u;  // "HSI1"

}  // namespace feinfn

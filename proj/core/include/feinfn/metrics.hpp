#pragma once

#include <string>
#include <vector>

#include "feinfn/image.hpp"
#include "feinfn/tensor.hpp"

namespace feinfn {

/// Peak signal-to-noise ratio over the global MSE of all pixels and bands,
/// capped at 100 dB when MSE drops below 1e-10.
double psnr(const Tensor& pred, const Tensor& gt, double peak = 1.0);

/// Mean per-pixel spectral angle in degrees. Pixels where either spectrum has
/// zero norm are skipped and counted (arccos is undefined there); an all-skip
/// input reports 0 degrees with skip_fraction 1.
struct SamResult {
    double degrees = 0.0;
    i64 skipped = 0;
    double skip_fraction = 0.0;
};
SamResult sam_detailed(const Tensor& pred, const Tensor& gt);
double sam(const Tensor& pred, const Tensor& gt);

/// ERGAS with ratio = LR/HR pixel size (1/scale for integer scales). Bands
/// whose reference mean is zero are excluded and counted; all-excluded input
/// reports 0.
struct ErgasResult {
    double value = 0.0;
    i64 excluded_bands = 0;
};
ErgasResult ergas_detailed(const Tensor& pred, const Tensor& gt, double ratio);
double ergas(const Tensor& pred, const Tensor& gt, double ratio);

/// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5) on the valid region,
/// C1=(0.01*peak)^2, C2=(0.03*peak)^2, computed per band and averaged.
double ssim(const Tensor& pred, const Tensor& gt, double peak = 1.0);

/// Per-pixel mean absolute error across bands: (h, w).
Tensor error_map(const Tensor& pred, const Tensor& gt);

struct SceneMetrics {
    std::string name;
    double psnr = 0.0;
    double sam = 0.0;
    double ergas = 0.0;
    double ssim = 0.0;
};

SceneMetrics evaluate_scene(const std::string& name, const Tensor& pred, const Tensor& gt,
                            i64 scale);

/// Per-scene rows plus mean and (sample) standard deviation per metric.
struct MetricReport {
    std::vector<SceneMetrics> per_scene;

    SceneMetrics mean() const;
    SceneMetrics stddev() const;
    std::string to_json() const;
    /// Plain-text table with a trailing "mean ± std" row.
    std::string to_table() const;
};

}  // namespace feinfn

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "feinfn/image.hpp"
#include "feinfn/tensor.hpp"

namespace feinfn {

/// Dataset ingestion / simulation failure (unreadable or inconsistent files,
/// missing bands). Distinct from std::invalid_argument so callers can map it
/// to a dedicated exit code.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Multispectral spectral response: each row mixes the hyperspectral bands
/// into one broad band.
struct SpectralResponse {
    Tensor matrix;  // (msi_bands, hsi_bands), rows sum to 1

    i64 msi_bands() const { return matrix.dim(0); }
    i64 hsi_bands() const { return matrix.dim(1); }
    void validate() const;  // nonnegative, row sums within 1e-9 of 1

    /// Default response: the band axis split into `msi_bands` contiguous
    /// groups (lowest wavelengths first), uniform weight inside each group.
    static SpectralResponse grouped(i64 msi_bands, i64 hsi_bands);
    /// CSV matrix, one response row per line.
    static SpectralResponse from_csv(const std::string& path);
};

enum class PadMode { kReflect, kPeriodic };

/// Separable truncated Gaussian blur over the two leading axes of an
/// (h, w, bands) cube; kernel radius floor(2*sigma), taps normalized to 1.
Tensor gaussian_blur(const Tensor& hwc, double sigma, PadMode pad);

/// Wald-protocol degradation: blur + stride-`scale` decimation (sample offset
/// (scale-1)/2) makes the LR cube; the spectral response applied per pixel
/// makes the MSI. blur_sigma < 0 picks the default scale/2. Both outputs are
/// clipped to [0,1].
std::pair<HyperspectralImage, HyperspectralImage> wald_simulate(
    const HyperspectralImage& gt, i64 scale, const SpectralResponse& srf, double blur_sigma = -1.0,
    PadMode pad = PadMode::kReflect);

HyperspectralImage crop_image(const HyperspectralImage& img, i64 top, i64 left, i64 height,
                              i64 width);

/// Seeded synthetic scenes: three smooth endmember spectra mixed by abundance
/// maps (an oriented edge, a blob, a sinusoidal texture), bit-reproducible
/// for a fixed spec.
struct SyntheticSpec {
    i64 count = 4;
    i64 height = 64;
    i64 width = 64;
    i64 bands = 31;
    std::uint64_t seed = 0;
};
std::vector<HyperspectralImage> make_synthetic_scenes(const SyntheticSpec& spec);

enum class DatasetLayout { kBandPngs, kMultibandTiff, kSynthetic };
DatasetLayout layout_from_string(const std::string& s);
std::string to_string(DatasetLayout layout);

struct SplitSpec {
    enum class Side { kAll, kTrain, kTest };
    Side side = Side::kAll;
    std::vector<std::string> train_names;  // explicit split when non-empty
    std::vector<std::string> test_names;   // optional explicit complement
    i64 train_count = -1;                  // >= 0: seeded random split
    std::uint64_t seed = 0;

    /// {"train": [...]} and/or {"test": [...]}, or
    /// {"train_count": N, "seed": S}.
    static SplitSpec from_json_file(const std::string& path);
};

/// Deterministic partition of name-sorted scenes; the two sides are always
/// disjoint. Unknown or duplicated explicit names raise DataError.
std::pair<std::vector<std::string>, std::vector<std::string>> split_scene_names(
    std::vector<std::string> names, const SplitSpec& spec);

struct DatasetOptions {
    DatasetLayout layout = DatasetLayout::kSynthetic;
    SyntheticSpec synthetic;   // kSynthetic only
    i64 crop_top_left = 0;     // > 0: keep the top-left square of this size
    i64 round_to_multiple = 0; // > 0: center-crop dims to this multiple
};

/// Loads the scenes selected by `split` (layout-dependent discovery under
/// `root`), max-normalized to [0,1] per scene with the divisor recorded on
/// the image. Ordering is name-sorted and deterministic.
std::vector<HyperspectralImage> load_dataset(const std::string& root, const DatasetOptions& opts,
                                             const SplitSpec& split);

/// Reproducible random crops; each triplet's LR/MSI pair is the Wald
/// simulation of its own GT patch.
std::vector<FusionTriplet> sample_patches(const std::vector<HyperspectralImage>& images,
                                          i64 patch_hr, i64 scale, const SpectralResponse& srf,
                                          i64 count, std::uint64_t seed, double blur_sigma = -1.0,
                                          PadMode pad = PadMode::kReflect);

}  // namespace feinfn

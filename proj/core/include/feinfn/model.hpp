#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "feinfn/config.hpp"
#include "feinfn/decoder.hpp"
#include "feinfn/encoders.hpp"
#include "feinfn/iff.hpp"
#include "feinfn/image.hpp"
#include "feinfn/optim.hpp"

namespace feinfn {

enum class LossKind { kL1, kL2 };
enum class UpsampleKind { kInr, kBilinear, kBicubic, kPixelShuffle };

LossKind loss_from_string(const std::string& s);
UpsampleKind upsample_from_string(const std::string& s);
std::string to_string(LossKind k);
std::string to_string(UpsampleKind k);

struct LoadedModel;

struct OptimizerConfig {
    double lr = 1e-4;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct SchedulerConfig {
    i64 t_max = 80000;
    double eta_min = 1e-6;
};

struct FusionConfig {
    double scale = 4.0;
    i64 bands = 31;      // S: hyperspectral band count
    i64 msi_bands = 3;   // s: multispectral band count
    EncoderConfig encoder;  // in_channels is derived per encoder
    i64 iff_hidden = 32;
    i64 decoder_channels = 31;
    GaborParams gabor;
    int pe_levels = 10;
    LossKind loss = LossKind::kL1;
    OptimizerConfig optimizer;
    SchedulerConfig scheduler;
    std::uint64_t seed = 0;
    i64 query_chunk = 256;
    DecoderActivation activation = DecoderActivation::kGabor;
    UpsampleKind upsample = UpsampleKind::kInr;
    bool spatial_branch = true;
    bool frequency_branch = true;

    void validate() const;
    /// Round-trips through the [model]/[optimizer]/[scheduler] sections.
    void write_to(ConfigMap& cfg) const;
    static FusionConfig read_from(const ConfigMap& cfg);
};

/// The full fusion network: encoders, implicit fusion function, decoder (or a
/// conventional upsampling head when configured for the ablation matrix), and
/// the bicubic residual base.
class FusionModel {
public:
    explicit FusionModel(const FusionConfig& config);

    const FusionConfig& config() const { return config_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    i64 parameter_count() const { return params_.total_size(); }
    std::string summary() const;

    struct Prediction {
        nn::Var output;    // (Q, S): residual + bicubic base, on the tape
        nn::Var residual;  // (Q, S)
        Tensor base;       // (Q, S) bicubic values at the query pixels
    };

    /// Tape-building forward. lr_hwc: (h, w, S); msi_hwc: (out_h, out_w, s).
    /// query_rows: flat pixel indices into the (out_h, out_w) grid; null means
    /// every pixel in row-major order.
    Prediction predict(const Tensor& lr_hwc, const Tensor& msi_hwc, i64 out_h, i64 out_w,
                       const std::vector<i64>* query_rows = nullptr) const;

    /// Gradient-free full-image forward, chunked by config.query_chunk.
    /// clip=true clamps to [0,1] (evaluation mode).
    Tensor forward_tensor(const Tensor& lr_hwc, const Tensor& msi_hwc, i64 out_h, i64 out_w,
                          bool clip) const;
    HyperspectralImage forward_image(const HyperspectralImage& lr_hsi,
                                     const HyperspectralImage& hr_msi, bool clip) const;

    void save(const std::string& path, const std::string& rng_state,
              const std::string& version) const;
    static LoadedModel load(const std::string& path);

private:
    struct Encoded {
        nn::Var z_spe;  // (1, h, w, C)
        nn::Var z_spa;  // (1, H, W, C)
        Tensor up;      // (H, W, S) clipped bicubic base
        CoordinateGrid lr_grid, hr_grid;
    };
    Encoded encode(const Tensor& lr_hwc, const Tensor& msi_hwc, i64 out_h, i64 out_w) const;
    Prediction predict_rows(const Encoded& enc, const std::vector<i64>& rows) const;

    FusionConfig config_;
    nn::ParamStore params_;
    ResidualEncoder spectral_enc_, spatial_enc_;
    IffParams iff_;
    SfidDecoder decoder_;
    // Conventional-upsampling ablation head (unused under kInr):
    nn::Conv2d shuffle_head_;
    nn::Conv2d fuse1_, fuse2_;
    bool has_inr_ = true;
};

struct LoadedModel {
    FusionModel model;
    std::string rng_state;
    std::string version;
};

/// Mean elementwise loss between a prediction on the tape and a target.
nn::Var fusion_loss(const nn::Var& pred, const Tensor& target, LossKind kind);

class NonFiniteLossError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainStepResult {
    i64 step = 0;
    double loss = 0.0;
    double lr = 0.0;
};

/// Single-writer training loop helper: forward/backward over a batch of
/// triplets, then one scheduled AdamW update.
class Trainer {
public:
    explicit Trainer(FusionModel& model);

    /// query_rows_per_sample: optional per-sample query subsets (sampled
    /// pixels); null trains on every HR pixel of each triplet.
    TrainStepResult step(const std::vector<FusionTriplet>& batch,
                         const std::vector<std::vector<i64>>* query_rows_per_sample = nullptr);
    i64 step_count() const { return opt_.steps_taken(); }
    double lr_at(i64 step) const { return sched_.lr_at(step); }

private:
    FusionModel& model_;
    nn::AdamW opt_;
    nn::CosineSchedule sched_;
};

}  // namespace feinfn

#pragma once

#include <string>
#include <vector>

#include "feinfn/grid.hpp"
#include "feinfn/image.hpp"
#include "feinfn/layers.hpp"

namespace feinfn {

/// Per-pixel feature map produced by an encoder, paired with the pixel-center
/// coordinate grid it lives on.
struct LatentField {
    Tensor features;  // (height, width, channels)
    CoordinateGrid grid;
    i64 channels = 0;
};

struct EncoderConfig {
    i64 in_channels = 31;
    i64 base_channels = 128;
    i64 num_residual_blocks = 8;
    i64 kernel_size = 3;
    nn::Padding padding = nn::Padding::kZero;

    void validate() const;
};

/// Residual convolutional feature extractor: head conv to base_channels, N
/// (conv-ReLU-conv + identity) blocks without normalization, tail conv, and a
/// global skip from the head output to the tail input. No resolution change.
struct ResidualEncoder {
    EncoderConfig config;
    nn::Conv2d head;
    std::vector<std::pair<nn::Conv2d, nn::Conv2d>> blocks;
    nn::Conv2d tail;

    static ResidualEncoder create(nn::ParamStore& params, const std::string& prefix,
                                  const EncoderConfig& config, Rng& rng);

    /// x: (n, h, w, in_channels) -> (n, h, w, base_channels)
    nn::Var apply(const nn::Var& x) const;
};

/// Encode the LR hyperspectral cube into its latent field.
LatentField encode_spectral(const HyperspectralImage& lr_hsi, const ResidualEncoder& encoder);

/// Encode Cat(upsampled LR-HSI, HR-MSI) into the HR latent field. The
/// upsampled cube comes first in the channel concatenation.
LatentField encode_spatial(const HyperspectralImage& up_lr_hsi, const HyperspectralImage& hr_msi,
                           const ResidualEncoder& encoder);

/// Graph-building variants used during training: input already on the tape.
nn::Var encode_field(const nn::Var& x, const ResidualEncoder& encoder);

Tensor image_as_batch(const HyperspectralImage& img);  // (h,w,c) -> (1,h,w,c)

}  // namespace feinfn

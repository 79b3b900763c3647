#include "feinfn/encoders.hpp"

#include <stdexcept>

namespace feinfn {

using nn::Var;

void EncoderConfig::validate() const {
    if (in_channels < 1 || base_channels < 1 || num_residual_blocks < 1 || kernel_size < 1) {
        throw std::invalid_argument("encoder config fields must be positive");
    }
    if (kernel_size % 2 == 0) throw std::invalid_argument("encoder kernel_size must be odd");
}

ResidualEncoder ResidualEncoder::create(nn::ParamStore& params, const std::string& prefix,
                                        const EncoderConfig& config, Rng& rng) {
    config.validate();
    ResidualEncoder e;
    e.config = config;
    const i64 k = config.kernel_size;
    e.head = nn::Conv2d::create(params, prefix + ".head", k, k, config.in_channels,
                                config.base_channels, rng, config.padding);
    for (i64 b = 0; b < config.num_residual_blocks; ++b) {
        const std::string bp = prefix + ".block" + std::to_string(b);
        auto c1 = nn::Conv2d::create(params, bp + ".conv1", k, k, config.base_channels,
                                     config.base_channels, rng, config.padding);
        auto c2 = nn::Conv2d::create(params, bp + ".conv2", k, k, config.base_channels,
                                     config.base_channels, rng, config.padding);
        e.blocks.emplace_back(std::move(c1), std::move(c2));
    }
    e.tail = nn::Conv2d::create(params, prefix + ".tail", k, k, config.base_channels,
                                config.base_channels, rng, config.padding);
    return e;
}

Var ResidualEncoder::apply(const Var& x) const {
    if (x.shape().size() != 4 || x.shape()[3] != config.in_channels) {
        throw std::invalid_argument("encoder input must be (n, h, w, " +
                                    std::to_string(config.in_channels) + "), got " +
                                    shape_to_string(x.shape()));
    }
    Var h = head.apply(x);
    Var f = h;
    for (const auto& [c1, c2] : blocks) {
        f = add(f, c2.apply(relu(c1.apply(f))));
    }
    return add(tail.apply(f), h);
}

Var encode_field(const Var& x, const ResidualEncoder& encoder) { return encoder.apply(x); }

Tensor image_as_batch(const HyperspectralImage& img) {
    Tensor t = img.data;
    t.reshape_in_place({1, img.height(), img.width(), img.bands()});
    return t;
}

namespace {

LatentField field_from(const Tensor& batch) {
    LatentField f;
    const i64 h = batch.dim(1), w = batch.dim(2), c = batch.dim(3);
    Tensor feat = batch;
    feat.reshape_in_place({h, w, c});
    f.features = std::move(feat);
    f.grid = make_coord_grid(h, w);
    f.channels = c;
    return f;
}

}  // namespace

LatentField encode_spectral(const HyperspectralImage& lr_hsi, const ResidualEncoder& encoder) {
    nn::NoGradGuard ng;
    Var x = nn::constant(image_as_batch(lr_hsi));
    return field_from(encoder.apply(x).value());
}

LatentField encode_spatial(const HyperspectralImage& up_lr_hsi, const HyperspectralImage& hr_msi,
                           const ResidualEncoder& encoder) {
    if (up_lr_hsi.height() != hr_msi.height() || up_lr_hsi.width() != hr_msi.width()) {
        throw std::invalid_argument("spatial encoder inputs must share spatial shape");
    }
    nn::NoGradGuard ng;
    Var a = nn::constant(image_as_batch(up_lr_hsi));
    Var b = nn::constant(image_as_batch(hr_msi));
    Var x = nn::concat({a, b}, 3);
    return field_from(encoder.apply(x).value());
}

}  // namespace feinfn

#include "feinfn/iff.hpp"

#include <cmath>
#include <stdexcept>

namespace feinfn {

using nn::Var;

void IffConfig::validate() const {
    if (latent_channels < 1 || out_bands < 1 || hidden < 1 || pe_levels < 1) {
        throw std::invalid_argument("fusion function config fields must be positive");
    }
    if (!spatial_branch && !frequency_branch) {
        throw std::invalid_argument("at least one fusion branch must be enabled");
    }
}

namespace {

/// Index of the grid pixel whose center is nearest to a [-1,1] coordinate.
i64 nearest_index(double coord, i64 n) {
    const double idx = ((coord + 1.0) * static_cast<double>(n) - 1.0) / 2.0;
    i64 r = static_cast<i64>(std::llround(idx));
    if (r < 0) r = 0;
    if (r >= n) r = n - 1;
    return r;
}

}  // namespace

QueryBatch build_query_batch(const std::vector<std::array<double, 2>>& queries,
                             const CoordinateGrid& lr_grid, const CoordinateGrid& hr_grid,
                             int pe_levels) {
    if (queries.empty()) throw std::invalid_argument("query batch must contain at least one query");
    const i64 q = static_cast<i64>(queries.size());
    QueryBatch batch;
    batch.count = q;
    batch.spe_rows.reserve(q * 4);
    batch.spa_rows.reserve(q * 4);
    batch.patch_rows.reserve(q * 16);
    batch.delta = Tensor({q * 4, 2});
    batch.pe = Tensor({q * 4, 4 * static_cast<i64>(pe_levels)});
    batch.areas = Tensor({q, 4});

    for (i64 i = 0; i < q; ++i) {
        const NeighborSet ns = gather_neighbors(queries[static_cast<std::size_t>(i)], lr_grid);
        const auto norm = ns.normalized_areas();
        for (int k = 0; k < 4; ++k) {
            const i64 row = ns.indices[k][0] * lr_grid.width + ns.indices[k][1];
            batch.spe_rows.push_back(row);

            const i64 flat = i * 4 + k;
            batch.delta.at({flat, 0}) = ns.delta[k][0];
            batch.delta.at({flat, 1}) = ns.delta[k][1];
            const auto enc = positional_encoding(ns.delta[k], pe_levels);
            for (std::size_t e = 0; e < enc.size(); ++e) {
                batch.pe.at({flat, static_cast<i64>(e)}) = enc[e];
            }
            batch.areas.at({i, k}) = norm[k];

            // HR latent row nearest the (clamped) neighbor center.
            const double cr = queries[static_cast<std::size_t>(i)][0] -
                              ns.delta[k][0] * lr_grid.pitch_row() / 2.0;
            const double cc = queries[static_cast<std::size_t>(i)][1] -
                              ns.delta[k][1] * lr_grid.pitch_col() / 2.0;
            const i64 hr_r = nearest_index(cr, hr_grid.height);
            const i64 hr_c = nearest_index(cc, hr_grid.width);
            batch.spa_rows.push_back(hr_r * hr_grid.width + hr_c);
        }

        // 4x4 HR window around the query's own pixel: offsets -1..+2, clamped.
        const i64 qr = nearest_index(queries[static_cast<std::size_t>(i)][0], hr_grid.height);
        const i64 qc = nearest_index(queries[static_cast<std::size_t>(i)][1], hr_grid.width);
        for (i64 dr = -1; dr <= 2; ++dr) {
            for (i64 dc = -1; dc <= 2; ++dc) {
                i64 rr = qr + dr, cc2 = qc + dc;
                if (rr < 0) rr = 0;
                if (rr >= hr_grid.height) rr = hr_grid.height - 1;
                if (cc2 < 0) cc2 = 0;
                if (cc2 >= hr_grid.width) cc2 = hr_grid.width - 1;
                batch.patch_rows.push_back(rr * hr_grid.width + cc2);
            }
        }
    }
    return batch;
}

Var high_pass(const Var& latent) { return sub(latent, nn::box3_mean(latent)); }

QueryCodes gather_codes(const QueryBatch& batch, const Var& lr_latent, const Var& hr_latent) {
    const auto& sl = lr_latent.shape();
    const auto& sh = hr_latent.shape();
    if (sl.size() != 4 || sh.size() != 4 || sl[0] != 1 || sh[0] != 1) {
        throw std::invalid_argument("latent maps must be (1, h, w, c)");
    }
    if (sl[3] != sh[3]) throw std::invalid_argument("latent channel counts must match");
    const i64 c = sl[3];
    const i64 q = batch.count;

    Var hp = high_pass(lr_latent);
    Var lr_rows = nn::reshape(lr_latent, {sl[1] * sl[2], c});
    Var hp_rows = nn::reshape(hp, {sl[1] * sl[2], c});
    Var hr_rows = nn::reshape(hr_latent, {sh[1] * sh[2], c});

    QueryCodes codes;
    codes.z_spe = nn::reshape(nn::gather_rows(lr_rows, batch.spe_rows), {q, 4, c});
    codes.z_hp = nn::reshape(nn::gather_rows(hp_rows, batch.spe_rows), {q, 4, c});
    codes.z_spa = nn::reshape(nn::gather_rows(hr_rows, batch.spa_rows), {q, 4, c});
    codes.z_patch = nn::reshape(nn::gather_rows(hr_rows, batch.patch_rows), {q, 4, 4, c});
    return codes;
}

IffParams IffParams::create(nn::ParamStore& params, const std::string& prefix,
                            const IffConfig& config, Rng& rng) {
    config.validate();
    IffParams p;
    p.config = config;
    const i64 in = config.spatial_in_dim();
    const i64 hid = config.hidden;
    const i64 out2 = 2 * config.out_bands;  // score logits ++ values
    p.theta[0] = nn::Linear::create(params, prefix + ".theta0", in, hid, rng);
    p.theta[1] = nn::Linear::create(params, prefix + ".theta1", hid, hid, rng);
    p.theta[2] = nn::Linear::create(params, prefix + ".theta2", hid, hid, rng);
    p.theta[3] = nn::Linear::create(params, prefix + ".theta3", hid, out2, rng);
    const i64 fin = config.frequency_in_channels();
    p.alpha1 = nn::Conv2d::create(params, prefix + ".alpha1", 1, 1, fin, hid, rng, nn::Padding::kZero);
    p.alpha2 = nn::Conv2d::create(params, prefix + ".alpha2", 1, 1, hid, out2, rng, nn::Padding::kZero);
    p.beta1 = nn::Conv2d::create(params, prefix + ".beta1", 3, 3, fin, hid, rng, nn::Padding::kZero);
    p.beta2 = nn::Conv2d::create(params, prefix + ".beta2", 3, 3, hid, out2, rng, nn::Padding::kZero);
    return p;
}

namespace {

/// Split per-neighbor (Q, 4, 2S) into score logits and values, softmax the
/// scores over the neighbor axis per channel, and blend.
Var attention_blend(const Var& scores_values, i64 s) {
    Var scores = nn::slice(scores_values, 2, 0, s);
    Var values = nn::slice(scores_values, 2, s, s);
    Var weights = nn::softmax(scores, 1);
    return nn::sum_axis(nn::mul(weights, values), 1);  // (Q, S)
}

/// Repeat a (Q, 4, 4, C) map once per neighbor -> (Q*4, 4, 4, C).
Var repeat_per_neighbor(const Var& x, i64 q, i64 c) {
    Var r = nn::reshape(x, {q, 1, 4, 4, c});
    Var cat = nn::concat({r, r, r, r}, 1);
    return nn::reshape(cat, {q * 4, 4, 4, c});
}

Var conv_branch(const Var& input, const nn::Conv2d& c1, const nn::Conv2d& c2, i64 q, i64 s) {
    Var h = nn::relu(c1.apply(input));
    Var o = c2.apply(h);                 // (Q*4, 4, 4, 2S)
    Var pooled = nn::pool_mean_hw(o);    // (Q*4, 2S)
    return attention_blend(nn::reshape(pooled, {q, 4, 2 * s}), s);
}

}  // namespace

Var spatial_iff(const QueryBatch& batch, const QueryCodes& codes, const IffParams& params) {
    const i64 q = batch.count;
    const i64 c = params.config.latent_channels;
    const i64 s = params.config.out_bands;
    if (codes.z_spe.shape() != std::vector<i64>{q, 4, c}) {
        throw std::invalid_argument("spatial fusion: latent width does not match configuration");
    }
    Var pe = nn::constant(batch.pe);
    Var input = nn::concat({nn::reshape(codes.z_spe, {q * 4, c}), nn::reshape(codes.z_spa, {q * 4, c}),
                            nn::reshape(codes.z_hp, {q * 4, c}), pe},
                           1);  // (Q*4, 3C + 4L)
    Var h = input;
    for (int l = 0; l < 3; ++l) h = nn::relu(params.theta[static_cast<std::size_t>(l)].apply(h));
    Var out = params.theta[3].apply(h);  // (Q*4, 2S)
    return attention_blend(nn::reshape(out, {q, 4, 2 * s}), s);
}

Var frequency_iff(const QueryBatch& batch, const QueryCodes& codes, const IffParams& params) {
    const i64 q = batch.count;
    const i64 c = params.config.latent_channels;
    const i64 s = params.config.out_bands;
    if (codes.z_patch.shape() != std::vector<i64>{q, 4, 4, c}) {
        throw std::invalid_argument("frequency fusion: latent width does not match configuration");
    }

    // Spatial patch spectrum and its polar split.
    auto [p_re, p_im] = nn::dft2_spatial(codes.z_patch);
    auto [amp_spa, phase_spa] = nn::amp_phase(p_re, p_im);

    // 1x1 spectral-code spectrum is the identity transform of a real value:
    // amplitude |z|, phase 0 or pi.
    Var spe_flat = nn::reshape(codes.z_spe, {q * 4, c});
    Var zero_im = nn::constant(Tensor::zeros({q * 4, c}));
    auto [amp_spe, phase_spe] = nn::amp_phase(spe_flat, zero_im);

    Var delta = nn::constant(batch.delta);  // (Q*4, 2)
    Var delta_tiled = nn::tile_rows_to_spatial(delta, 4, 4);

    Var amp_in = nn::concat({nn::tile_rows_to_spatial(amp_spe, 4, 4),
                             repeat_per_neighbor(amp_spa, q, c), delta_tiled},
                            3);  // (Q*4, 4, 4, 2C+2)
    Var phase_in = nn::concat({nn::tile_rows_to_spatial(phase_spe, 4, 4),
                               repeat_per_neighbor(phase_spa, q, c), delta_tiled},
                              3);

    Var amp_out = conv_branch(amp_in, params.alpha1, params.alpha2, q, s);      // A'
    Var phase_out = conv_branch(phase_in, params.beta1, params.beta2, q, s);    // P'

    // Single-bin inverse transform: real part of A' * exp(j P').
    return nn::mul(amp_out, nn::cos(phase_out));
}

IffOutput spa_fre_iff(const QueryBatch& batch, const QueryCodes& codes, const IffParams& params) {
    const i64 q = batch.count;
    const i64 s = params.config.out_bands;
    IffOutput out;
    out.eps_s = params.config.spatial_branch ? spatial_iff(batch, codes, params)
                                             : nn::constant(Tensor::zeros({q, s}));
    out.eps_f = params.config.frequency_branch ? frequency_iff(batch, codes, params)
                                               : nn::constant(Tensor::zeros({q, s}));
    return out;
}

}  // namespace feinfn

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "feinfn/iff.hpp"
#include "feinfn/rng.hpp"
#include "oracles.hpp"

using feinfn::build_query_batch;
using feinfn::CoordinateGrid;
using feinfn::gather_codes;
using feinfn::i64;
using feinfn::IffConfig;
using feinfn::IffOutput;
using feinfn::IffParams;
using feinfn::make_coord_grid;
using feinfn::QueryBatch;
using feinfn::QueryCodes;
using feinfn::Rng;
using feinfn::Tensor;
namespace nn = feinfn::nn;

namespace {

using std::vector;

Tensor random_tensor(std::vector<i64> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (i64 i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

vector<double> as_vec(const Tensor& t) {
    return vector<double>(t.data(), t.data() + t.size());
}

vector<double> map_row(const Tensor& map_hwc, i64 row) {
    const i64 c = map_hwc.dim(2);
    const double* p = map_hwc.data() + row * c;
    return vector<double>(p, p + c);
}

vector<double> linear_by_name(const nn::ParamStore& s, const std::string& prefix,
                              const vector<double>& x) {
    const Tensor& w = s.get(prefix + ".weight").value();
    const Tensor& b = s.get(prefix + ".bias").value();
    return oracle::linear(x, 1, w.dim(0), as_vec(w), w.dim(1), as_vec(b));
}

/// Per-neighbor MLP: three ReLU layers then the head emitting score logits
/// followed by values.
vector<double> mlp_scores_values(const nn::ParamStore& s, const std::string& pfx,
                                 const vector<double>& in_row) {
    auto h = oracle::relu(linear_by_name(s, pfx + ".theta0", in_row));
    h = oracle::relu(linear_by_name(s, pfx + ".theta1", h));
    h = oracle::relu(linear_by_name(s, pfx + ".theta2", h));
    return linear_by_name(s, pfx + ".theta3", h);
}

/// Softmax the 4 neighbor score logits per channel, then blend the values.
vector<double> blend_oracle(const std::array<vector<double>, 4>& sv, i64 s_out,
                            std::array<std::array<double, 4>, 64>* weights_out = nullptr) {
    vector<double> out(static_cast<size_t>(s_out), 0.0);
    for (i64 ch = 0; ch < s_out; ++ch) {
        std::array<double, 4> logits{};
        for (int k = 0; k < 4; ++k) logits[size_t(k)] = sv[size_t(k)][size_t(ch)];
        auto w = oracle::softmax4(logits);
        if (weights_out) (*weights_out)[size_t(ch)] = w;
        for (int k = 0; k < 4; ++k)
            out[size_t(ch)] += w[size_t(k)] * sv[size_t(k)][size_t(s_out + ch)];
    }
    return out;
}

/// One (4,4,fin) patch through conv -> ReLU -> conv -> global mean: (2S).
vector<double> conv_branch_oracle(const nn::ParamStore& s, const std::string& c1,
                                  const std::string& c2, i64 k, const vector<double>& patch,
                                  i64 fin, i64 hid, i64 out2) {
    const Tensor& w1 = s.get(c1 + ".weight").value();
    const Tensor& b1 = s.get(c1 + ".bias").value();
    auto h = oracle::relu(
        oracle::conv2d(patch, 1, 4, 4, fin, as_vec(w1), k, k, hid, as_vec(b1), false));
    const Tensor& w2 = s.get(c2 + ".weight").value();
    const Tensor& b2 = s.get(c2 + ".bias").value();
    auto o = oracle::conv2d(h, 1, 4, 4, hid, as_vec(w2), k, k, out2, as_vec(b2), false);
    vector<double> pooled(static_cast<size_t>(out2), 0.0);
    for (i64 px = 0; px < 16; ++px)
        for (i64 ch = 0; ch < out2; ++ch) pooled[size_t(ch)] += o[size_t(px * out2 + ch)] / 16.0;
    return pooled;
}

struct ToyInstance {
    IffConfig cfg;
    nn::ParamStore store;
    IffParams params;
    CoordinateGrid lr_grid, hr_grid;
    Tensor lr_map, hr_map;  // (h, w, C) / (H, W, C)
    Tensor hp_map;          // oracle high-pass of lr_map
    QueryBatch batch;
    QueryCodes codes;

    ToyInstance(const std::vector<std::array<double, 2>>& queries, std::uint64_t seed,
                bool spatial = true, bool frequency = true)
        : params(make_params(seed, spatial, frequency)) {
        lr_grid = make_coord_grid(3, 3);
        hr_grid = make_coord_grid(6, 6);
        Rng rng(seed + 1);
        lr_map = random_tensor({3, 3, cfg.latent_channels}, rng);
        hr_map = random_tensor({6, 6, cfg.latent_channels}, rng);

        auto box = oracle::box3_mean(as_vec(lr_map), 3, 3, cfg.latent_channels);
        hp_map = lr_map;
        for (i64 i = 0; i < hp_map.size(); ++i) hp_map[i] = lr_map[i] - box[size_t(i)];

        batch = build_query_batch(queries, lr_grid, hr_grid, cfg.pe_levels);
        Tensor lr4 = lr_map;
        lr4.reshape_in_place({1, 3, 3, cfg.latent_channels});
        Tensor hr4 = hr_map;
        hr4.reshape_in_place({1, 6, 6, cfg.latent_channels});
        codes = gather_codes(batch, nn::constant(lr4), nn::constant(hr4));
    }

private:
    IffParams make_params(std::uint64_t seed, bool spatial, bool frequency) {
        cfg.latent_channels = 5;
        cfg.out_bands = 3;
        cfg.hidden = 6;
        cfg.pe_levels = 2;
        cfg.spatial_branch = spatial;
        cfg.frequency_branch = frequency;
        Rng rng(seed);
        return IffParams::create(store, "iff", cfg, rng);
    }
};

/// Unbatched spatial-branch reference for one query.
vector<double> spatial_oracle(const ToyInstance& t, i64 qi,
                              std::array<vector<double>, 4>* values_out = nullptr,
                              std::array<std::array<double, 4>, 64>* weights_out = nullptr) {
    const i64 c = t.cfg.latent_channels;
    const i64 s = t.cfg.out_bands;
    std::array<vector<double>, 4> sv;
    for (int k = 0; k < 4; ++k) {
        const i64 flat = qi * 4 + k;
        vector<double> in_row = map_row(t.lr_map, t.batch.spe_rows[size_t(flat)]);
        auto spa = map_row(t.hr_map, t.batch.spa_rows[size_t(flat)]);
        in_row.insert(in_row.end(), spa.begin(), spa.end());
        auto hp = map_row(t.hp_map, t.batch.spe_rows[size_t(flat)]);
        in_row.insert(in_row.end(), hp.begin(), hp.end());
        for (i64 e = 0; e < 4 * t.cfg.pe_levels; ++e)
            in_row.push_back(t.batch.pe.at({flat, e}));
        REQUIRE(static_cast<i64>(in_row.size()) == 3 * c + 4 * t.cfg.pe_levels);
        sv[size_t(k)] = mlp_scores_values(t.store, "iff", in_row);
        if (values_out)
            (*values_out)[size_t(k)] =
                vector<double>(sv[size_t(k)].begin() + s, sv[size_t(k)].end());
    }
    return blend_oracle(sv, s, weights_out);
}

/// Unbatched frequency-branch reference for one query.
vector<double> frequency_oracle(const ToyInstance& t, i64 qi,
                                vector<double>* amp_out_ret = nullptr) {
    const i64 c = t.cfg.latent_channels;
    const i64 s = t.cfg.out_bands;
    const i64 fin = t.cfg.frequency_in_channels();
    const i64 out2 = 2 * s;

    // The query's 4x4 HR patch and its per-channel spectrum.
    vector<double> amp_spa(static_cast<size_t>(16 * c)), phase_spa(amp_spa.size());
    {
        vector<double> patch(static_cast<size_t>(16 * c));
        for (int px = 0; px < 16; ++px) {
            auto row = map_row(t.hr_map, t.batch.patch_rows[size_t(qi * 16 + px)]);
            for (i64 ch = 0; ch < c; ++ch) patch[size_t(px * c + ch)] = row[size_t(ch)];
        }
        for (i64 ch = 0; ch < c; ++ch) {
            vector<double> plane(16);
            for (int px = 0; px < 16; ++px) plane[size_t(px)] = patch[size_t(px * c + ch)];
            vector<double> re, im;
            oracle::dft2(plane, {}, 4, 4, false, re, im);
            for (int px = 0; px < 16; ++px) {
                amp_spa[size_t(px * c + ch)] = std::hypot(re[size_t(px)], im[size_t(px)]);
                phase_spa[size_t(px * c + ch)] = std::atan2(im[size_t(px)], re[size_t(px)]);
            }
        }
    }

    std::array<vector<double>, 4> amp_sv, phase_sv;
    for (int k = 0; k < 4; ++k) {
        const i64 flat = qi * 4 + k;
        auto spe = map_row(t.lr_map, t.batch.spe_rows[size_t(flat)]);
        const double d0 = t.batch.delta.at({flat, 0});
        const double d1 = t.batch.delta.at({flat, 1});

        vector<double> amp_in(static_cast<size_t>(16 * fin)), phase_in(amp_in.size());
        for (int px = 0; px < 16; ++px) {
            for (i64 ch = 0; ch < c; ++ch) {
                // 1x1 spectrum of a real scalar: amplitude |z|, phase 0 or pi.
                amp_in[size_t(px * fin + ch)] = std::fabs(spe[size_t(ch)]);
                phase_in[size_t(px * fin + ch)] = std::atan2(0.0, spe[size_t(ch)]);
                amp_in[size_t(px * fin + c + ch)] = amp_spa[size_t(px * c + ch)];
                phase_in[size_t(px * fin + c + ch)] = phase_spa[size_t(px * c + ch)];
            }
            amp_in[size_t(px * fin + 2 * c)] = d0;
            amp_in[size_t(px * fin + 2 * c + 1)] = d1;
            phase_in[size_t(px * fin + 2 * c)] = d0;
            phase_in[size_t(px * fin + 2 * c + 1)] = d1;
        }
        amp_sv[size_t(k)] =
            conv_branch_oracle(t.store, "iff.alpha1", "iff.alpha2", 1, amp_in, fin, t.cfg.hidden, out2);
        phase_sv[size_t(k)] =
            conv_branch_oracle(t.store, "iff.beta1", "iff.beta2", 3, phase_in, fin, t.cfg.hidden, out2);
    }
    auto amp_blend = blend_oracle(amp_sv, s);
    auto phase_blend = blend_oracle(phase_sv, s);
    if (amp_out_ret) *amp_out_ret = amp_blend;
    vector<double> out(static_cast<size_t>(s));
    for (i64 ch = 0; ch < s; ++ch)
        out[size_t(ch)] = amp_blend[size_t(ch)] * std::cos(phase_blend[size_t(ch)]);
    return out;
}

const std::vector<std::array<double, 2>> kToyQueries{{-0.2, 0.1}, {0.4, -0.5}, {0.05, 0.85}};

}  // namespace

TEST_SUITE("iff") {

TEST_CASE("high_pass kills constants and is linear") {
    nn::NoGradGuard ng;
    nn::Var c = nn::constant(Tensor::full({1, 5, 6, 3}, 0.8));
    Tensor hp = feinfn::high_pass(c).value();
    for (i64 i = 0; i < hp.size(); ++i) CHECK(hp[i] == doctest::Approx(0.0).epsilon(1e-12));

    Rng rng(51);
    Tensor u = random_tensor({1, 5, 6, 3}, rng);
    Tensor v = random_tensor({1, 5, 6, 3}, rng);
    const double a = 1.7, b = -0.4;
    Tensor combo = Tensor::zeros({1, 5, 6, 3});
    for (i64 i = 0; i < combo.size(); ++i) combo[i] = a * u[i] + b * v[i];
    Tensor lhs = feinfn::high_pass(nn::constant(combo)).value();
    Tensor hu = feinfn::high_pass(nn::constant(u)).value();
    Tensor hv = feinfn::high_pass(nn::constant(v)).value();
    for (i64 i = 0; i < lhs.size(); ++i)
        CHECK(lhs[i] == doctest::Approx(a * hu[i] + b * hv[i]).epsilon(1e-10));
}

TEST_CASE("high_pass of a centered unit impulse") {
    nn::NoGradGuard ng;
    Tensor imp = Tensor::zeros({1, 5, 5, 1});
    imp.at({0, 2, 2, 0}) = 1.0;
    Tensor hp = feinfn::high_pass(nn::constant(imp)).value();
    CHECK(hp.at({0, 2, 2, 0}) == doctest::Approx(1.0 - 1.0 / 9.0).epsilon(1e-12));
    for (i64 dy = -1; dy <= 1; ++dy)
        for (i64 dx = -1; dx <= 1; ++dx) {
            if (dy == 0 && dx == 0) continue;
            CHECK(hp.at({0, 2 + dy, 2 + dx, 0}) == doctest::Approx(-1.0 / 9.0).epsilon(1e-12));
        }
}

TEST_CASE("query batch structure") {
    CoordinateGrid lr = make_coord_grid(3, 3);
    CoordinateGrid hr = make_coord_grid(6, 6);
    QueryBatch b = build_query_batch(kToyQueries, lr, hr, 2);
    CHECK(b.count == 3);
    CHECK(b.spe_rows.size() == 12);
    CHECK(b.spa_rows.size() == 12);
    CHECK(b.patch_rows.size() == 48);
    CHECK(b.delta.shape() == std::vector<i64>{12, 2});
    CHECK(b.pe.shape() == std::vector<i64>{12, 8});
    CHECK(b.areas.shape() == std::vector<i64>{3, 4});

    for (i64 qi = 0; qi < 3; ++qi) {
        double s = 0.0;
        for (i64 k = 0; k < 4; ++k) {
            CHECK(b.areas.at({qi, k}) >= -1e-12);
            s += b.areas.at({qi, k});
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }

    // pe rows are the frequency encoding of the delta rows.
    for (i64 r = 0; r < 12; ++r) {
        auto enc = feinfn::positional_encoding({b.delta.at({r, 0}), b.delta.at({r, 1})}, 2);
        for (i64 e = 0; e < 8; ++e) CHECK(b.pe.at({r, e}) == doctest::Approx(enc[size_t(e)]));
    }

    // spe rows are exactly the gathered neighbor indices.
    for (size_t qi = 0; qi < kToyQueries.size(); ++qi) {
        auto ns = feinfn::gather_neighbors(kToyQueries[qi], lr);
        for (int k = 0; k < 4; ++k) {
            CHECK(b.spe_rows[qi * 4 + size_t(k)] == ns.indices[size_t(k)][0] * 3 +
                                                        ns.indices[size_t(k)][1]);
        }
    }

    // The 4x4 patch window: offsets -1..+2 around the query pixel, clamped.
    // Query 2 sits near the right edge (col coordinate 0.85 -> HR col 5).
    const i64 qr = 3, qc = 5;  // nearest HR pixel of (0.05, 0.85) on a 6x6 grid
    for (i64 dr = -1; dr <= 2; ++dr)
        for (i64 dc = -1; dc <= 2; ++dc) {
            const i64 rr = std::clamp<i64>(qr + dr, 0, 5);
            const i64 cc = std::clamp<i64>(qc + dc, 0, 5);
            const size_t slot = size_t(2 * 16 + (dr + 1) * 4 + (dc + 1));
            CHECK(b.patch_rows[slot] == rr * 6 + cc);
        }

    CHECK_THROWS_AS(build_query_batch({}, lr, hr, 2), std::invalid_argument);
}

TEST_CASE("spa rows sit at the neighbor centers on the fine grid") {
    // 3x3 -> 9x9: each coarse pixel center coincides exactly with the center
    // of a fine pixel, so the mapping has no rounding ambiguity.
    CoordinateGrid lr = make_coord_grid(3, 3);
    CoordinateGrid hr = make_coord_grid(9, 9);
    QueryBatch b = build_query_batch({{0.0, 0.0}}, lr, hr, 2);
    auto ns = feinfn::gather_neighbors({0.0, 0.0}, lr);
    for (int k = 0; k < 4; ++k) {
        // Coarse pixel (r, c) center lands on fine pixel (3r+1, 3c+1).
        const i64 fr = 3 * ns.indices[size_t(k)][0] + 1;
        const i64 fc = 3 * ns.indices[size_t(k)][1] + 1;
        CHECK(b.spa_rows[size_t(k)] == fr * 9 + fc);
    }
}

TEST_CASE("gather_codes pulls the right rows") {
    ToyInstance t(kToyQueries, 60);
    const i64 c = t.cfg.latent_channels;
    CHECK(t.codes.z_spe.shape() == std::vector<i64>{3, 4, c});
    CHECK(t.codes.z_patch.shape() == std::vector<i64>{3, 4, 4, c});
    for (i64 qi = 0; qi < 3; ++qi)
        for (i64 k = 0; k < 4; ++k) {
            auto spe = map_row(t.lr_map, t.batch.spe_rows[size_t(qi * 4 + k)]);
            auto spa = map_row(t.hr_map, t.batch.spa_rows[size_t(qi * 4 + k)]);
            auto hp = map_row(t.hp_map, t.batch.spe_rows[size_t(qi * 4 + k)]);
            for (i64 ch = 0; ch < c; ++ch) {
                CHECK(t.codes.z_spe.value().at({qi, k, ch}) == doctest::Approx(spe[size_t(ch)]));
                CHECK(t.codes.z_spa.value().at({qi, k, ch}) == doctest::Approx(spa[size_t(ch)]));
                CHECK(t.codes.z_hp.value().at({qi, k, ch}) ==
                      doctest::Approx(hp[size_t(ch)]).epsilon(1e-10));
            }
        }
    for (i64 qi = 0; qi < 3; ++qi)
        for (i64 px = 0; px < 16; ++px) {
            auto row = map_row(t.hr_map, t.batch.patch_rows[size_t(qi * 16 + px)]);
            for (i64 ch = 0; ch < c; ++ch)
                CHECK(t.codes.z_patch.value().at({qi, px / 4, px % 4, ch}) ==
                      doctest::Approx(row[size_t(ch)]));
        }
}

TEST_CASE("identical per-neighbor inputs collapse to the shared value") {
    ToyInstance t(kToyQueries, 61);
    const i64 c = t.cfg.latent_channels;
    const i64 s = t.cfg.out_bands;

    // Hand-built batch: all four neighbors share one latent row and zero
    // deltas, so every per-neighbor MLP input is identical.
    QueryBatch b;
    b.count = 2;
    b.spe_rows = {4, 4, 4, 4, 2, 2, 2, 2};
    b.spa_rows = {7, 7, 7, 7, 9, 9, 9, 9};
    b.patch_rows.assign(32, 0);
    b.delta = Tensor::zeros({8, 2});
    b.pe = Tensor::zeros({8, 4 * t.cfg.pe_levels});
    for (i64 r = 0; r < 8; ++r) {
        auto enc = feinfn::positional_encoding({0.0, 0.0}, t.cfg.pe_levels);
        for (size_t e = 0; e < enc.size(); ++e) b.pe.at({r, i64(e)}) = enc[e];
    }
    b.areas = Tensor::full({2, 4}, 0.25);

    Tensor lr4 = t.lr_map;
    lr4.reshape_in_place({1, 3, 3, c});
    Tensor hr4 = t.hr_map;
    hr4.reshape_in_place({1, 6, 6, c});
    QueryCodes codes = gather_codes(b, nn::constant(lr4), nn::constant(hr4));

    nn::NoGradGuard ng;
    Tensor out = feinfn::spatial_iff(b, codes, t.params).value();
    REQUIRE(out.shape() == std::vector<i64>{2, s});

    for (i64 qi = 0; qi < 2; ++qi) {
        const i64 lr_row = b.spe_rows[size_t(qi * 4)];
        vector<double> in_row = map_row(t.lr_map, lr_row);
        auto spa = map_row(t.hr_map, b.spa_rows[size_t(qi * 4)]);
        in_row.insert(in_row.end(), spa.begin(), spa.end());
        auto hp = map_row(t.hp_map, lr_row);
        in_row.insert(in_row.end(), hp.begin(), hp.end());
        auto enc = feinfn::positional_encoding({0.0, 0.0}, t.cfg.pe_levels);
        in_row.insert(in_row.end(), enc.begin(), enc.end());
        auto sv = mlp_scores_values(t.store, "iff", in_row);
        for (i64 ch = 0; ch < s; ++ch) {
            // Any softmax over equal logits blends equal values to that value.
            CHECK(out.at({qi, ch}) == doctest::Approx(sv[size_t(s + ch)]).epsilon(1e-9));
        }
    }
}

TEST_CASE("batched spatial branch equals the unbatched oracle") {
    ToyInstance t(kToyQueries, 62);
    nn::NoGradGuard ng;
    Tensor got = feinfn::spatial_iff(t.batch, t.codes, t.params).value();
    REQUIRE(got.shape() == std::vector<i64>{3, t.cfg.out_bands});

    for (i64 qi = 0; qi < 3; ++qi) {
        std::array<vector<double>, 4> values;
        std::array<std::array<double, 4>, 64> weights;
        auto want = spatial_oracle(t, qi, &values, &weights);
        for (i64 ch = 0; ch < t.cfg.out_bands; ++ch) {
            CHECK(std::fabs(got.at({qi, ch}) - want[size_t(ch)]) < 1e-6);

            // Normalized weights sum to 1 per query and channel.
            double wsum = 0.0;
            for (int k = 0; k < 4; ++k) wsum += weights[size_t(ch)][size_t(k)];
            CHECK(wsum == doctest::Approx(1.0).epsilon(1e-6));

            // Convexity: the blend lies in the hull of the neighbor values.
            double lo = values[0][size_t(ch)], hi = lo;
            for (int k = 1; k < 4; ++k) {
                lo = std::min(lo, values[size_t(k)][size_t(ch)]);
                hi = std::max(hi, values[size_t(k)][size_t(ch)]);
            }
            CHECK(got.at({qi, ch}) >= lo - 1e-9);
            CHECK(got.at({qi, ch}) <= hi + 1e-9);
        }
    }
}

TEST_CASE("zero phase output reduces the frequency branch to its amplitude") {
    ToyInstance t(kToyQueries, 63);
    // Kill the phase head: P' = 0 everywhere, so eps_f = A' exactly.
    t.store.get("iff.beta2.weight").value().fill(0.0);
    t.store.get("iff.beta2.bias").value().fill(0.0);
    nn::NoGradGuard ng;
    Tensor got = feinfn::frequency_iff(t.batch, t.codes, t.params).value();
    for (i64 qi = 0; qi < 3; ++qi) {
        vector<double> amp;
        frequency_oracle(t, qi, &amp);
        for (i64 ch = 0; ch < t.cfg.out_bands; ++ch)
            CHECK(got.at({qi, ch}) == doctest::Approx(amp[size_t(ch)]).epsilon(1e-9));
    }
}

TEST_CASE("batched frequency branch equals the unbatched oracle") {
    const std::vector<std::array<double, 2>> queries{{-0.3, 0.25}, {0.6, -0.1}};
    ToyInstance t(queries, 64);
    nn::NoGradGuard ng;
    Tensor got = feinfn::frequency_iff(t.batch, t.codes, t.params).value();
    REQUIRE(got.shape() == std::vector<i64>{2, t.cfg.out_bands});
    for (i64 qi = 0; qi < 2; ++qi) {
        auto want = frequency_oracle(t, qi);
        for (i64 ch = 0; ch < t.cfg.out_bands; ++ch)
            CHECK(std::fabs(got.at({qi, ch}) - want[size_t(ch)]) < 1e-6);
    }
}

TEST_CASE("spa_fre_iff shapes, determinism, branch toggles") {
    IffConfig cfg;
    cfg.latent_channels = 4;
    cfg.out_bands = 31;
    cfg.hidden = 8;
    cfg.pe_levels = 2;
    nn::ParamStore store;
    Rng rng(65);
    IffParams params = IffParams::create(store, "iff", cfg, rng);

    CoordinateGrid lr = make_coord_grid(4, 4);
    CoordinateGrid hr = make_coord_grid(8, 8);
    Rng drng(66);
    Tensor lr_map = random_tensor({1, 4, 4, 4}, drng);
    Tensor hr_map = random_tensor({1, 8, 8, 4}, drng);
    QueryBatch batch = build_query_batch({{0.1, 0.2}, {-0.4, 0.9}}, lr, hr, cfg.pe_levels);

    nn::NoGradGuard ng;
    QueryCodes codes = gather_codes(batch, nn::constant(lr_map), nn::constant(hr_map));
    IffOutput a = feinfn::spa_fre_iff(batch, codes, params);
    CHECK(a.eps_s.shape() == std::vector<i64>{2, 31});
    CHECK(a.eps_f.shape() == std::vector<i64>{2, 31});
    CHECK(a.eps_s.value().all_finite());
    CHECK(a.eps_f.value().all_finite());

    // Bitwise determinism.
    IffOutput b = feinfn::spa_fre_iff(batch, codes, params);
    for (i64 i = 0; i < a.eps_s.value().size(); ++i) {
        CHECK(a.eps_s.value()[i] == b.eps_s.value()[i]);
        CHECK(a.eps_f.value()[i] == b.eps_f.value()[i]);
    }

    // Disabling a branch zeroes only that output and leaves the other
    // bit-identical (Table 3 harness requirement).
    IffParams spatial_only = params;
    spatial_only.config.frequency_branch = false;
    IffOutput so = feinfn::spa_fre_iff(batch, codes, spatial_only);
    for (i64 i = 0; i < so.eps_f.value().size(); ++i) CHECK(so.eps_f.value()[i] == 0.0);
    for (i64 i = 0; i < so.eps_s.value().size(); ++i)
        CHECK(so.eps_s.value()[i] == a.eps_s.value()[i]);

    IffParams freq_only = params;
    freq_only.config.spatial_branch = false;
    IffOutput fo = feinfn::spa_fre_iff(batch, codes, freq_only);
    for (i64 i = 0; i < fo.eps_s.value().size(); ++i) CHECK(fo.eps_s.value()[i] == 0.0);
    for (i64 i = 0; i < fo.eps_f.value().size(); ++i)
        CHECK(fo.eps_f.value()[i] == a.eps_f.value()[i]);

    IffConfig bad = cfg;
    bad.spatial_branch = false;
    bad.frequency_branch = false;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("gradients through both branches match finite differences") {
    ToyInstance t(kToyQueries, 67);
    auto build = [&] {
        // Codes must be rebuilt inside: they are constants, but the branch
        // graphs must be fresh per evaluation.
        IffOutput out = feinfn::spa_fre_iff(t.batch, t.codes, t.params);
        return nn::add(nn::sum_all(nn::square(out.eps_s)), nn::sum_all(nn::square(out.eps_f)));
    };
    t.store.zero_grads();
    nn::Var loss = build();
    loss.backward();
    auto probe = [&] {
        nn::NoGradGuard guard;
        return build().value()[0];
    };

    Rng pick(68);
    for (const char* name : {"iff.theta0.weight", "iff.theta3.bias", "iff.alpha1.weight",
                             "iff.alpha2.bias", "iff.beta1.weight", "iff.beta2.weight"}) {
        nn::Var p = t.store.get(name);
        REQUIRE(p.has_grad());
        for (int reps = 0; reps < 4; ++reps) {
            const i64 idx = pick.uniform_int(p.value().size());
            const double fd = nn::finite_difference(probe, p.node->value, idx, 1e-5);
            const double an = p.grad()[idx];
            INFO(name, "[", idx, "] analytic ", an, " fd ", fd);
            CHECK(std::fabs(an - fd) <= 1e-3 * std::max({std::fabs(an), std::fabs(fd), 1e-4}));
        }
    }
}

}  // TEST_SUITE

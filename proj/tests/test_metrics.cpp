#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "feinfn/metrics.hpp"
#include "feinfn/rng.hpp"
#include "oracles.hpp"

using feinfn::ergas;
using feinfn::ergas_detailed;
using feinfn::i64;
using feinfn::MetricReport;
using feinfn::psnr;
using feinfn::Rng;
using feinfn::sam;
using feinfn::sam_detailed;
using feinfn::SceneMetrics;
using feinfn::ssim;
using feinfn::Tensor;

namespace {

Tensor random_cube(i64 h, i64 w, i64 c, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    Rng rng(seed);
    Tensor t({h, w, c});
    for (i64 i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

std::vector<double> as_vec(const Tensor& t) {
    return std::vector<double>(t.data(), t.data() + t.size());
}

Tensor add_noise(const Tensor& x, double amplitude, std::uint64_t seed) {
    Rng rng(seed);
    Tensor y = x;
    for (i64 i = 0; i < y.size(); ++i) y[i] += amplitude * rng.uniform(-1.0, 1.0);
    return y;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("psnr reference points") {
    Tensor gt = random_cube(6, 5, 3, 110);
    CHECK(psnr(gt, gt) == 100.0);

    // A uniform +0.01 error: MSE 1e-4, so 40 dB at unit peak.
    Tensor off = gt;
    for (i64 i = 0; i < off.size(); ++i) off[i] += 0.01;
    CHECK(psnr(off, gt) == doctest::Approx(40.0).epsilon(1e-9));
    // Raising the peak raises the score by 20 log10(peak).
    CHECK(psnr(off, gt, 2.0) == doctest::Approx(40.0 + 20.0 * std::log10(2.0)).epsilon(1e-9));

    // Sub-1e-10 MSE returns the cap exactly; just above it stays below.
    Tensor close = gt;
    for (i64 i = 0; i < close.size(); ++i) close[i] += 1e-6;
    CHECK(psnr(close, gt) == 100.0);
    Tensor near = gt;
    for (i64 i = 0; i < near.size(); ++i) near[i] += 1.1e-5;
    CHECK(psnr(near, gt) < 100.0);
    CHECK(psnr(near, gt) > 99.0);

    for (std::uint64_t seed : {111ull, 112ull, 113ull}) {
        Tensor a = random_cube(7, 4, 5, seed);
        Tensor b = random_cube(7, 4, 5, seed + 50);
        CHECK(psnr(a, b) ==
              doctest::Approx(oracle::psnr(as_vec(a), as_vec(b), 1.0)).epsilon(1e-12));
    }

    Tensor wrong({6, 5, 2});
    CHECK_THROWS_AS(psnr(wrong, gt), std::invalid_argument);
    CHECK_THROWS_AS(psnr(gt, gt, 0.0), std::invalid_argument);
}

TEST_CASE("spectral angle reference points") {
    Tensor gt = random_cube(5, 5, 4, 114, 0.1, 1.0);
    CHECK(sam(gt, gt) == doctest::Approx(0.0).epsilon(1e-9));

    // One orthogonal pixel (90 deg) and one parallel pixel (0 deg): mean 45.
    Tensor a({1, 2, 2}), b({1, 2, 2});
    a.at({0, 0, 0}) = 1.0;
    a.at({0, 0, 1}) = 0.0;
    b.at({0, 0, 0}) = 0.0;
    b.at({0, 0, 1}) = 1.0;
    a.at({0, 1, 0}) = 0.5;
    a.at({0, 1, 1}) = 0.5;
    b.at({0, 1, 0}) = 2.0;
    b.at({0, 1, 1}) = 2.0;
    CHECK(sam(a, b) == doctest::Approx(45.0).epsilon(1e-9));

    // Angles ignore per-pixel brightness.
    Tensor pred = random_cube(5, 5, 4, 115, 0.1, 1.0);
    Tensor scaled = pred;
    for (i64 i = 0; i < scaled.size(); ++i) scaled[i] *= 3.7;
    CHECK(sam(scaled, gt) == doctest::Approx(sam(pred, gt)).epsilon(1e-9));

    // Zero-norm pixels are skipped and counted.
    Tensor z = gt;
    for (i64 k = 0; k < 4; ++k) z.at({2, 3, k}) = 0.0;
    auto res = feinfn::sam_detailed(pred, z);
    CHECK(res.skipped == 1);
    CHECK(res.skip_fraction == doctest::Approx(1.0 / 25.0));
    CHECK(res.degrees > 0.0);

    Tensor zero = Tensor::zeros({5, 5, 4});
    auto all_skipped = feinfn::sam_detailed(zero, gt);
    CHECK(all_skipped.skipped == 25);
    CHECK(all_skipped.degrees == 0.0);

    for (std::uint64_t seed : {116ull, 117ull}) {
        Tensor x = random_cube(6, 6, 5, seed, 0.05, 1.0);
        Tensor y = random_cube(6, 6, 5, seed + 50, 0.05, 1.0);
        CHECK(sam(x, y) ==
              doctest::Approx(oracle::sam_mean_deg(as_vec(x), as_vec(y), 36, 5)).epsilon(1e-10));
    }
}

TEST_CASE("ergas reference points") {
    Tensor gt = random_cube(6, 6, 3, 118, 0.2, 1.0);
    CHECK(ergas(gt, gt, 0.25) == doctest::Approx(0.0).epsilon(1e-12));

    // One-pixel, two-band worked example at ratio 1/4.
    Tensor p1({1, 1, 2}), g1({1, 1, 2});
    g1.at({0, 0, 0}) = 0.5;
    g1.at({0, 0, 1}) = 0.25;
    p1.at({0, 0, 0}) = 0.6;
    p1.at({0, 0, 1}) = 0.2;
    // Per band mse/mean^2 = 0.01/0.25 and 0.0025/0.0625, both 0.04.
    CHECK(ergas(p1, g1, 0.25) == doctest::Approx(100.0 * 0.25 * 0.2).epsilon(1e-9));

    // Relative errors are invariant to a joint rescale of both cubes.
    Tensor pred = add_noise(gt, 0.05, 119);
    Tensor pred_scaled = pred, gt_scaled = gt;
    for (i64 i = 0; i < pred.size(); ++i) {
        pred_scaled[i] *= 0.37;
        gt_scaled[i] *= 0.37;
    }
    CHECK(ergas(pred_scaled, gt_scaled, 0.25) ==
          doctest::Approx(ergas(pred, gt, 0.25)).epsilon(1e-9));

    // Zero-mean reference bands are excluded, not divided by.
    Tensor gz = Tensor::zeros({6, 6, 3});
    Tensor pz = Tensor::zeros({6, 6, 3});
    for (i64 p = 0; p < 36; ++p) {
        gz[p * 3 + 0] = gt[p * 3 + 0];
        gz[p * 3 + 1] = gt[p * 3 + 1];
        pz[p * 3 + 0] = pred[p * 3 + 0];
        pz[p * 3 + 1] = pred[p * 3 + 1];
        pz[p * 3 + 2] = 0.5;  // nonzero error against an all-zero band
    }
    auto det = ergas_detailed(pz, gz, 0.25);
    CHECK(det.excluded_bands == 1);
    CHECK(det.value > 0.0);

    auto none = ergas_detailed(Tensor::full({2, 2, 1}, 0.3), Tensor::zeros({2, 2, 1}), 0.25);
    CHECK(none.excluded_bands == 1);
    CHECK(none.value == 0.0);

    for (std::uint64_t seed : {120ull, 121ull}) {
        Tensor x = random_cube(5, 7, 4, seed, 0.1, 1.0);
        Tensor y = random_cube(5, 7, 4, seed + 50, 0.1, 1.0);
        CHECK(ergas(x, y, 0.5) ==
              doctest::Approx(oracle::ergas(as_vec(x), as_vec(y), 35, 4, 0.5)).epsilon(1e-10));
    }

    CHECK_THROWS_AS(ergas(gt, gt, 0.0), std::invalid_argument);
}

TEST_CASE("ssim reference points") {
    Tensor gt = random_cube(14, 13, 2, 122);
    CHECK(ssim(gt, gt) == doctest::Approx(1.0).epsilon(1e-12));

    // Inverting the image wrecks structure: far below 1.
    Tensor inverted = gt;
    for (i64 i = 0; i < inverted.size(); ++i) inverted[i] = 1.0 - inverted[i];
    CHECK(ssim(inverted, gt) < 0.5);

    for (std::uint64_t seed : {123ull, 124ull, 125ull, 126ull, 127ull}) {
        Tensor x = random_cube(13, 15, 2, seed);
        Tensor y = add_noise(x, 0.1, seed + 50);
        double want = 0.0;
        for (i64 b = 0; b < 2; ++b) {
            std::vector<double> xb(13 * 15), yb(13 * 15);
            for (i64 p = 0; p < 13 * 15; ++p) {
                xb[size_t(p)] = x[p * 2 + b];
                yb[size_t(p)] = y[p * 2 + b];
            }
            want += oracle::ssim_band(xb, yb, 13, 15, 1.0);
        }
        want /= 2.0;
        CHECK(ssim(x, y) == doctest::Approx(want).epsilon(1e-10));
        CHECK(ssim(x, y) <= 1.0 + 1e-9);
    }

    Tensor small({10, 12, 1});
    CHECK_THROWS_AS(ssim(small, small), std::invalid_argument);
}

TEST_CASE("all four scores degrade monotonically with noise") {
    Tensor gt = random_cube(16, 16, 4, 128, 0.2, 0.8);
    double prev_psnr = 1e9, prev_ssim = 2.0, prev_sam = -1.0, prev_ergas = -1.0;
    for (double amp : {0.01, 0.05, 0.15}) {
        Tensor noisy = add_noise(gt, amp, 129);
        const double p = psnr(noisy, gt);
        const double s = ssim(noisy, gt);
        const double a = sam(noisy, gt);
        const double e = ergas(noisy, gt, 0.25);
        CHECK(p < prev_psnr);
        CHECK(s < prev_ssim);
        CHECK(a > prev_sam);
        CHECK(e > prev_ergas);
        prev_psnr = p;
        prev_ssim = s;
        prev_sam = a;
        prev_ergas = e;
    }
}

TEST_CASE("pixel-permutation invariance of pointwise scores") {
    Tensor a = random_cube(4, 5, 3, 130);
    Tensor b = random_cube(4, 5, 3, 131);

    // One fixed permutation of the 20 pixels, applied to both cubes.
    std::vector<i64> perm(20);
    for (i64 i = 0; i < 20; ++i) perm[size_t(i)] = (i * 7 + 3) % 20;
    Tensor pa({4, 5, 3}), pb({4, 5, 3});
    for (i64 p = 0; p < 20; ++p)
        for (i64 c = 0; c < 3; ++c) {
            pa[perm[size_t(p)] * 3 + c] = a[p * 3 + c];
            pb[perm[size_t(p)] * 3 + c] = b[p * 3 + c];
        }
    CHECK(psnr(pa, pb) == doctest::Approx(psnr(a, b)).epsilon(1e-12));
    CHECK(sam(pa, pb) == doctest::Approx(sam(a, b)).epsilon(1e-12));
    CHECK(ergas(pa, pb, 0.25) == doctest::Approx(ergas(a, b, 0.25)).epsilon(1e-12));
}

TEST_CASE("error map is the per-pixel mean absolute difference") {
    Tensor a({2, 2, 2}), b({2, 2, 2});
    a.fill(0.0);
    b.fill(0.0);
    a.at({0, 0, 0}) = 0.5;   // pixel 0: |0.5| + 0 over 2 bands
    a.at({1, 1, 0}) = 0.25;  // pixel 3: 0.25 and 0.75
    a.at({1, 1, 1}) = -0.75;
    Tensor m = feinfn::error_map(a, b);
    CHECK(m.shape() == std::vector<i64>{2, 2});
    CHECK(m.at({0, 0}) == doctest::Approx(0.25));
    CHECK(m.at({0, 1}) == doctest::Approx(0.0));
    CHECK(m.at({1, 1}) == doctest::Approx(0.5));
}

TEST_CASE("evaluate_scene bundles the conventions") {
    Tensor gt = random_cube(16, 16, 3, 132, 0.1, 0.9);
    Tensor pred = add_noise(gt, 0.05, 133);
    SceneMetrics m = feinfn::evaluate_scene("probe", pred, gt, 4);
    CHECK(m.name == "probe");
    CHECK(m.psnr == doctest::Approx(psnr(pred, gt, 1.0)).epsilon(1e-12));
    CHECK(m.sam == doctest::Approx(sam(pred, gt)).epsilon(1e-12));
    CHECK(m.ergas == doctest::Approx(ergas(pred, gt, 0.25)).epsilon(1e-12));
    CHECK(m.ssim == doctest::Approx(ssim(pred, gt, 1.0)).epsilon(1e-12));
}

TEST_CASE("report aggregation uses the sample standard deviation") {
    MetricReport report;
    SceneMetrics s1, s2;
    s1.name = "one";
    s1.psnr = 30.0;
    s1.sam = 4.0;
    s1.ergas = 2.0;
    s1.ssim = 0.9;
    s2.name = "two";
    s2.psnr = 34.0;
    s2.sam = 6.0;
    s2.ergas = 3.0;
    s2.ssim = 0.8;
    report.per_scene = {s1, s2};

    SceneMetrics m = report.mean();
    CHECK(m.psnr == doctest::Approx(32.0));
    CHECK(m.sam == doctest::Approx(5.0));
    CHECK(m.ergas == doctest::Approx(2.5));
    CHECK(m.ssim == doctest::Approx(0.85));
    SceneMetrics sd = report.stddev();
    CHECK(sd.psnr == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
    CHECK(sd.sam == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    const std::string json = report.to_json();
    CHECK(json.find("per_scene") != std::string::npos);
    CHECK(json.find("aggregate") != std::string::npos);
    CHECK(json.find("\"one\"") != std::string::npos);
    const std::string table = report.to_table();
    CHECK(table.find("PSNR(dB)") != std::string::npos);
    CHECK(table.find("mean ± std") != std::string::npos);
    CHECK(table.find("32.0000") != std::string::npos);

    MetricReport single;
    single.per_scene = {s1};
    CHECK(single.stddev().psnr == 0.0);
    CHECK(single.mean().psnr == doctest::Approx(30.0));

    MetricReport empty;
    CHECK(empty.mean().psnr == 0.0);
    CHECK(empty.stddev().psnr == 0.0);
}

}  // TEST_SUITE

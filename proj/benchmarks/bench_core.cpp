// Microbenchmarks for the hot paths: encoder forward, implicit fusion query
// throughput, the 4x4 spectral transform, and the evaluation metrics.

#include <benchmark/benchmark.h>

#include <array>
#include <vector>

#include "feinfn/autograd.hpp"
#include "feinfn/data.hpp"
#include "feinfn/encoders.hpp"
#include "feinfn/fourier.hpp"
#include "feinfn/grid.hpp"
#include "feinfn/iff.hpp"
#include "feinfn/metrics.hpp"
#include "feinfn/model.hpp"
#include "feinfn/rng.hpp"

using namespace feinfn;
namespace nn = feinfn::nn;

namespace {

Tensor random_cube(i64 h, i64 w, i64 c, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t({h, w, c});
    for (i64 i = 0; i < t.size(); ++i) t[i] = rng.uniform();
    return t;
}

void BM_EncoderForward(benchmark::State& state) {
    const i64 hw = state.range(0);
    EncoderConfig cfg;
    cfg.in_channels = 4;
    cfg.base_channels = 16;
    cfg.num_residual_blocks = 2;
    nn::ParamStore store;
    Rng rng(1);
    ResidualEncoder enc = ResidualEncoder::create(store, "enc", cfg, rng);
    Tensor x = random_cube(hw, hw, 4, 2);
    x.reshape_in_place({1, hw, hw, 4});
    nn::NoGradGuard ng;
    for (auto _ : state) {
        nn::Var out = enc.apply(nn::constant(x));
        benchmark::DoNotOptimize(out.value().data());
    }
    state.SetItemsProcessed(state.iterations() * hw * hw);
}
BENCHMARK(BM_EncoderForward)->Arg(16)->Arg(32)->Arg(64);

void BM_IffQueries(benchmark::State& state) {
    const i64 q_count = state.range(0);
    IffConfig cfg;
    cfg.latent_channels = 16;
    cfg.out_bands = 8;
    cfg.hidden = 32;
    cfg.pe_levels = 4;
    nn::ParamStore store;
    Rng rng(3);
    IffParams params = IffParams::create(store, "iff", cfg, rng);
    const CoordinateGrid lr_grid = make_coord_grid(16, 16);
    const CoordinateGrid hr_grid = make_coord_grid(32, 32);
    Rng qrng(4);
    std::vector<std::array<double, 2>> queries(static_cast<std::size_t>(q_count));
    for (auto& q : queries) q = {qrng.uniform(-1.0, 1.0), qrng.uniform(-1.0, 1.0)};
    const QueryBatch batch = build_query_batch(queries, lr_grid, hr_grid, cfg.pe_levels);
    Tensor lr = random_cube(16, 16, cfg.latent_channels, 5);
    lr.reshape_in_place({1, 16, 16, cfg.latent_channels});
    Tensor hr = random_cube(32, 32, cfg.latent_channels, 6);
    hr.reshape_in_place({1, 32, 32, cfg.latent_channels});
    nn::NoGradGuard ng;
    const QueryCodes codes = gather_codes(batch, nn::constant(lr), nn::constant(hr));
    for (auto _ : state) {
        IffOutput out = spa_fre_iff(batch, codes, params);
        benchmark::DoNotOptimize(out.eps_s.value().data());
        benchmark::DoNotOptimize(out.eps_f.value().data());
    }
    state.SetItemsProcessed(state.iterations() * q_count);
}
BENCHMARK(BM_IffQueries)->Arg(64)->Arg(256)->Arg(1024);

void BM_FftPatch(benchmark::State& state) {
    const Tensor patch = random_cube(4, 4, state.range(0), 7);
    for (auto _ : state) {
        SpectrumPatch spec = fft2_patch(patch);
        benchmark::DoNotOptimize(spec.amplitude.data());
    }
    state.SetItemsProcessed(state.iterations() * patch.size());
}
BENCHMARK(BM_FftPatch)->Arg(8)->Arg(31);

void BM_Metrics(benchmark::State& state) {
    const i64 hw = state.range(0);
    const Tensor pred = random_cube(hw, hw, 8, 8);
    const Tensor ref = random_cube(hw, hw, 8, 9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(psnr(pred, ref));
        benchmark::DoNotOptimize(sam(pred, ref));
        benchmark::DoNotOptimize(ergas(pred, ref, 0.25));
        benchmark::DoNotOptimize(ssim(pred, ref));
    }
    state.SetItemsProcessed(state.iterations() * hw * hw * 8);
}
BENCHMARK(BM_Metrics)->Arg(32)->Arg(64);

void BM_TrainStep(benchmark::State& state) {
    FusionConfig cfg;
    cfg.scale = 2.0;
    cfg.bands = 6;
    cfg.msi_bands = 3;
    cfg.encoder.base_channels = 16;
    cfg.encoder.num_residual_blocks = 1;
    cfg.iff_hidden = 32;
    cfg.decoder_channels = 16;
    cfg.pe_levels = 4;
    cfg.gabor.omega0 = 3.0;
    cfg.gabor.upsilon0 = 1.0;
    cfg.seed = 10;
    FusionModel model(cfg);
    Trainer trainer(model);
    const Tensor gt = random_cube(16, 16, 6, 11);
    const SpectralResponse srf = SpectralResponse::grouped(3, 6);
    auto [lr, msi] = wald_simulate(make_image(gt, "bench"), 2, srf);
    const std::vector<FusionTriplet> batch{{lr, msi, make_image(gt, "bench")}};
    Rng qrng(12);
    for (auto _ : state) {
        std::vector<std::vector<i64>> rows(1);
        rows[0].resize(128);
        for (auto& r : rows[0]) r = qrng.uniform_int(i64{256});
        TrainStepResult res = trainer.step(batch, &rows);
        benchmark::DoNotOptimize(res.loss);
    }
    state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "feinfn/decoder.hpp"
#include "feinfn/rng.hpp"
#include "oracles.hpp"

using feinfn::DecoderActivation;
using feinfn::GaborParams;
using feinfn::gabor_scalar;
using feinfn::i64;
using feinfn::Rng;
using feinfn::SfidDecoder;
using feinfn::SpreadResult;
using feinfn::Tensor;
using feinfn::time_frequency_spread;
namespace nn = feinfn::nn;

namespace {

Tensor random_tensor(std::vector<i64> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (i64 i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("activation names round-trip") {
    for (auto a : {DecoderActivation::kGabor, DecoderActivation::kRelu, DecoderActivation::kGelu,
                   DecoderActivation::kLeakyRelu}) {
        CHECK(feinfn::decoder_activation_from_string(feinfn::to_string(a)) == a);
    }
    CHECK_THROWS_AS(feinfn::decoder_activation_from_string("tanh"), std::invalid_argument);
}

TEST_CASE("wavelet response at reference points") {
    GaborParams p;  // omega0 = upsilon0 = 10
    const auto at_zero = gabor_scalar({0.0, 0.0}, p);
    CHECK(at_zero.real() == 1.0);
    CHECK(at_zero.imag() == 0.0);

    // Real input: modulus is the Gaussian envelope, argument is omega0*x.
    const auto at_one = gabor_scalar({1.0, 0.0}, p);
    CHECK(at_one.real() == doctest::Approx(std::exp(-100.0) * std::cos(10.0)).epsilon(1e-12));
    CHECK(at_one.imag() == doctest::Approx(std::exp(-100.0) * std::sin(10.0)).epsilon(1e-12));

    // Imaginary input never rotates: the response stays real and positive.
    GaborParams q;
    q.omega0 = 7.0;
    q.upsilon0 = 2.0;
    const auto at_imag = gabor_scalar({0.0, 0.3}, q);
    CHECK(at_imag.imag() == 0.0);
    CHECK(at_imag.real() == doctest::Approx(std::exp(-4.0 * 0.09)).epsilon(1e-12));

    Rng rng(70);
    for (int i = 0; i < 50; ++i) {
        const std::complex<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        CHECK(std::abs(gabor_scalar(x, p)) <= 1.0 + 1e-12);
    }

    GaborParams bad;
    bad.omega0 = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.omega0 = 10.0;
    bad.upsilon0 = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.upsilon0 = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("time-frequency spread of the default wavelet") {
    GaborParams p;  // omega0 = upsilon0 = 10
    SpreadResult r = time_frequency_spread(p);
    // Gaussian envelope exp(-u0^2 t^2): sigma_t = 1/(2 u0), sigma_w = u0.
    CHECK(r.sigma_t == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(r.sigma_omega == doctest::Approx(10.0).epsilon(1e-3));
    CHECK(std::fabs(r.product - 0.5) < 1e-3);
    CHECK(r.tail_mass < 1e-6);
    CHECK(r.time_samples > 100);
    CHECK(r.time_samples % 2 == 1);

    // Deterministic quadrature.
    SpreadResult r2 = time_frequency_spread(p);
    CHECK(r.sigma_t == r2.sigma_t);
    CHECK(r.sigma_omega == r2.sigma_omega);
}

TEST_CASE("uncertainty product is carrier-invariant and scales with the envelope") {
    GaborParams a, b;
    a.omega0 = 5.0;
    b.omega0 = 20.0;
    const SpreadResult ra = time_frequency_spread(a);
    const SpreadResult rb = time_frequency_spread(b);
    CHECK(ra.product == doctest::Approx(rb.product).epsilon(1e-3));

    GaborParams narrow;  // doubling upsilon halves the time spread
    narrow.upsilon0 = 20.0;
    const SpreadResult rn = time_frequency_spread(narrow);
    CHECK(rn.sigma_t == doctest::Approx(ra.sigma_t / 2.0).epsilon(1e-3));
    CHECK(rn.sigma_omega == doctest::Approx(ra.sigma_omega * 2.0).epsilon(1e-3));
}

TEST_CASE("uncertainty product never drops below one half") {
    Rng rng(71);
    for (int i = 0; i < 5; ++i) {
        GaborParams p;
        p.omega0 = rng.uniform(2.0, 30.0);
        p.upsilon0 = rng.uniform(2.0, 30.0);
        SpreadResult r = time_frequency_spread(p);
        INFO("omega0 ", p.omega0, " upsilon0 ", p.upsilon0, " product ", r.product);
        CHECK(r.product >= 0.5 - 1e-3);
        CHECK(std::fabs(r.product - 0.5) < 1e-3);
    }
}

TEST_CASE("decoder output shape and input validation") {
    nn::ParamStore store;
    Rng rng(72);
    GaborParams gp;
    SfidDecoder dec =
        SfidDecoder::create(store, "dec", 4, 3, gp, DecoderActivation::kGabor, rng);
    Rng drng(73);
    Tensor es = random_tensor({5, 4}, drng);
    Tensor ef = random_tensor({5, 4}, drng);
    nn::NoGradGuard ng;
    Tensor out = dec.apply(nn::constant(es), nn::constant(ef)).value();
    CHECK(out.shape() == std::vector<i64>{5, 3});
    CHECK(out.all_finite());

    Tensor wrong = random_tensor({5, 3}, drng);
    CHECK_THROWS_AS(dec.apply(nn::constant(wrong), nn::constant(ef)), std::invalid_argument);
    Tensor fewer = random_tensor({4, 4}, drng);
    CHECK_THROWS_AS(dec.apply(nn::constant(es), nn::constant(fewer)), std::invalid_argument);
    CHECK_THROWS_AS(
        SfidDecoder::create(store, "dec2", 0, 3, gp, DecoderActivation::kGabor, rng),
        std::invalid_argument);
}

TEST_CASE("zeroed couplings expose the closed-form head") {
    // With every coupling weight and bias at zero, the streams see zero
    // pre-activations at each stage. Under the wavelet activation zero maps
    // to exactly 1+0j, so both streams arrive at the head as constant ones
    // and the output is 2 * column-sums of the real head weights plus bias.
    const i64 ch = 6, bands = 4, q = 3;
    for (bool use_gabor : {true, false}) {
        nn::ParamStore store;
        Rng rng(74);
        GaborParams gp;
        SfidDecoder dec = SfidDecoder::create(
            store, "dec", ch, bands, gp,
            use_gabor ? DecoderActivation::kGabor : DecoderActivation::kRelu, rng);
        for (const auto& name : store.names()) {
            if (name.rfind("dec.b", 0) == 0) store.get(name).value().fill(0.0);
        }
        Rng drng(75);
        Tensor es = random_tensor({q, ch}, drng);
        Tensor ef = random_tensor({q, ch}, drng);
        nn::NoGradGuard ng;
        Tensor out = dec.apply(nn::constant(es), nn::constant(ef)).value();

        const Tensor& w_re = store.get("dec.out.w_re").value();
        const Tensor& bias = store.get("dec.out.bias").value();
        for (i64 r = 0; r < q; ++r)
            for (i64 o = 0; o < bands; ++o) {
                double want = bias[o];
                if (use_gabor) {
                    for (i64 c = 0; c < ch; ++c) want += 2.0 * w_re.at({c, o});
                }
                // ReLU keeps zero at zero, so only the bias survives.
                CHECK(out.at({r, o}) == doctest::Approx(want).epsilon(1e-12));
            }
    }
}

TEST_CASE("parameter sets are activation-invariant; trainable wavelet adds two") {
    auto count = [](DecoderActivation act, bool trainable) {
        nn::ParamStore store;
        Rng rng(76);
        GaborParams gp;
        gp.trainable = trainable;
        SfidDecoder::create(store, "dec", 8, 5, gp, act, rng);
        return std::pair<i64, bool>(store.total_size(), store.contains("dec.omega"));
    };
    auto [gabor_n, gabor_has] = count(DecoderActivation::kGabor, false);
    auto [relu_n, relu_has] = count(DecoderActivation::kRelu, false);
    auto [gelu_n, gelu_has] = count(DecoderActivation::kGelu, false);
    CHECK(gabor_n == relu_n);
    CHECK(gabor_n == gelu_n);
    CHECK_FALSE(gabor_has);
    CHECK_FALSE(relu_has);
    CHECK_FALSE(gelu_has);

    auto [train_n, train_has] = count(DecoderActivation::kGabor, true);
    CHECK(train_n == gabor_n + 2);
    CHECK(train_has);
}

TEST_CASE("gradients through the complex blocks match finite differences") {
    nn::ParamStore store;
    Rng rng(77);
    GaborParams gp;
    gp.omega0 = 3.0;  // keep the envelope mild so gradients stay O(1)
    gp.upsilon0 = 1.0;
    gp.trainable = true;
    SfidDecoder dec =
        SfidDecoder::create(store, "dec", 4, 3, gp, DecoderActivation::kGabor, rng);
    Rng drng(78);
    Tensor es = random_tensor({3, 4}, drng, -0.5, 0.5);
    Tensor ef = random_tensor({3, 4}, drng, -0.5, 0.5);

    auto build = [&] {
        return nn::sum_all(nn::square(dec.apply(nn::constant(es), nn::constant(ef))));
    };
    store.zero_grads();
    nn::Var loss = build();
    loss.backward();
    auto probe = [&] {
        nn::NoGradGuard guard;
        return build().value()[0];
    };

    Rng pick(79);
    for (const char* name :
         {"dec.b0.w_s.weight", "dec.b1.w_s.w_re", "dec.b1.w_s.w_im", "dec.b2.u_f.b_im",
          "dec.out.w_im", "dec.out.bias", "dec.omega", "dec.upsilon"}) {
        nn::Var p = store.get(name);
        REQUIRE(p.has_grad());
        for (int reps = 0; reps < 3; ++reps) {
            const i64 idx = pick.uniform_int(p.value().size());
            const double fd = nn::finite_difference(probe, p.node->value, idx, 1e-6);
            const double an = p.grad()[idx];
            INFO(name, "[", idx, "] analytic ", an, " fd ", fd);
            CHECK(std::fabs(an - fd) <= 2e-5 * std::max({1.0, std::fabs(an), std::fabs(fd)}));
        }
    }
}

}  // TEST_SUITE

#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "feinfn/autograd.hpp"
#include "feinfn/rng.hpp"

namespace feinfn::nn {

/// Complex-valued activation carried as a pair of real tensors.
struct CVar {
    Var re, im;
};

CVar cadd(const CVar& a, const CVar& b);
CVar cmul(const CVar& a, const CVar& b);

/// Complex Gabor wavelet activation, applied elementwise:
///   G(x) = exp(j * omega * Re(x)) * exp(-|upsilon|^2 * |x|^2)
/// omega and upsilon are trainable single-element Vars shared per layer.
CVar gabor(const CVar& x, const Var& omega, const Var& upsilon);

/// Named, insertion-ordered parameter registry. Ordering is what makes
/// optimizer sweeps and checkpoint layout deterministic.
class ParamStore {
public:
    /// Uniform(-bound, bound) init.
    Var create(const std::string& name, std::vector<i64> shape, Rng& rng, double bound);
    /// He-style fan-in scaling: Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    Var create_fan_in(const std::string& name, std::vector<i64> shape, i64 fan_in, Rng& rng);
    Var create_zeros(const std::string& name, std::vector<i64> shape);
    Var create_full(const std::string& name, std::vector<i64> shape, double value);

    Var get(const std::string& name) const;
    bool contains(const std::string& name) const { return map_.count(name) > 0; }
    const std::vector<std::string>& names() const { return order_; }
    i64 total_size() const;
    void zero_grads();

private:
    Var insert(const std::string& name, Tensor value);

    std::vector<std::string> order_;
    std::unordered_map<std::string, Var> map_;
};

struct Linear {
    Var weight;  // (in, out)
    Var bias;    // (out)

    static Linear create(ParamStore& params, const std::string& prefix, i64 in, i64 out, Rng& rng);
    Var apply(const Var& x) const;  // (n, in) -> (n, out)
};

struct Conv2d {
    Var weight;  // (kh, kw, cin, cout)
    Var bias;    // (cout)
    Padding padding = Padding::kZero;

    static Conv2d create(ParamStore& params, const std::string& prefix, i64 kh, i64 kw, i64 cin,
                         i64 cout, Rng& rng, Padding padding);
    Var apply(const Var& x) const;  // (n, h, w, cin) -> (n, h, w, cout)
};

struct ComplexLinear {
    Var w_re, w_im;  // (in, out)
    Var b_re, b_im;  // (out)

    static ComplexLinear create(ParamStore& params, const std::string& prefix, i64 in, i64 out,
                                Rng& rng);
    CVar apply(const CVar& x) const;
};

}  // namespace feinfn::nn

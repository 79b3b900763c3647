#include "feinfn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace feinfn::nn {

CVar cadd(const CVar& a, const CVar& b) { return {add(a.re, b.re), add(a.im, b.im)}; }

CVar cmul(const CVar& a, const CVar& b) {
    return {sub(mul(a.re, b.re), mul(a.im, b.im)), add(mul(a.re, b.im), mul(a.im, b.re))};
}

CVar gabor(const CVar& x, const Var& omega, const Var& upsilon) {
    Var arg = mul_scalar_var(x.re, omega);
    Var mag2 = add(square(x.re), square(x.im));
    Var envelope = exp(neg(mul_scalar_var(mag2, square(upsilon))));
    return {mul(envelope, cos(arg)), mul(envelope, sin(arg))};
}

Var ParamStore::insert(const std::string& name, Tensor value) {
    if (map_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    Var v = parameter(std::move(value));
    order_.push_back(name);
    map_.emplace(name, v);
    return v;
}

Var ParamStore::create(const std::string& name, std::vector<i64> shape, Rng& rng, double bound) {
    Tensor t(shape);
    double* p = t.data();
    for (i64 i = 0; i < t.size(); ++i) p[i] = rng.uniform(-bound, bound);
    return insert(name, std::move(t));
}

Var ParamStore::create_fan_in(const std::string& name, std::vector<i64> shape, i64 fan_in, Rng& rng) {
    if (fan_in <= 0) throw std::invalid_argument("fan_in must be positive");
    return create(name, std::move(shape), rng, 1.0 / std::sqrt(static_cast<double>(fan_in)));
}

Var ParamStore::create_zeros(const std::string& name, std::vector<i64> shape) {
    return insert(name, Tensor::zeros(std::move(shape)));
}

Var ParamStore::create_full(const std::string& name, std::vector<i64> shape, double value) {
    return insert(name, Tensor::full(std::move(shape), value));
}

Var ParamStore::get(const std::string& name) const {
    auto it = map_.find(name);
    if (it == map_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
}

i64 ParamStore::total_size() const {
    i64 n = 0;
    for (const auto& name : order_) n += map_.at(name).value().size();
    return n;
}

void ParamStore::zero_grads() {
    for (const auto& name : order_) {
        auto it = map_.find(name);
        it->second.node->has_grad = false;
        it->second.node->grad = Tensor();
    }
}

Linear Linear::create(ParamStore& params, const std::string& prefix, i64 in, i64 out, Rng& rng) {
    Linear l;
    l.weight = params.create_fan_in(prefix + ".weight", {in, out}, in, rng);
    l.bias = params.create_fan_in(prefix + ".bias", {out}, in, rng);
    return l;
}

Var Linear::apply(const Var& x) const { return add_bias(matmul(x, weight), bias); }

Conv2d Conv2d::create(ParamStore& params, const std::string& prefix, i64 kh, i64 kw, i64 cin,
                      i64 cout, Rng& rng, Padding padding) {
    Conv2d c;
    const i64 fan_in = kh * kw * cin;
    c.weight = params.create_fan_in(prefix + ".weight", {kh, kw, cin, cout}, fan_in, rng);
    c.bias = params.create_fan_in(prefix + ".bias", {cout}, fan_in, rng);
    c.padding = padding;
    return c;
}

Var Conv2d::apply(const Var& x) const { return conv2d(x, weight, bias, padding); }

ComplexLinear ComplexLinear::create(ParamStore& params, const std::string& prefix, i64 in, i64 out,
                                    Rng& rng) {
    ComplexLinear l;
    l.w_re = params.create_fan_in(prefix + ".w_re", {in, out}, in, rng);
    l.w_im = params.create_fan_in(prefix + ".w_im", {in, out}, in, rng);
    l.b_re = params.create_fan_in(prefix + ".b_re", {out}, in, rng);
    l.b_im = params.create_fan_in(prefix + ".b_im", {out}, in, rng);
    return l;
}

CVar ComplexLinear::apply(const CVar& x) const {
    Var re = add_bias(sub(matmul(x.re, w_re), matmul(x.im, w_im)), b_re);
    Var im = add_bias(add(matmul(x.re, w_im), matmul(x.im, w_re)), b_im);
    return {re, im};
}

}  // namespace feinfn::nn

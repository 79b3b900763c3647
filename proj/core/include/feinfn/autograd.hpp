#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "feinfn/tensor.hpp"

namespace feinfn::nn {

/// Reverse-mode autodiff over Tensor values. Graphs are taped dynamically:
/// every op returns a Var whose node remembers its parents and how to push
/// gradients back to them. With gradients disabled (NoGradGuard) ops produce
/// detached constants, so evaluation never retains the graph.

bool grad_enabled();
void set_grad_enabled(bool enabled);

struct NoGradGuard {
    NoGradGuard() : prev_(grad_enabled()) { set_grad_enabled(false); }
    ~NoGradGuard() { set_grad_enabled(prev_); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

enum class Padding { kZero, kPeriodic };

namespace detail {
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    i64 seq = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;
};
using NodePtr = std::shared_ptr<Node>;
}  // namespace detail

class Var {
public:
    Var() = default;
    explicit Var(detail::NodePtr n) : node(std::move(n)) {}

    bool defined() const { return node != nullptr; }
    const Tensor& value() const { return node->value; }
    Tensor& value() { return node->value; }
    const Tensor& grad() const { return node->grad; }
    bool has_grad() const { return node && node->has_grad; }
    bool requires_grad() const { return node && node->requires_grad; }
    const std::vector<i64>& shape() const { return node->value.shape(); }

    /// Run reverse accumulation from this (scalar) output.
    void backward() const;
    void zero_grad();

    detail::NodePtr node;
};

Var constant(Tensor value);
Var parameter(Tensor value);

// -- arithmetic -------------------------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_scalar(const Var& a, double c);
Var mul_scalar(const Var& a, double c);
/// Multiply by a single-element Var (used for trainable scalar gains).
Var mul_scalar_var(const Var& a, const Var& s);
Var neg(const Var& a);

// -- elementwise nonlinearities ----------------------------------------------
Var relu(const Var& a);
Var leaky_relu(const Var& a, double negative_slope);
Var gelu(const Var& a);
Var exp(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);
Var abs(const Var& a);

// -- shape ------------------------------------------------------------------
Var reshape(const Var& a, std::vector<i64> new_shape);
Var concat(const std::vector<Var>& parts, i64 axis);
Var slice(const Var& a, i64 axis, i64 start, i64 len);

// -- reductions ---------------------------------------------------------------
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var sum_axis(const Var& a, i64 axis);
Var softmax(const Var& a, i64 axis);

// -- linear algebra / network primitives -------------------------------------
Var matmul(const Var& a, const Var& b);
Var add_bias(const Var& x, const Var& bias);
Var gather_rows(const Var& x, std::vector<i64> row_indices);
Var tile_rows_to_spatial(const Var& x, i64 height, i64 width);
Var conv2d(const Var& x, const Var& weight, const Var& bias, Padding padding);
Var pool_mean_hw(const Var& x);
Var pixel_shuffle(const Var& x, i64 factor);
/// Per-channel 3x3 mean over the valid window (edge pixels average fewer
/// taps, so constants are fixed points everywhere).
Var box3_mean(const Var& x);

/// Fixed-weight 2-D resampling (bilinear / bicubic) as a differentiable
/// linear map over an (H, W, C) tensor.
struct ResamplePlan {
    i64 in_height = 0, in_width = 0, out_height = 0, out_width = 0;
    int taps = 0;                  // taps per axis (2 bilinear, 4 bicubic)
    std::vector<i64> row_idx;      // out_height x taps
    std::vector<double> row_w;
    std::vector<i64> col_idx;      // out_width x taps
    std::vector<double> col_w;
};
ResamplePlan make_resample_plan(i64 in_h, i64 in_w, i64 out_h, i64 out_w, bool bicubic);
Var resample2d(const Var& x, const ResamplePlan& plan);

// -- Fourier ------------------------------------------------------------------
/// Unnormalized 2-D DFT over axes 1,2 of a real (N, H, W, C) tensor.
std::pair<Var, Var> dft2_spatial(const Var& x);
/// Polar split: amplitude = |re + j im|, phase = atan2(im, re) in (-pi, pi].
std::pair<Var, Var> amp_phase(const Var& re, const Var& im);

/// Central finite-difference derivative of `f` with respect to entry `index`
/// of `theta`; the workhorse behind the gradient-check tests.
double finite_difference(const std::function<double()>& f, Tensor& theta, i64 index, double step);

}  // namespace feinfn::nn

#include "feinfn/autograd.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "feinfn/fourier.hpp"

namespace feinfn::nn {

namespace {

thread_local bool g_grad_enabled = true;
std::atomic<i64> g_seq{0};

using detail::Node;
using detail::NodePtr;

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

NodePtr make_node(Tensor value, std::vector<NodePtr> parents) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->seq = ++g_seq;
    bool rg = false;
    if (g_grad_enabled) {
        for (const auto& p : parents) {
            if (p && p->requires_grad) rg = true;
        }
    }
    n->requires_grad = rg;
    if (rg) n->parents = std::move(parents);
    return n;
}

/// Lazily materialize a node's gradient buffer and mark it live.
Tensor& grad_buf(Node& n) {
    if (!n.has_grad) {
        n.grad = Tensor::zeros(n.value.shape());
        n.has_grad = true;
    }
    return n.grad;
}

void accum_same_shape(const NodePtr& n, const Tensor& g) {
    if (!n->requires_grad) return;
    Tensor& buf = grad_buf(*n);
    const double* src = g.data();
    double* dst = buf.data();
    for (i64 i = 0; i < buf.size(); ++i) dst[i] += src[i];
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a.value().same_shape(b.value())) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    }
}

/// Decompose a shape around `axis` into (outer, n, inner) strides.
void axis_split(const std::vector<i64>& shape, i64 axis, i64& outer, i64& n, i64& inner) {
    if (axis < 0 || axis >= static_cast<i64>(shape.size())) {
        throw std::invalid_argument("axis out of range");
    }
    outer = 1;
    for (i64 i = 0; i < axis; ++i) outer *= shape[i];
    n = shape[axis];
    inner = 1;
    for (i64 i = axis + 1; i < static_cast<i64>(shape.size()); ++i) inner *= shape[i];
}

Var unary(const Var& a, Tensor out, std::function<void(Node&, const NodePtr&)> push) {
    auto node = make_node(std::move(out), {a.node});
    if (node->requires_grad) {
        node->backprop = [an = a.node, push = std::move(push)](Node& self) { push(self, an); };
    }
    return Var(node);
}

// Keys cubic convolution kernel (a = -0.5), matching the image resampler.
double cubic_kernel(double t) {
    t = std::fabs(t);
    if (t < 1.0) return 1.0 + t * t * (1.5 * t - 2.5);
    if (t < 2.0) return 2.0 + t * (-4.0 + t * (2.5 - 0.5 * t));
    return 0.0;
}

void plan_axis(i64 in_n, i64 out_n, bool bicubic, std::vector<i64>& idx, std::vector<double>& w) {
    const int taps = bicubic ? 4 : 2;
    idx.assign(static_cast<std::size_t>(out_n) * taps, 0);
    w.assign(static_cast<std::size_t>(out_n) * taps, 0.0);
    for (i64 o = 0; o < out_n; ++o) {
        double u = (static_cast<double>(o) + 0.5) * static_cast<double>(in_n) / static_cast<double>(out_n) - 0.5;
        i64 base = static_cast<i64>(std::floor(u));
        double frac = u - static_cast<double>(base);
        for (int t = 0; t < taps; ++t) {
            i64 tap = bicubic ? base - 1 + t : base + t;
            double weight = bicubic ? cubic_kernel(frac - static_cast<double>(t - 1))
                                    : (t == 0 ? 1.0 - frac : frac);
            idx[static_cast<std::size_t>(o) * taps + t] = std::clamp<i64>(tap, 0, in_n - 1);
            w[static_cast<std::size_t>(o) * taps + t] = weight;
        }
    }
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool enabled) { g_grad_enabled = enabled; }

void Var::backward() const {
    if (!node) throw std::logic_error("backward() on empty Var");
    if (node->value.size() != 1) {
        throw std::logic_error("backward() requires a scalar output, got shape " +
                               shape_to_string(node->value.shape()));
    }
    // Collect the reachable graph, then replay in reverse creation order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{node.get()};
    seen.insert(node.get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents) {
            if (p && p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
        }
    }
    std::sort(order.begin(), order.end(), [](const Node* a, const Node* b) { return a->seq > b->seq; });
    grad_buf(*node).fill(1.0);
    for (Node* n : order) {
        if (n->has_grad && n->backprop) n->backprop(*n);
    }
}

void Var::zero_grad() {
    if (node) {
        node->has_grad = false;
        node->grad = Tensor();
    }
}

Var constant(Tensor value) { return Var(make_node(std::move(value), {})); }

Var parameter(Tensor value) {
    auto n = make_node(std::move(value), {});
    n->requires_grad = true;
    return Var(n);
}

// ---------------------------------------------------------------------------
// arithmetic

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out = a.value();
    const double* pb = b.value().data();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] += pb[i];
    auto node = make_node(std::move(out), {a.node, b.node});
    if (node->requires_grad) {
        node->backprop = [an = a.node, bn = b.node](Node& self) {
            accum_same_shape(an, self.grad);
            accum_same_shape(bn, self.grad);
        };
    }
    return Var(node);
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a.value();
    const double* pb = b.value().data();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] -= pb[i];
    auto node = make_node(std::move(out), {a.node, b.node});
    if (node->requires_grad) {
        node->backprop = [an = a.node, bn = b.node](Node& self) {
            accum_same_shape(an, self.grad);
            if (bn->requires_grad) {
                Tensor& buf = grad_buf(*bn);
                const double* g = self.grad.data();
                double* dst = buf.data();
                for (i64 i = 0; i < buf.size(); ++i) dst[i] -= g[i];
            }
        };
    }
    return Var(node);
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a.value();
    const double* pb = b.value().data();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] *= pb[i];
    auto node = make_node(std::move(out), {a.node, b.node});
    if (node->requires_grad) {
        node->backprop = [an = a.node, bn = b.node](Node& self) {
            const double* g = self.grad.data();
            if (an->requires_grad) {
                Tensor& buf = grad_buf(*an);
                const double* pb2 = bn->value.data();
                double* dst = buf.data();
                for (i64 i = 0; i < buf.size(); ++i) dst[i] += g[i] * pb2[i];
            }
            if (bn->requires_grad) {
                Tensor& buf = grad_buf(*bn);
                const double* pa = an->value.data();
                double* dst = buf.data();
                for (i64 i = 0; i < buf.size(); ++i) dst[i] += g[i] * pa[i];
            }
        };
    }
    return Var(node);
}

Var add_scalar(const Var& a, double c) {
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] += c;
    return unary(a, std::move(out), [](Node& self, const NodePtr& an) { accum_same_shape(an, self.grad); });
}

Var mul_scalar(const Var& a, double c) {
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] *= c;
    return unary(a, std::move(out), [c](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        double* dst = buf.data();
        for (i64 i = 0; i < buf.size(); ++i) dst[i] += g[i] * c;
    });
}

Var mul_scalar_var(const Var& a, const Var& s) {
    if (s.value().size() != 1) throw std::invalid_argument("mul_scalar_var: scalar operand must have one element");
    const double sv = s.value().data()[0];
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] *= sv;
    auto node = make_node(std::move(out), {a.node, s.node});
    if (node->requires_grad) {
        node->backprop = [an = a.node, sn = s.node](Node& self) {
            const double* g = self.grad.data();
            if (an->requires_grad) {
                Tensor& buf = grad_buf(*an);
                const double s2 = sn->value.data()[0];
                double* dst = buf.data();
                for (i64 i = 0; i < buf.size(); ++i) dst[i] += g[i] * s2;
            }
            if (sn->requires_grad) {
                double acc = 0.0;
                const double* pa = an->value.data();
                for (i64 i = 0; i < an->value.size(); ++i) acc += g[i] * pa[i];
                grad_buf(*sn).data()[0] += acc;
            }
        };
    }
    return Var(node);
}

Var neg(const Var& a) { return mul_scalar(a, -1.0); }

// ---------------------------------------------------------------------------
// elementwise nonlinearities

Var relu(const Var& a) {
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] = po[i] > 0.0 ? po[i] : 0.0;
    return unary(a, std::move(out), [](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        const double* x = an->value.data();
        double* dst = buf.data();
        for (i64 i = 0; i < buf.size(); ++i) dst[i] += x[i] > 0.0 ? g[i] : 0.0;
    });
}

Var leaky_relu(const Var& a, double negative_slope) {
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] = po[i] > 0.0 ? po[i] : negative_slope * po[i];
    return unary(a, std::move(out), [negative_slope](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        const double* x = an->value.data();
        double* dst = buf.data();
        for (i64 i = 0; i < buf.size(); ++i) dst[i] += x[i] > 0.0 ? g[i] : negative_slope * g[i];
    });
}

Var gelu(const Var& a) {
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) {
        po[i] = 0.5 * po[i] * (1.0 + std::erf(po[i] * M_SQRT1_2));
    }
    return unary(a, std::move(out), [](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        const double* x = an->value.data();
        double* dst = buf.data();
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        for (i64 i = 0; i < buf.size(); ++i) {
            double cdf = 0.5 * (1.0 + std::erf(x[i] * M_SQRT1_2));
            double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
            dst[i] += g[i] * (cdf + x[i] * pdf);
        }
    });
}

Var exp(const Var& a) {
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] = std::exp(po[i]);
    return unary(a, std::move(out), [](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        const double* y = self.value.data();
        double* dst = buf.data();
        for (i64 i = 0; i < buf.size(); ++i) dst[i] += g[i] * y[i];
    });
}

Var sin(const Var& a) {
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] = std::sin(po[i]);
    return unary(a, std::move(out), [](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        const double* x = an->value.data();
        double* dst = buf.data();
        for (i64 i = 0; i < buf.size(); ++i) dst[i] += g[i] * std::cos(x[i]);
    });
}

Var cos(const Var& a) {
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] = std::cos(po[i]);
    return unary(a, std::move(out), [](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        const double* x = an->value.data();
        double* dst = buf.data();
        for (i64 i = 0; i < buf.size(); ++i) dst[i] -= g[i] * std::sin(x[i]);
    });
}

Var sqrt(const Var& a) {
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] = std::sqrt(po[i]);
    return unary(a, std::move(out), [](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        const double* y = self.value.data();
        double* dst = buf.data();
        for (i64 i = 0; i < buf.size(); ++i) dst[i] += g[i] * 0.5 / y[i];
    });
}

Var square(const Var& a) {
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] *= po[i];
    return unary(a, std::move(out), [](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        const double* x = an->value.data();
        double* dst = buf.data();
        for (i64 i = 0; i < buf.size(); ++i) dst[i] += g[i] * 2.0 * x[i];
    });
}

Var abs(const Var& a) {
    Tensor out = a.value();
    double* po = out.data();
    for (i64 i = 0; i < out.size(); ++i) po[i] = std::fabs(po[i]);
    return unary(a, std::move(out), [](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        const double* x = an->value.data();
        double* dst = buf.data();
        for (i64 i = 0; i < buf.size(); ++i) {
            if (x[i] > 0.0) dst[i] += g[i];
            else if (x[i] < 0.0) dst[i] -= g[i];
        }
    });
}

// ---------------------------------------------------------------------------
// shape ops

Var reshape(const Var& a, std::vector<i64> new_shape) {
    if (shape_size(new_shape) != a.value().size()) {
        throw std::invalid_argument("reshape: element count mismatch " + shape_to_string(a.shape()) +
                                    " -> " + shape_to_string(new_shape));
    }
    Tensor out = a.value();
    out.reshape_in_place(new_shape);
    return unary(a, std::move(out), [](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        double* dst = buf.data();
        for (i64 i = 0; i < buf.size(); ++i) dst[i] += g[i];
    });
}

Var concat(const std::vector<Var>& parts, i64 axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    const auto& first = parts.front().shape();
    i64 outer = 1, inner = 1, unused = 0;
    axis_split(first, axis, outer, unused, inner);
    i64 total_axis = 0;
    for (const auto& p : parts) {
        const auto& s = p.shape();
        if (static_cast<i64>(s.size()) != static_cast<i64>(first.size())) {
            throw std::invalid_argument("concat: rank mismatch");
        }
        for (i64 d = 0; d < static_cast<i64>(s.size()); ++d) {
            if (d != axis && s[d] != first[d]) throw std::invalid_argument("concat: shape mismatch off-axis");
        }
        total_axis += s[axis];
    }
    std::vector<i64> out_shape = first;
    out_shape[axis] = total_axis;
    Tensor out(out_shape);
    double* po = out.data();
    std::vector<i64> offsets(parts.size(), 0);
    i64 off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        offsets[k] = off;
        const i64 nk = parts[k].shape()[axis];
        const double* src = parts[k].value().data();
        for (i64 o = 0; o < outer; ++o) {
            double* dst = po + (o * total_axis + off) * inner;
            const double* s = src + o * nk * inner;
            std::copy(s, s + nk * inner, dst);
        }
        off += nk;
    }
    std::vector<NodePtr> pnodes;
    pnodes.reserve(parts.size());
    for (const auto& p : parts) pnodes.push_back(p.node);
    auto node = make_node(std::move(out), std::move(pnodes));
    if (node->requires_grad) {
        std::vector<i64> part_sizes;
        for (const auto& p : parts) part_sizes.push_back(p.shape()[axis]);
        node->backprop = [offsets, part_sizes, outer, inner, total_axis](Node& self) {
            const double* g = self.grad.data();
            for (std::size_t k = 0; k < self.parents.size(); ++k) {
                const NodePtr& pn = self.parents[k];
                if (!pn->requires_grad) continue;
                Tensor& buf = grad_buf(*pn);
                double* dst = buf.data();
                const i64 nk = part_sizes[k];
                for (i64 o = 0; o < outer; ++o) {
                    const double* gs = g + (o * total_axis + offsets[k]) * inner;
                    double* d = dst + o * nk * inner;
                    for (i64 i = 0; i < nk * inner; ++i) d[i] += gs[i];
                }
            }
        };
    }
    return Var(node);
}

Var slice(const Var& a, i64 axis, i64 start, i64 len) {
    i64 outer = 0, n = 0, inner = 0;
    axis_split(a.shape(), axis, outer, n, inner);
    if (start < 0 || len <= 0 || start + len > n) throw std::invalid_argument("slice: range out of bounds");
    std::vector<i64> out_shape = a.shape();
    out_shape[axis] = len;
    Tensor out(out_shape);
    const double* src = a.value().data();
    double* dst = out.data();
    for (i64 o = 0; o < outer; ++o) {
        const double* s = src + (o * n + start) * inner;
        std::copy(s, s + len * inner, dst + o * len * inner);
    }
    return unary(a, std::move(out), [outer, n, inner, start, len](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        double* dst2 = buf.data();
        for (i64 o = 0; o < outer; ++o) {
            double* d = dst2 + (o * n + start) * inner;
            const double* gs = g + o * len * inner;
            for (i64 i = 0; i < len * inner; ++i) d[i] += gs[i];
        }
    });
}

// ---------------------------------------------------------------------------
// reductions

Var sum_all(const Var& a) {
    double acc = 0.0;
    const double* p = a.value().data();
    for (i64 i = 0; i < a.value().size(); ++i) acc += p[i];
    Tensor out({1});
    out.data()[0] = acc;
    return unary(a, std::move(out), [](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double g = self.grad.data()[0];
        double* dst = buf.data();
        for (i64 i = 0; i < buf.size(); ++i) dst[i] += g;
    });
}

Var mean_all(const Var& a) { return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a.value().size())); }

Var sum_axis(const Var& a, i64 axis) {
    i64 outer = 0, n = 0, inner = 0;
    axis_split(a.shape(), axis, outer, n, inner);
    std::vector<i64> out_shape;
    for (i64 d = 0; d < static_cast<i64>(a.shape().size()); ++d) {
        if (d != axis) out_shape.push_back(a.shape()[d]);
    }
    if (out_shape.empty()) out_shape.push_back(1);
    Tensor out = Tensor::zeros(out_shape);
    const double* src = a.value().data();
    double* dst = out.data();
    for (i64 o = 0; o < outer; ++o) {
        for (i64 k = 0; k < n; ++k) {
            const double* s = src + (o * n + k) * inner;
            double* d = dst + o * inner;
            for (i64 i = 0; i < inner; ++i) d[i] += s[i];
        }
    }
    return unary(a, std::move(out), [outer, n, inner](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        double* dst2 = buf.data();
        for (i64 o = 0; o < outer; ++o) {
            for (i64 k = 0; k < n; ++k) {
                double* d = dst2 + (o * n + k) * inner;
                const double* gs = g + o * inner;
                for (i64 i = 0; i < inner; ++i) d[i] += gs[i];
            }
        }
    });
}

Var softmax(const Var& a, i64 axis) {
    i64 outer = 0, n = 0, inner = 0;
    axis_split(a.shape(), axis, outer, n, inner);
    Tensor out = a.value();
    double* p = out.data();
    for (i64 o = 0; o < outer; ++o) {
        for (i64 i = 0; i < inner; ++i) {
            double* base = p + o * n * inner + i;
            double mx = base[0];
            for (i64 k = 1; k < n; ++k) mx = std::max(mx, base[k * inner]);
            double denom = 0.0;
            for (i64 k = 0; k < n; ++k) {
                double e = std::exp(base[k * inner] - mx);
                base[k * inner] = e;
                denom += e;
            }
            for (i64 k = 0; k < n; ++k) base[k * inner] /= denom;
        }
    }
    return unary(a, std::move(out), [outer, n, inner](Node& self, const NodePtr& an) {
        if (!an->requires_grad) return;
        Tensor& buf = grad_buf(*an);
        const double* g = self.grad.data();
        const double* y = self.value.data();
        double* dst = buf.data();
        for (i64 o = 0; o < outer; ++o) {
            for (i64 i = 0; i < inner; ++i) {
                const i64 off = o * n * inner + i;
                double dot = 0.0;
                for (i64 k = 0; k < n; ++k) dot += g[off + k * inner] * y[off + k * inner];
                for (i64 k = 0; k < n; ++k) {
                    dst[off + k * inner] += y[off + k * inner] * (g[off + k * inner] - dot);
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// linear algebra / network primitives

Var matmul(const Var& a, const Var& b) {
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
        throw std::invalid_argument("matmul: incompatible shapes " + shape_to_string(sa) + " x " +
                                    shape_to_string(sb));
    }
    const i64 m = sa[0], k = sa[1], n = sb[1];
    Tensor out({m, n});
    {
        ConstMapRM ma(a.value().data(), m, k);
        ConstMapRM mb(b.value().data(), k, n);
        MapRM mo(out.data(), m, n);
        mo.noalias() = ma * mb;
    }
    auto node = make_node(std::move(out), {a.node, b.node});
    if (node->requires_grad) {
        node->backprop = [an = a.node, bn = b.node, m, k, n](Node& self) {
            ConstMapRM g(self.grad.data(), m, n);
            if (an->requires_grad) {
                Tensor& buf = grad_buf(*an);
                MapRM da(buf.data(), m, k);
                ConstMapRM mb(bn->value.data(), k, n);
                da.noalias() += g * mb.transpose();
            }
            if (bn->requires_grad) {
                Tensor& buf = grad_buf(*bn);
                MapRM db(buf.data(), k, n);
                ConstMapRM ma(an->value.data(), m, k);
                db.noalias() += ma.transpose() * g;
            }
        };
    }
    return Var(node);
}

Var add_bias(const Var& x, const Var& bias) {
    const auto& sx = x.shape();
    const auto& sb = bias.shape();
    if (sb.size() != 1 || sb[0] != sx.back()) {
        throw std::invalid_argument("add_bias: bias must match trailing axis");
    }
    const i64 c = sb[0];
    const i64 rows = x.value().size() / c;
    Tensor out = x.value();
    double* po = out.data();
    const double* pb = bias.value().data();
    for (i64 r = 0; r < rows; ++r) {
        double* d = po + r * c;
        for (i64 i = 0; i < c; ++i) d[i] += pb[i];
    }
    auto node = make_node(std::move(out), {x.node, bias.node});
    if (node->requires_grad) {
        node->backprop = [xn = x.node, bn = bias.node, rows, c](Node& self) {
            const double* g = self.grad.data();
            if (xn->requires_grad) accum_same_shape(xn, self.grad);
            if (bn->requires_grad) {
                Tensor& buf = grad_buf(*bn);
                double* dst = buf.data();
                for (i64 r = 0; r < rows; ++r) {
                    const double* gs = g + r * c;
                    for (i64 i = 0; i < c; ++i) dst[i] += gs[i];
                }
            }
        };
    }
    return Var(node);
}

Var gather_rows(const Var& x, std::vector<i64> row_indices) {
    const auto& sx = x.shape();
    if (sx.size() < 2) throw std::invalid_argument("gather_rows: input must have rank >= 2");
    const i64 n = sx[0];
    const i64 inner = x.value().size() / n;
    for (i64 idx : row_indices) {
        if (idx < 0 || idx >= n) throw std::invalid_argument("gather_rows: index out of range");
    }
    std::vector<i64> out_shape = sx;
    out_shape[0] = static_cast<i64>(row_indices.size());
    Tensor out(out_shape);
    const double* src = x.value().data();
    double* dst = out.data();
    for (std::size_t r = 0; r < row_indices.size(); ++r) {
        const double* s = src + row_indices[r] * inner;
        std::copy(s, s + inner, dst + static_cast<i64>(r) * inner);
    }
    return unary(x, std::move(out), [idx = std::move(row_indices), inner](Node& self, const NodePtr& xn) {
        if (!xn->requires_grad) return;
        Tensor& buf = grad_buf(*xn);
        const double* g = self.grad.data();
        double* dst2 = buf.data();
        for (std::size_t r = 0; r < idx.size(); ++r) {
            double* d = dst2 + idx[r] * inner;
            const double* gs = g + static_cast<i64>(r) * inner;
            for (i64 i = 0; i < inner; ++i) d[i] += gs[i];
        }
    });
}

Var tile_rows_to_spatial(const Var& x, i64 height, i64 width) {
    const auto& sx = x.shape();
    if (sx.size() != 2) throw std::invalid_argument("tile_rows_to_spatial: expected (n, c) input");
    const i64 n = sx[0], c = sx[1];
    Tensor out({n, height, width, c});
    const double* src = x.value().data();
    double* dst = out.data();
    for (i64 b = 0; b < n; ++b) {
        const double* s = src + b * c;
        for (i64 p = 0; p < height * width; ++p) {
            std::copy(s, s + c, dst + (b * height * width + p) * c);
        }
    }
    return unary(x, std::move(out), [n, height, width, c](Node& self, const NodePtr& xn) {
        if (!xn->requires_grad) return;
        Tensor& buf = grad_buf(*xn);
        const double* g = self.grad.data();
        double* dst2 = buf.data();
        for (i64 b = 0; b < n; ++b) {
            double* d = dst2 + b * c;
            for (i64 p = 0; p < height * width; ++p) {
                const double* gs = g + (b * height * width + p) * c;
                for (i64 i = 0; i < c; ++i) d[i] += gs[i];
            }
        }
    });
}

namespace {

/// Gather conv patches into a (N*H*W, KH*KW*Cin) row-major matrix.
void im2col(const Tensor& x, i64 kh, i64 kw, Padding padding, std::vector<double>& col) {
    const i64 n = x.dim(0), h = x.dim(1), w = x.dim(2), cin = x.dim(3);
    const i64 ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    const i64 patch = kh * kw * cin;
    col.assign(static_cast<std::size_t>(n * h * w * patch), 0.0);
    const double* src = x.data();
    double* dst = col.data();
    for (i64 b = 0; b < n; ++b) {
        for (i64 r = 0; r < h; ++r) {
            for (i64 cc = 0; cc < w; ++cc) {
                double* row = dst + ((b * h + r) * w + cc) * patch;
                for (i64 dr = 0; dr < kh; ++dr) {
                    i64 rr = r + dr - ph;
                    if (padding == Padding::kPeriodic) rr = ((rr % h) + h) % h;
                    if (rr < 0 || rr >= h) continue;  // zero padding
                    for (i64 dc = 0; dc < kw; ++dc) {
                        i64 wc = cc + dc - pw;
                        if (padding == Padding::kPeriodic) wc = ((wc % w) + w) % w;
                        if (wc < 0 || wc >= w) continue;
                        const double* s = src + ((b * h + rr) * w + wc) * cin;
                        std::copy(s, s + cin, row + (dr * kw + dc) * cin);
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col: scatter-add patch-matrix gradients back onto the image.
void col2im_add(const std::vector<double>& col, i64 n, i64 h, i64 w, i64 cin, i64 kh, i64 kw,
                Padding padding, double* dst) {
    const i64 ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    const i64 patch = kh * kw * cin;
    const double* src = col.data();
    for (i64 b = 0; b < n; ++b) {
        for (i64 r = 0; r < h; ++r) {
            for (i64 cc = 0; cc < w; ++cc) {
                const double* row = src + ((b * h + r) * w + cc) * patch;
                for (i64 dr = 0; dr < kh; ++dr) {
                    i64 rr = r + dr - ph;
                    if (padding == Padding::kPeriodic) rr = ((rr % h) + h) % h;
                    if (rr < 0 || rr >= h) continue;
                    for (i64 dc = 0; dc < kw; ++dc) {
                        i64 wc = cc + dc - pw;
                        if (padding == Padding::kPeriodic) wc = ((wc % w) + w) % w;
                        if (wc < 0 || wc >= w) continue;
                        double* d = dst + ((b * h + rr) * w + wc) * cin;
                        const double* s = row + (dr * kw + dc) * cin;
                        for (i64 i = 0; i < cin; ++i) d[i] += s[i];
                    }
                }
            }
        }
    }
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, Padding padding) {
    const auto& sx = x.shape();
    const auto& sw = weight.shape();
    if (sx.size() != 4 || sw.size() != 4) throw std::invalid_argument("conv2d: expected NHWC input and (kh,kw,cin,cout) weight");
    if (sx[3] != sw[2]) throw std::invalid_argument("conv2d: channel mismatch");
    if (sw[0] % 2 == 0 || sw[1] % 2 == 0) throw std::invalid_argument("conv2d: kernel dims must be odd");
    const i64 n = sx[0], h = sx[1], w = sx[2], cin = sx[3];
    const i64 kh = sw[0], kw = sw[1], cout = sw[3];
    const i64 rows = n * h * w;
    const i64 patch = kh * kw * cin;
    const bool has_bias = bias.defined();
    if (has_bias && (bias.shape().size() != 1 || bias.shape()[0] != cout)) {
        throw std::invalid_argument("conv2d: bias must be (cout)");
    }

    Tensor out({n, h, w, cout});
    const bool pointwise = (kh == 1 && kw == 1);
    std::vector<double> col;
    if (!pointwise) im2col(x.value(), kh, kw, padding, col);
    {
        ConstMapRM mc(pointwise ? x.value().data() : col.data(), rows, patch);
        ConstMapRM mw(weight.value().data(), patch, cout);
        MapRM mo(out.data(), rows, cout);
        mo.noalias() = mc * mw;
    }
    if (has_bias) {
        const double* pb = bias.value().data();
        double* po = out.data();
        for (i64 r = 0; r < rows; ++r) {
            double* d = po + r * cout;
            for (i64 i = 0; i < cout; ++i) d[i] += pb[i];
        }
    }

    std::vector<NodePtr> parents{x.node, weight.node};
    if (has_bias) parents.push_back(bias.node);
    auto node = make_node(std::move(out), std::move(parents));
    if (node->requires_grad) {
        NodePtr bn = has_bias ? bias.node : nullptr;
        node->backprop = [xn = x.node, wn = weight.node, bn, n, h, w, cin, kh, kw, cout, padding](Node& self) {
            const i64 rows2 = n * h * w;
            const i64 patch2 = kh * kw * cin;
            const bool pw1 = (kh == 1 && kw == 1);
            ConstMapRM g(self.grad.data(), rows2, cout);
            std::vector<double> col2;
            if (!pw1 && (wn->requires_grad || xn->requires_grad)) {
                if (wn->requires_grad) im2col(xn->value, kh, kw, padding, col2);
            }
            if (wn->requires_grad) {
                Tensor& buf = grad_buf(*wn);
                MapRM dw(buf.data(), patch2, cout);
                ConstMapRM mc(pw1 ? xn->value.data() : col2.data(), rows2, patch2);
                dw.noalias() += mc.transpose() * g;
            }
            if (bn && bn->requires_grad) {
                Tensor& buf = grad_buf(*bn);
                Eigen::Map<Eigen::VectorXd> db(buf.data(), cout);
                db.noalias() += g.colwise().sum().transpose();
            }
            if (xn->requires_grad) {
                Tensor& buf = grad_buf(*xn);
                if (pw1) {
                    MapRM dx(buf.data(), rows2, patch2);
                    ConstMapRM mw(wn->value.data(), patch2, cout);
                    dx.noalias() += g * mw.transpose();
                } else {
                    std::vector<double> dcol(static_cast<std::size_t>(rows2 * patch2));
                    MapRM md(dcol.data(), rows2, patch2);
                    ConstMapRM mw(wn->value.data(), patch2, cout);
                    md.noalias() = g * mw.transpose();
                    col2im_add(dcol, n, h, w, cin, kh, kw, padding, buf.data());
                }
            }
        };
    }
    return Var(node);
}

Var pool_mean_hw(const Var& x) {
    const auto& sx = x.shape();
    if (sx.size() != 4) throw std::invalid_argument("pool_mean_hw: expected NHWC input");
    const i64 n = sx[0], h = sx[1], w = sx[2], c = sx[3];
    const double inv = 1.0 / static_cast<double>(h * w);
    Tensor out = Tensor::zeros({n, c});
    const double* src = x.value().data();
    double* dst = out.data();
    for (i64 b = 0; b < n; ++b) {
        for (i64 p = 0; p < h * w; ++p) {
            const double* s = src + (b * h * w + p) * c;
            double* d = dst + b * c;
            for (i64 i = 0; i < c; ++i) d[i] += s[i];
        }
    }
    for (i64 i = 0; i < out.size(); ++i) dst[i] *= inv;
    return unary(x, std::move(out), [n, h, w, c, inv](Node& self, const NodePtr& xn) {
        if (!xn->requires_grad) return;
        Tensor& buf = grad_buf(*xn);
        const double* g = self.grad.data();
        double* dst2 = buf.data();
        for (i64 b = 0; b < n; ++b) {
            const double* gs = g + b * c;
            for (i64 p = 0; p < h * w; ++p) {
                double* d = dst2 + (b * h * w + p) * c;
                for (i64 i = 0; i < c; ++i) d[i] += gs[i] * inv;
            }
        }
    });
}

Var pixel_shuffle(const Var& x, i64 factor) {
    const auto& sx = x.shape();
    if (sx.size() != 4) throw std::invalid_argument("pixel_shuffle: expected NHWC input");
    if (factor < 1 || sx[3] % (factor * factor) != 0) {
        throw std::invalid_argument("pixel_shuffle: channels must be divisible by factor^2");
    }
    const i64 n = sx[0], h = sx[1], w = sx[2];
    const i64 c = sx[3] / (factor * factor);
    Tensor out({n, h * factor, w * factor, c});
    const double* src = x.value().data();
    double* dst = out.data();
    const i64 oh = h * factor, ow = w * factor;
    for (i64 b = 0; b < n; ++b) {
        for (i64 r = 0; r < oh; ++r) {
            for (i64 cc = 0; cc < ow; ++cc) {
                const i64 ir = r / factor, ic = cc / factor;
                const i64 sub = (r % factor) * factor + (cc % factor);
                const double* s = src + (((b * h + ir) * w + ic) * factor * factor + sub) * c;
                double* d = dst + ((b * oh + r) * ow + cc) * c;
                std::copy(s, s + c, d);
            }
        }
    }
    return unary(x, std::move(out), [n, h, w, c, factor](Node& self, const NodePtr& xn) {
        if (!xn->requires_grad) return;
        Tensor& buf = grad_buf(*xn);
        const double* g = self.grad.data();
        double* dst2 = buf.data();
        const i64 oh = h * factor, ow = w * factor;
        for (i64 b = 0; b < n; ++b) {
            for (i64 r = 0; r < oh; ++r) {
                for (i64 cc = 0; cc < ow; ++cc) {
                    const i64 ir = r / factor, ic = cc / factor;
                    const i64 sub = (r % factor) * factor + (cc % factor);
                    double* d = dst2 + (((b * h + ir) * w + ic) * factor * factor + sub) * c;
                    const double* gs = g + ((b * oh + r) * ow + cc) * c;
                    for (i64 i = 0; i < c; ++i) d[i] += gs[i];
                }
            }
        }
    });
}

Var box3_mean(const Var& x) {
    const auto& sx = x.shape();
    if (sx.size() != 4) throw std::invalid_argument("box3_mean: expected NHWC input");
    const i64 n = sx[0], h = sx[1], w = sx[2], c = sx[3];
    if (h < 3 || w < 3) throw std::invalid_argument("box3_mean: spatial extent must be >= 3x3");
    Tensor out = Tensor::zeros(sx);
    const double* src = x.value().data();
    double* dst = out.data();
    for (i64 b = 0; b < n; ++b) {
        for (i64 r = 0; r < h; ++r) {
            for (i64 cc = 0; cc < w; ++cc) {
                double* d = dst + ((b * h + r) * w + cc) * c;
                int count = 0;
                for (i64 dr = -1; dr <= 1; ++dr) {
                    for (i64 dc = -1; dc <= 1; ++dc) {
                        const i64 rr = r + dr, wc = cc + dc;
                        if (rr < 0 || rr >= h || wc < 0 || wc >= w) continue;
                        const double* s = src + ((b * h + rr) * w + wc) * c;
                        for (i64 i = 0; i < c; ++i) d[i] += s[i];
                        ++count;
                    }
                }
                const double inv = 1.0 / static_cast<double>(count);
                for (i64 i = 0; i < c; ++i) d[i] *= inv;
            }
        }
    }
    return unary(x, std::move(out), [n, h, w, c](Node& self, const NodePtr& xn) {
        if (!xn->requires_grad) return;
        Tensor& buf = grad_buf(*xn);
        const double* g = self.grad.data();
        double* dst2 = buf.data();
        for (i64 b = 0; b < n; ++b) {
            for (i64 r = 0; r < h; ++r) {
                for (i64 cc = 0; cc < w; ++cc) {
                    const i64 r0 = std::max<i64>(0, r - 1), r1 = std::min<i64>(h - 1, r + 1);
                    const i64 c0 = std::max<i64>(0, cc - 1), c1 = std::min<i64>(w - 1, cc + 1);
                    const double inv = 1.0 / static_cast<double>((r1 - r0 + 1) * (c1 - c0 + 1));
                    const double* gs = g + ((b * h + r) * w + cc) * c;
                    for (i64 rr = r0; rr <= r1; ++rr) {
                        for (i64 wc = c0; wc <= c1; ++wc) {
                            double* d = dst2 + ((b * h + rr) * w + wc) * c;
                            for (i64 i = 0; i < c; ++i) d[i] += gs[i] * inv;
                        }
                    }
                }
            }
        }
    });
}

ResamplePlan make_resample_plan(i64 in_h, i64 in_w, i64 out_h, i64 out_w, bool bicubic) {
    if (in_h < 1 || in_w < 1 || out_h < 1 || out_w < 1) throw std::invalid_argument("make_resample_plan: bad dims");
    ResamplePlan plan;
    plan.in_height = in_h;
    plan.in_width = in_w;
    plan.out_height = out_h;
    plan.out_width = out_w;
    plan.taps = bicubic ? 4 : 2;
    plan_axis(in_h, out_h, bicubic, plan.row_idx, plan.row_w);
    plan_axis(in_w, out_w, bicubic, plan.col_idx, plan.col_w);
    return plan;
}

Var resample2d(const Var& x, const ResamplePlan& plan) {
    const auto& sx = x.shape();
    if (sx.size() != 3 || sx[0] != plan.in_height || sx[1] != plan.in_width) {
        throw std::invalid_argument("resample2d: input must be (in_h, in_w, c)");
    }
    const i64 c = sx[2];
    const int taps = plan.taps;
    // horizontal pass, then vertical
    Tensor mid = Tensor::zeros({plan.in_height, plan.out_width, c});
    {
        const double* src = x.value().data();
        double* dst = mid.data();
        for (i64 r = 0; r < plan.in_height; ++r) {
            for (i64 o = 0; o < plan.out_width; ++o) {
                double* d = dst + (r * plan.out_width + o) * c;
                for (int t = 0; t < taps; ++t) {
                    const i64 ic = plan.col_idx[static_cast<std::size_t>(o) * taps + t];
                    const double wt = plan.col_w[static_cast<std::size_t>(o) * taps + t];
                    const double* s = src + (r * plan.in_width + ic) * c;
                    for (i64 k = 0; k < c; ++k) d[k] += wt * s[k];
                }
            }
        }
    }
    Tensor out = Tensor::zeros({plan.out_height, plan.out_width, c});
    {
        const double* src = mid.data();
        double* dst = out.data();
        for (i64 o = 0; o < plan.out_height; ++o) {
            for (i64 cc = 0; cc < plan.out_width; ++cc) {
                double* d = dst + (o * plan.out_width + cc) * c;
                for (int t = 0; t < taps; ++t) {
                    const i64 ir = plan.row_idx[static_cast<std::size_t>(o) * taps + t];
                    const double wt = plan.row_w[static_cast<std::size_t>(o) * taps + t];
                    const double* s = src + (ir * plan.out_width + cc) * c;
                    for (i64 k = 0; k < c; ++k) d[k] += wt * s[k];
                }
            }
        }
    }
    return unary(x, std::move(out), [plan, c](Node& self, const NodePtr& xn) {
        if (!xn->requires_grad) return;
        const int taps = plan.taps;
        // adjoint: vertical gather-transpose, then horizontal
        std::vector<double> gmid(static_cast<std::size_t>(plan.in_height * plan.out_width * c), 0.0);
        const double* g = self.grad.data();
        for (i64 o = 0; o < plan.out_height; ++o) {
            for (i64 cc = 0; cc < plan.out_width; ++cc) {
                const double* gs = g + (o * plan.out_width + cc) * c;
                for (int t = 0; t < taps; ++t) {
                    const i64 ir = plan.row_idx[static_cast<std::size_t>(o) * taps + t];
                    const double wt = plan.row_w[static_cast<std::size_t>(o) * taps + t];
                    double* d = gmid.data() + (ir * plan.out_width + cc) * c;
                    for (i64 k = 0; k < c; ++k) d[k] += wt * gs[k];
                }
            }
        }
        Tensor& buf = grad_buf(*xn);
        double* dst = buf.data();
        for (i64 r = 0; r < plan.in_height; ++r) {
            for (i64 o = 0; o < plan.out_width; ++o) {
                const double* gs = gmid.data() + (r * plan.out_width + o) * c;
                for (int t = 0; t < taps; ++t) {
                    const i64 ic = plan.col_idx[static_cast<std::size_t>(o) * taps + t];
                    const double wt = plan.col_w[static_cast<std::size_t>(o) * taps + t];
                    double* d = dst + (r * plan.in_width + ic) * c;
                    for (i64 k = 0; k < c; ++k) d[k] += wt * gs[k];
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Fourier ops

std::pair<Var, Var> dft2_spatial(const Var& x) {
    const auto& sx = x.shape();
    if (sx.size() != 4) throw std::invalid_argument("dft2_spatial: expected (n, h, w, c)");
    const i64 n = sx[0], h = sx[1], w = sx[2], c = sx[3];
    const i64 batch = h * w * c;
    Tensor re(sx), im(sx);
    {
        std::vector<double> vre, vim;
        for (i64 b = 0; b < n; ++b) {
            feinfn::detail::dft2<double>(x.value().data() + b * batch, nullptr, h, w, c, vre, vim, false);
            std::copy(vre.begin(), vre.end(), re.data() + b * batch);
            std::copy(vim.begin(), vim.end(), im.data() + b * batch);
        }
    }
    auto re_node = make_node(std::move(re), {x.node});
    auto im_node = make_node(std::move(im), {x.node});
    if (re_node->requires_grad || im_node->requires_grad) {
        // Adjoint of the unnormalized forward transform: the real part of the
        // unnormalized inverse transform applied to the (complex) gradient.
        auto push = [xn = x.node, n, h, w, c, batch](const Node& self, bool imag_branch) {
            if (!xn->requires_grad) return;
            Tensor& buf = grad_buf(*xn);
            const double scale = static_cast<double>(h * w);
            std::vector<double> zeros;
            if (imag_branch) zeros.assign(static_cast<std::size_t>(batch), 0.0);
            std::vector<double> out_re, out_im;
            for (i64 b = 0; b < n; ++b) {
                const double* g = self.grad.data() + b * batch;
                if (imag_branch) {
                    feinfn::detail::dft2<double>(zeros.data(), g, h, w, c, out_re, out_im, true);
                } else {
                    feinfn::detail::dft2<double>(g, nullptr, h, w, c, out_re, out_im, true);
                }
                double* d = buf.data() + b * batch;
                for (i64 i = 0; i < batch; ++i) d[i] += scale * out_re[i];
            }
        };
        re_node->backprop = [push](Node& self) { push(self, false); };
        im_node->backprop = [push](Node& self) { push(self, true); };
    }
    return {Var(re_node), Var(im_node)};
}

std::pair<Var, Var> amp_phase(const Var& re, const Var& im) {
    check_same_shape(re, im, "amp_phase");
    const i64 size = re.value().size();
    Tensor amp(re.shape()), phase(re.shape());
    const double* pr = re.value().data();
    const double* pi = im.value().data();
    for (i64 i = 0; i < size; ++i) {
        amp.data()[i] = std::hypot(pr[i], pi[i]);
        phase.data()[i] = std::atan2(pi[i], pr[i]);
    }
    auto amp_node = make_node(std::move(amp), {re.node, im.node});
    auto phase_node = make_node(std::move(phase), {re.node, im.node});
    if (amp_node->requires_grad) {
        amp_node->backprop = [rn = re.node, in = im.node](Node& self) {
            const double* g = self.grad.data();
            const double* a = self.value.data();
            const double* pr2 = rn->value.data();
            const double* pi2 = in->value.data();
            if (rn->requires_grad) {
                double* d = grad_buf(*rn).data();
                for (i64 i = 0; i < self.value.size(); ++i) {
                    if (a[i] > 0.0) d[i] += g[i] * pr2[i] / a[i];
                }
            }
            if (in->requires_grad) {
                double* d = grad_buf(*in).data();
                for (i64 i = 0; i < self.value.size(); ++i) {
                    if (a[i] > 0.0) d[i] += g[i] * pi2[i] / a[i];
                }
            }
        };
    }
    if (phase_node->requires_grad) {
        phase_node->backprop = [rn = re.node, in = im.node](Node& self) {
            const double* g = self.grad.data();
            const double* pr2 = rn->value.data();
            const double* pi2 = in->value.data();
            if (rn->requires_grad) {
                double* d = grad_buf(*rn).data();
                for (i64 i = 0; i < self.value.size(); ++i) {
                    const double r2 = pr2[i] * pr2[i] + pi2[i] * pi2[i];
                    if (r2 > 0.0) d[i] -= g[i] * pi2[i] / r2;
                }
            }
            if (in->requires_grad) {
                double* d = grad_buf(*in).data();
                for (i64 i = 0; i < self.value.size(); ++i) {
                    const double r2 = pr2[i] * pr2[i] + pi2[i] * pi2[i];
                    if (r2 > 0.0) d[i] += g[i] * pr2[i] / r2;
                }
            }
        };
    }
    return {Var(amp_node), Var(phase_node)};
}

double finite_difference(const std::function<double()>& f, Tensor& theta, i64 index, double step) {
    if (index < 0 || index >= theta.size()) throw std::invalid_argument("finite_difference: index out of range");
    double* p = theta.data() + index;
    const double saved = *p;
    *p = saved + step;
    const double up = f();
    *p = saved - step;
    const double down = f();
    *p = saved;
    return (up - down) / (2.0 * step);
}

}  // namespace feinfn::nn

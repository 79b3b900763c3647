#include "feinfn/optim.hpp"

#include <cmath>
#include <numbers>

namespace feinfn::nn {

double CosineSchedule::lr_at(i64 step) const {
    if (t_max <= 0 || step >= t_max) return eta_min;
    if (step < 0) step = 0;
    const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(t_max);
    return eta_min + 0.5 * (base_lr - eta_min) * (1.0 + std::cos(phase));
}

AdamW::AdamW(ParamStore& params, AdamWConfig config) : params_(params), config_(config) {
    for (const auto& name : params_.names()) {
        const Tensor& value = params_.get(name).value();
        m_.push_back(Tensor::zeros(value.shape()));
        v_.push_back(Tensor::zeros(value.shape()));
    }
}

void AdamW::step(double lr) {
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const auto& names = params_.names();
    for (std::size_t k = 0; k < names.size(); ++k) {
        Var p = params_.get(names[k]);
        if (!p.has_grad()) continue;
        const double* g = p.grad().data();
        double* m = m_[k].data();
        double* v = v_[k].data();
        double* w = p.value().data();
        const i64 n = p.value().size();
        for (i64 i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / bias1;
            const double vhat = v[i] / bias2;
            w[i] -= lr * (mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * w[i]);
        }
    }
}

}  // namespace feinfn::nn

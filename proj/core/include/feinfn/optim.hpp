#pragma once

#include <vector>

#include "feinfn/layers.hpp"

namespace feinfn::nn {

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

struct CosineSchedule {
    double base_lr = 1e-4;
    double eta_min = 1e-6;
    i64 t_max = 80000;

    /// Learning rate after `step` completed steps (step 0 = base_lr,
    /// step >= t_max = eta_min).
    double lr_at(i64 step) const;
};

/// Decoupled-weight-decay Adam over every parameter in a store. Parameters
/// without gradients this step are skipped entirely (moments untouched).
class AdamW {
public:
    AdamW(ParamStore& params, AdamWConfig config);

    /// One update using the given learning rate (scheduler-driven).
    void step(double lr);
    i64 steps_taken() const { return t_; }

private:
    ParamStore& params_;
    AdamWConfig config_;
    i64 t_ = 0;
    std::vector<Tensor> m_, v_;  // one pair per parameter, store order
};

}  // namespace feinfn::nn

#pragma once

#include <limits>
#include <vector>

#include "ibflow/tensor.hpp"

namespace ibflow {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-5;  // decoupled: applied directly to the weights
};

struct AdamState {
    std::vector<Tensor> m, v;  // first/second moments, one per parameter tensor
    long t = 0;
    double lr = 1e-3;

    void init(const std::vector<Tensor*>& params, double lr0);
};

/// One Adam update with decoupled weight decay. grads must parallel params.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& cfg);

/// Validation-loss-driven step-down schedule (mode min): after more than
/// `patience` consecutive epochs without improvement the rate is multiplied by
/// `factor`, never below min_lr; `cooldown` epochs after a reduction do not
/// count as bad.
struct PlateauScheduler {
    double factor = 0.5;
    int patience = 2;
    int cooldown = 0;
    double min_lr = 1e-6;

    double best = std::numeric_limits<double>::infinity();
    int num_bad = 0;
    int cooldown_left = 0;

    /// Feeds one validation loss; returns the (possibly reduced) rate.
    double step(double val_loss, double lr);
};

} // namespace ibflow

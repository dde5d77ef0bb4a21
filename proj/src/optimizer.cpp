#include "ibflow/optimizer.hpp"

#include <cmath>

#include "ibflow/errors.hpp"

namespace ibflow {

void AdamState::init(const std::vector<Tensor*>& params, double lr0) {
    m.clear();
    v.clear();
    for (const Tensor* p : params) {
        m.emplace_back(p->n, p->c, p->h, p->w);
        v.emplace_back(p->n, p->c, p->h, p->w);
    }
    t = 0;
    lr = lr0;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& cfg) {
    require(params.size() == grads.size() && params.size() == state.m.size(),
            "adam: parameter/gradient/state size mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& g = grads[k];
        require(p.same_shape(g), "adam: gradient shape mismatch");
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        for (size_t i = 0; i < p.size(); ++i) {
            m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
            v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            p.data[i] -= state.lr * mhat / (std::sqrt(vhat) + cfg.eps);
            p.data[i] -= state.lr * cfg.weight_decay * p.data[i];
        }
    }
}

double PlateauScheduler::step(double val_loss, double lr) {
    if (val_loss < best) {
        best = val_loss;
        num_bad = 0;
    } else if (cooldown_left > 0) {
        --cooldown_left;
        num_bad = 0;
    } else {
        ++num_bad;
    }
    if (num_bad > patience) {
        lr = std::max(lr * factor, min_lr);
        cooldown_left = cooldown;
        num_bad = 0;
    }
    return lr;
}

} // namespace ibflow

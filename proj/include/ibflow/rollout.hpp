#pragma once

#include "ibflow/dataset.hpp"
#include "ibflow/hybrid.hpp"

namespace ibflow {

/// Per-step relative errors (filled only when truth is available).
struct RolloutStep {
    long k = 0;
    Array2D u, v;  // prediction, quantized through 32-bit storage precision
    Vec2 force;
    double eps = -1.0;
    double eps_u = -1.0, eps_v = -1.0, eps_f = -1.0;
};

struct RolloutRecord {
    std::vector<RolloutStep> steps;
    double eps_mean = -1.0;  // arithmetic mean of eps over recorded steps
    long diverged_at = -1;   // step index where the rollout was truncated
};

/// epsilon^t = ( R2(u) + R2(v) + R2(F) ) / 3. Both sides are quantized to the
/// storage precision before comparison.
double stepwise_error(const Array2D& u_pred, const Array2D& v_pred, Vec2 f_pred,
                      const Array2D& u_truth, const Array2D& v_truth, Vec2 f_truth,
                      double eps = 1e-8);

/// Autoregressive rollout: each prediction feeds the next step; omega_k is
/// advanced along the given schedule; truth (when given, with snaps[t].k == t)
/// is used only for metrics, never as input. Divergence (non-finite state or
/// |u| > vel_limit) truncates the record.
RolloutRecord rollout(StepModel& model, const StaggeredField& initial, long steps,
                      const RotationSchedule& schedule, const SnapshotDataset* truth,
                      double vel_limit);

} // namespace ibflow

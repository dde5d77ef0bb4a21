#pragma once

#include <vector>

#include "ibflow/field_ops.hpp"

namespace ibflow {

struct LossConfig {
    double p = 2.0;       // norm order
    double eps = 1e-8;    // stability constant in the denominator
    double lambda_u = 1.0;
    double lambda_f = 1.0;
};

struct PhysicsLossConfig {
    double alpha = 1.0;  // physics term weight
    double beta = 1.0;   // data term weight
};

/// Relative Lp error ||a - b||_p / (||b||_p + eps) over flattened entries.
double relative_lp(const std::vector<double>& pred, const std::vector<double>& truth, double p,
                   double eps);

/// Taped relative L2 of a prediction against a constant target.
Var taped_relative_l2(Tape& t, Var pred, const Tensor& target, double eps);

struct StepLossVars {
    Var total, l_u, l_v, l_f;
};

/// Per-sample one-step supervision: relative L2 of u, v (each as a whole
/// field) and of the 2-component force, combined as
/// lambda_u (L_u + L_v) + lambda_f L_F.
StepLossVars one_step_loss(Tape& t, FieldVars pred, Var force_pred, const Array2D& u_truth,
                           const Array2D& v_truth, Vec2 force_truth, const LossConfig& cfg);

struct PhysicsLossVars {
    Var l_m, l_div, l_ib, l_phy;
};

/// Physics-consistency penalty for the loss-constrained baseline: discrete
/// momentum residual with the solver's stencils (time term by forward
/// difference across dt_learn, spatial terms at the input state), squared
/// divergence, and marker no-slip mismatch.
PhysicsLossVars physics_loss(Tape& t, FieldVars pred, const StaggeredField& prev,
                             const Grid& g, const FluidParams& fp, double dt_learn,
                             const LagrangianBoundary& markers,
                             const std::vector<Vec2>& targets, const LossConfig& cfg);

} // namespace ibflow

#include "ibflow/loss.hpp"

#include <cmath>

#include "ibflow/stencils.hpp"

namespace ibflow {

double relative_lp(const std::vector<double>& pred, const std::vector<double>& truth, double p,
                   double eps) {
    require(pred.size() == truth.size(), "relative_lp: size mismatch");
    require(p >= 1.0 && eps > 0.0, "relative_lp: need p >= 1 and eps > 0");
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        num += std::pow(std::abs(pred[i] - truth[i]), p);
        den += std::pow(std::abs(truth[i]), p);
    }
    return std::pow(num, 1.0 / p) / (std::pow(den, 1.0 / p) + eps);
}

Var taped_relative_l2(Tape& t, Var pred, const Tensor& target, double eps) {
    double den = 0.0;
    for (double v : target.data) den += v * v;
    den = std::sqrt(den) + eps;
    Var tgt = t.leaf(target);
    Var d = sub(t, pred, tgt);
    Var norm = sqrt_all(t, sum_all(t, hadamard(t, d, d)));
    return scale(t, norm, 1.0 / den);
}

StepLossVars one_step_loss(Tape& t, FieldVars pred, Var force_pred, const Array2D& u_truth,
                           const Array2D& v_truth, Vec2 force_truth, const LossConfig& cfg) {
    StepLossVars out;
    out.l_u = taped_relative_l2(t, pred.u, Tensor::from_array(u_truth), cfg.eps);
    out.l_v = taped_relative_l2(t, pred.v, Tensor::from_array(v_truth), cfg.eps);
    Tensor ft(1, 2, 1, 1);
    ft.data[0] = force_truth.x;
    ft.data[1] = force_truth.y;
    out.l_f = taped_relative_l2(t, force_pred, ft, cfg.eps);
    out.total = add(t, scale(t, add(t, out.l_u, out.l_v), cfg.lambda_u),
                    scale(t, out.l_f, cfg.lambda_f));
    return out;
}

PhysicsLossVars physics_loss(Tape& t, FieldVars pred, const StaggeredField& prev,
                             const Grid& g, const FluidParams& fp, double dt_learn,
                             const LagrangianBoundary& markers,
                             const std::vector<Vec2>& targets, const LossConfig& cfg) {
    const int nx = g.nx(), ny = g.ny();

    // Spatial terms of the momentum residual are evaluated at the input state
    // with the solver's own stencils; they enter as constants.
    const FaceVec conv = convect(prev, AdvectionScheme::Upwind1);
    const FaceVec diff = diffuse(prev, fp.nu);

    // Interior-face masks (boundary faces belong to the BCs).
    Tensor mask_u(1, 1, ny, nx + 1), mask_v(1, 1, ny + 1, nx);
    Tensor rhs_u(1, 1, ny, nx + 1), rhs_v(1, 1, ny + 1, nx);
    long n_faces = 0;
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            mask_u.at(0, 0, j, i) = 1.0;
            rhs_u.at(0, 0, j, i) = prev.u(j, i) / dt_learn + conv.u(j, i) + diff.u(j, i);
            ++n_faces;
        }
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            mask_v.at(0, 0, j, i) = 1.0;
            rhs_v.at(0, 0, j, i) = prev.v(j, i) / dt_learn + conv.v(j, i) + diff.v(j, i);
            ++n_faces;
        }

    Var ru = hadamard(t, sub(t, scale(t, pred.u, 1.0 / dt_learn), t.leaf(rhs_u)),
                      t.leaf(mask_u));
    Var rv = hadamard(t, sub(t, scale(t, pred.v, 1.0 / dt_learn), t.leaf(rhs_v)),
                      t.leaf(mask_v));
    Var sq = add(t, sum_all(t, hadamard(t, ru, ru)), sum_all(t, hadamard(t, rv, rv)));
    PhysicsLossVars out;
    out.l_m = scale(t, sq, 1.0 / static_cast<double>(n_faces));

    Var div = op_divergence(t, pred, g);
    out.l_div = scale(t, sum_all(t, hadamard(t, div, div)),
                      1.0 / static_cast<double>(nx * ny));

    Var interp = op_interp_markers(t, pred, g, markers);
    Tensor tgt(1, 2, markers.n_markers(), 1);
    for (int m = 0; m < markers.n_markers(); ++m) {
        tgt.at(0, 0, m, 0) = targets[m].x;
        tgt.at(0, 1, m, 0) = targets[m].y;
    }
    out.l_ib = taped_relative_l2(t, interp, tgt, cfg.eps);

    out.l_phy = add(t, add(t, out.l_m, out.l_div), out.l_ib);
    return out;
}

} // namespace ibflow

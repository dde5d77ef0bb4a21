#include "ibflow/hybrid.hpp"

#include <cmath>

namespace ibflow {

std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Hybrid: return "hybrid";
        case ModelKind::DataDriven: return "datadriven";
        case ModelKind::PhysicsLoss: return "physloss";
        case ModelKind::CoarseNumerical: return "coarse";
    }
    return "unknown";
}

HybridModel::HybridModel(const Grid& coarse, FluidParams fp, DomainBC bc, int n_markers,
                         double cyl_x, double cyl_y, HybridConfig cfg, uint64_t seed)
    : coarse_(&coarse),
      fine_(refined_grid(coarse, cfg.upsample_factor)),
      fluid_(fp),
      bc_(bc),
      markers_(cylinder_markers(fp.diameter, n_markers, cyl_x, cyl_y)),
      cfg_(cfg) {
    require(cfg_.n_substeps >= 1 && cfg_.ib_iters >= 1, "substep and IB iteration counts >= 1");
    const double dt_sub = cfg_.dt_learn / cfg_.n_substeps;
    const double cfl = dt_sub * fluid_.u_inf / coarse.min_spacing();
    if (cfl >= 1.0)
        throw ConfigError("sub-iteration step violates the coarse-grid CFL limit (CFL=" +
                          std::to_string(cfl) + ")");
    bind_measure(markers_, marker_region_spacing(fine_, markers_));
    down_ = build_downsample_map(fine_, *coarse_);

    std::mt19937_64 rng(seed);
    block1_ = ConvResNet::make("velocity_correction", 4, 2, cfg_.hidden, rng);
    block2_ = ConvResNet::make("pressure_correction", 3, 2, cfg_.hidden, rng);
}

std::vector<Tensor*> HybridModel::parameters() {
    std::vector<Tensor*> out = block1_.params();
    for (Tensor* p : block2_.params()) out.push_back(p);
    return out;
}

FieldVars HybridModel::pde_operator(Tape& t, FieldVars in, bool* halved_out) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        const int n = cfg_.n_substeps << attempt;
        const double dt_sub = cfg_.dt_learn / n;
        FieldVars cur = in;
        bool ok = true;
        auto max_abs = [](const Tensor& x) {
            double m = 0.0;
            for (double v : x.data) m = std::max(m, std::abs(v));
            return m;
        };
        for (int s = 0; s < n; ++s) {
            const double vmax = std::max(max_abs(t.val(cur.u)), max_abs(t.val(cur.v)));
            if (dt_sub * vmax / coarse_->min_spacing() >= 1.0) {
                ok = false;
                break;
            }
            cur = op_substep(t, cur, *coarse_, fluid_.nu, dt_sub, AdvectionScheme::Upwind1);
            cur = op_enforce_bc(t, cur, *coarse_, bc_);
        }
        if (ok) {
            if (halved_out) *halved_out = attempt > 0;
            return cur;
        }
        if (attempt == 1) break;
    }
    throw DivergenceError("CFL violation persists after one sub-step halving", -1);
}

FieldVars HybridModel::correct_intermediate(Tape& t, FieldVars u_tilde_star, FieldVars u_t,
                                            const ConvResNet::TapeParams& p1) {
    Var stack = concat_channels(
        t, {op_face_to_center(t, u_tilde_star, *coarse_), op_face_to_center(t, u_t, *coarse_)});
    Var corr = block1_.forward(t, stack, p1);
    FieldVars delta = op_center_to_face(t, corr, *coarse_);
    FieldVars out{add(t, u_tilde_star.u, delta.u), add(t, u_tilde_star.v, delta.v)};
    return op_enforce_bc(t, out, *coarse_, bc_);
}

std::pair<FieldVars, Var> HybridModel::ib_stage(Tape& t, FieldVars u_tilde, double omega_k) {
    FieldVars fine = op_upsample(t, u_tilde, *coarse_, fine_, cfg_.upsample_factor);
    const std::vector<Vec2> targets = marker_targets(markers_, omega_k);
    Tensor tgt(1, 2, markers_.n_markers(), 1);
    for (int m = 0; m < markers_.n_markers(); ++m) {
        tgt.at(0, 0, m, 0) = targets[m].x;
        tgt.at(0, 1, m, 0) = targets[m].y;
    }
    Var target_leaf = t.leaf(std::move(tgt));
    Var force;
    for (int m = 0; m < cfg_.ib_iters; ++m) {
        Var interp = op_interp_markers(t, fine, fine_, markers_);
        Var fk = scale(t, sub(t, target_leaf, interp), 1.0 / cfg_.dt_learn);
        FieldVars body = op_spread(t, fk, fine_, markers_);
        fine = {add(t, fine.u, scale(t, body.u, cfg_.dt_learn)),
                add(t, fine.v, scale(t, body.v, cfg_.dt_learn))};
        Var contrib = op_marker_total(t, fk, markers_, -1.0);
        force = force.valid() ? add(t, force, contrib) : contrib;
    }
    FieldVars coarse = op_downsample(t, fine, down_);
    coarse = op_enforce_bc(t, coarse, *coarse_, bc_);
    return {coarse, force};
}

FieldVars HybridModel::learned_projection(Tape& t, FieldVars u_star, Var div_star,
                                          const ConvResNet::TapeParams& p2) {
    Var stack = concat_channels(t, {op_face_to_center(t, u_star, *coarse_), div_star});
    Var corr = block2_.forward(t, stack, p2);
    FieldVars delta = op_center_to_face(t, corr, *coarse_);
    FieldVars out{add(t, u_star.u, delta.u), add(t, u_star.v, delta.v)};
    return op_enforce_bc(t, out, *coarse_, bc_);
}

HybridModel::TapedStep HybridModel::taped_step(Tape& t, FieldVars in, double omega_k,
                                               const ConvResNet::TapeParams& p1,
                                               const ConvResNet::TapeParams& p2) {
    TapedStep out;
    out.u_tilde_star = pde_operator(t, in, &out.cfl_halved);
    out.u_tilde = correct_intermediate(t, out.u_tilde_star, in, p1);
    auto [u_star, force] = ib_stage(t, out.u_tilde, omega_k);
    out.u_star = u_star;
    out.force = force;
    out.div_star = op_divergence(t, u_star, *coarse_);
    out.u_next = learned_projection(t, u_star, out.div_star, p2);
    return out;
}

StepOut HybridModel::step(const StaggeredField& in, double k, double omega_k) {
    (void)k;
    Tape t;
    FieldVars fin = field_leaves(t, in, false);
    const ConvResNet::TapeParams p1 = block1_.register_params(t, false);
    const ConvResNet::TapeParams p2 = block2_.register_params(t, false);
    TapedStep ts = taped_step(t, fin, omega_k, p1, p2);
    StepOut out;
    out.next = field_values(t, ts.u_next, *coarse_);
    out.next.p = in.p;
    out.force = {t.val(ts.force).at(0, 0, 0, 0), t.val(ts.force).at(0, 1, 0, 0)};
    if (!out.next.all_finite())
        throw DivergenceError("hybrid step produced non-finite fields", static_cast<long>(k));
    return out;
}

ModelStep HybridModel::step_detailed(const StaggeredField& in, double omega_k) {
    Tape t;
    FieldVars fin = field_leaves(t, in, false);
    const ConvResNet::TapeParams p1 = block1_.register_params(t, false);
    const ConvResNet::TapeParams p2 = block2_.register_params(t, false);
    TapedStep ts = taped_step(t, fin, omega_k, p1, p2);
    ModelStep out;
    out.u_tilde_star = field_values(t, ts.u_tilde_star, *coarse_);
    out.u_tilde = field_values(t, ts.u_tilde, *coarse_);
    out.u_star = field_values(t, ts.u_star, *coarse_);
    out.div_star = t.val(ts.div_star).to_array();
    out.u_next = field_values(t, ts.u_next, *coarse_);
    out.force = {t.val(ts.force).at(0, 0, 0, 0), t.val(ts.force).at(0, 1, 0, 0)};
    out.omega_k = omega_k;
    out.cfl_halved = ts.cfl_halved;
    return out;
}

} // namespace ibflow

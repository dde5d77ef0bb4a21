#include "ibflow/baselines.hpp"

#include <cmath>

namespace ibflow {

DataDrivenModel::DataDrivenModel(const Grid& coarse, FluidParams fp, DomainBC bc, int n_markers,
                                 double cyl_x, double cyl_y, HybridConfig cfg, uint64_t seed,
                                 ModelKind kind)
    : coarse_(&coarse),
      fluid_(fp),
      bc_(bc),
      markers_(cylinder_markers(fp.diameter, n_markers, cyl_x, cyl_y)),
      cfg_(cfg),
      kind_(kind) {
    require(kind_ == ModelKind::DataDriven || kind_ == ModelKind::PhysicsLoss,
            "DataDrivenModel models the data-driven or physics-loss baselines");
    bind_measure(markers_, coarse.min_spacing());
    std::mt19937_64 rng(seed);
    a_ = ConvResNet::make("fluid_update", 4, 2, cfg_.hidden, rng);
    b_ = ConvResNet::make("boundary_update", 3, 4, {16, 16}, rng);
    c_ = ConvResNet::make("projection_update", 3, 2, cfg_.hidden, rng);
}

DataDrivenModel::TapeParams DataDrivenModel::register_params(Tape& t, bool requires_grad) const {
    return {a_.register_params(t, requires_grad), b_.register_params(t, requires_grad),
            c_.register_params(t, requires_grad)};
}

DataDrivenModel::TapedStep DataDrivenModel::taped_step(Tape& t, FieldVars in, double omega_k,
                                                       const TapeParams& pv) {
    TapedStep out;
    const Grid& g = *coarse_;

    Var state_c = op_face_to_center(t, in, g);
    Var corr_a = a_.forward(t, concat_channels(t, {state_c, state_c}), pv.a);
    FieldVars d_a = op_center_to_face(t, corr_a, g);
    out.u_tilde = {add(t, in.u, d_a.u), add(t, in.v, d_a.v)};

    Var tilde_c = op_face_to_center(t, out.u_tilde, g);
    Var omega_chan = t.leaf(Tensor(1, 1, g.ny(), g.nx(), omega_k));
    Var b_out = b_.forward(t, concat_channels(t, {tilde_c, omega_chan}), pv.b);
    FieldVars d_b = op_center_to_face(t, slice_channels(t, b_out, 0, 2), g);
    out.u_star = {add(t, out.u_tilde.u, d_b.u), add(t, out.u_tilde.v, d_b.v)};
    // Spatial-mean readout keeps the head gain independent of the grid size.
    out.force = scale(t, spatial_sum(t, slice_channels(t, b_out, 2, 2)),
                      1.0 / static_cast<double>(g.nx() * g.ny()));

    Var star_c = op_face_to_center(t, out.u_star, g);
    Var div_star = op_divergence(t, out.u_star, g);
    Var corr_c = c_.forward(t, concat_channels(t, {star_c, div_star}), pv.c);
    FieldVars d_c = op_center_to_face(t, corr_c, g);
    out.u_next = {add(t, out.u_star.u, d_c.u), add(t, out.u_star.v, d_c.v)};
    return out;
}

StepOut DataDrivenModel::step(const StaggeredField& in, double k, double omega_k) {
    Tape t;
    FieldVars fin = field_leaves(t, in, false);
    const TapeParams pv = register_params(t, false);
    TapedStep ts = taped_step(t, fin, omega_k, pv);
    StepOut out;
    out.next = field_values(t, ts.u_next, *coarse_);
    out.next.p = in.p;
    out.force = {t.val(ts.force).at(0, 0, 0, 0), t.val(ts.force).at(0, 1, 0, 0)};
    if (!out.next.all_finite())
        throw DivergenceError("baseline step produced non-finite fields", static_cast<long>(k));
    return out;
}

std::vector<Tensor*> DataDrivenModel::parameters() {
    std::vector<Tensor*> out = a_.params();
    for (Tensor* p : b_.params()) out.push_back(p);
    for (Tensor* p : c_.params()) out.push_back(p);
    return out;
}

namespace {

SolverConfig substep_config(const HybridConfig& cfg) {
    SolverConfig sc;
    sc.dt = cfg.dt_learn / cfg.n_substeps;
    sc.dt_learn = cfg.dt_learn;
    sc.ib_iters = cfg.ib_iters;
    sc.scheme = AdvectionScheme::Upwind1;
    sc.t_end = cfg.dt_learn;
    sc.output_every = cfg.n_substeps;
    return sc;
}

} // namespace

CoarseNumericalModel::CoarseNumericalModel(const Grid& coarse, FluidParams fp, DomainBC bc,
                                           int n_markers, double cyl_x, double cyl_y,
                                           CaseDescriptor cs, HybridConfig cfg)
    : n_substeps_(cfg.n_substeps),
      solver_(coarse, fp, bc, cylinder_markers(fp.diameter, n_markers, cyl_x, cyl_y), cs,
              substep_config(cfg)) {}

StepOut CoarseNumericalModel::step(const StaggeredField& in, double k, double omega_k) {
    (void)omega_k;  // phase comes from the solver's own schedule at step k
    StaggeredField f = in;
    f.p = solver_.state().p;  // keep the internal pressure as a warm start
    solver_.set_state(f);
    solver_.set_step_index(static_cast<long>(std::llround(k * n_substeps_)));
    StepDiagnostics d;
    for (int s = 0; s < n_substeps_; ++s) d = solver_.step();
    StepOut out;
    out.next = solver_.state();
    out.force = d.force;
    return out;
}

} // namespace ibflow

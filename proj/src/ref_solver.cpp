#include "ibflow/ref_solver.hpp"

#include <cmath>

namespace ibflow {

namespace {
constexpr PoissonBCSet kPressureBC{};  // Neumann walls/inlet, Dirichlet outlet
}

RefSolver::RefSolver(const Grid& grid, FluidParams fp, DomainBC bc, LagrangianBoundary markers,
                     CaseDescriptor cs, SolverConfig cfg)
    : grid_(&grid),
      fluid_(fp),
      bc_(bc),
      markers_(std::move(markers)),
      case_(cs),
      cfg_(cfg),
      poisson_(grid, kPressureBC),
      state_(grid) {
    if (cfg_.dt <= 0.0 || cfg_.poisson_tol <= 0.0)
        throw ConfigError("solver needs positive dt and Poisson tolerance");
    if (case_.kind == CaseKind::Rotating && case_.f_r <= 0.0)
        throw ConfigError("rotating case requires a positive rotation frequency");
    const double cfl = cfg_.dt * fluid_.u_inf / grid.min_spacing();
    if (cfl >= 1.0)
        throw ConfigError("dt violates the CFL limit on this grid (CFL=" + std::to_string(cfl) +
                          ")");
    if (!markers_.x.empty()) bind_measure(markers_, marker_region_spacing(grid, markers_));
    state_.fill(fluid_.u_inf, 0.0, 0.0);
    apply_boundary(state_, bc_);
}

void RefSolver::set_state(const StaggeredField& f) {
    require(f.grid == grid_, "state grid mismatch");
    state_ = f;
    apply_boundary(state_, bc_);
}

void RefSolver::init_uniform(double perturb_amp, double perturb_x, double perturb_y,
                             double perturb_sigma) {
    state_.fill(fluid_.u_inf, 0.0, 0.0);
    if (perturb_amp != 0.0) {
        const Grid& g = *grid_;
        for (int j = 1; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const double dx_ = g.xc(i) - perturb_x;
                const double dy_ = g.yf(j) - perturb_y;
                state_.v(j, i) += perturb_amp *
                                  std::exp(-(dx_ * dx_ + dy_ * dy_) /
                                           (perturb_sigma * perturb_sigma));
            }
    }
    apply_boundary(state_, bc_);
    steps_ = 0;
}

StaggeredField RefSolver::predictor(const StaggeredField& f) const {
    StaggeredField out = f;
    const FaceVec conv = convect(f, cfg_.scheme);
    const FaceVec diff = diffuse(f, fluid_.nu);
    const Grid& g = *grid_;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 1; i < g.nx(); ++i)
            out.u(j, i) = f.u(j, i) + cfg_.dt * (conv.u(j, i) + diff.u(j, i));
    for (int j = 1; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            out.v(j, i) = f.v(j, i) + cfg_.dt * (conv.v(j, i) + diff.v(j, i));
    apply_boundary(out, bc_);
    return out;
}

IBResult RefSolver::boundary_stage(StaggeredField& f, double k_learn) const {
    if (markers_.x.empty()) return {};
    const std::vector<Vec2> targets = marker_targets(markers_, case_.schedule(), k_learn);
    return ib_correct(f, markers_, targets, {cfg_.ib_iters}, cfg_.dt, steps_);
}

Array2D RefSolver::pressure_solve(const StaggeredField& f) const {
    Array2D div = divergence(f);
    const double scale = fluid_.rho / cfg_.dt;
    for (int j = 0; j < div.rows(); ++j)
        for (int i = 0; i < div.cols(); ++i) div(j, i) *= scale;
    Array2D p = f.p;  // warm start from the previous pressure
    poisson_.solve(div, p, cfg_.poisson_tol, cfg_.poisson_max_cycles);
    return p;
}

void RefSolver::project(StaggeredField& f, const Array2D& p_new) const {
    const Grid& g = *grid_;
    const double c = cfg_.dt / fluid_.rho;
    const int nx = g.nx(), ny = g.ny();
    for (int j = 0; j < ny; ++j) {
        for (int i = 1; i < nx; ++i)
            f.u(j, i) -= c * (p_new(j, i) - p_new(j, i - 1)) / (g.xc(i) - g.xc(i - 1));
        // Outlet face: Dirichlet p = 0 on the boundary.
        f.u(j, nx) -= c * (0.0 - p_new(j, nx - 1)) / (0.5 * g.dx(nx - 1));
    }
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            f.v(j, i) -= c * (p_new(j, i) - p_new(j - 1, i)) / (g.yc(j) - g.yc(j - 1));
    f.p = p_new;
}

StepDiagnostics RefSolver::step() {
    apply_boundary(state_, bc_);
    StaggeredField s = predictor(state_);
    const double k_learn = time() / cfg_.dt_learn;
    const IBResult ib = boundary_stage(s, k_learn);
    const Array2D p_new = pressure_solve(s);
    project(s, p_new);

    if (!s.all_finite())
        throw DivergenceError("non-finite state after projection", steps_);

    StepDiagnostics d;
    d.force = ib.force;
    d.ib_residuals = ib.residuals;
    d.omega = case_.schedule().omega_at(k_learn);
    d.max_div = divergence(s).max_abs();
    state_ = std::move(s);
    ++steps_;
    return d;
}

RunOutputs run_case(RefSolver& solver, const DownsampleMap* down, const SnapshotFn& emit) {
    const SolverConfig& cfg = solver.config();
    const long n_steps = static_cast<long>(std::llround(cfg.t_end / cfg.dt));
    RunOutputs out;
    out.forces.reserve(n_steps);
    if (n_steps < cfg.output_every) out.stride_warning = true;

    for (long n = 0; n < n_steps; ++n) {
        const StepDiagnostics d = solver.step();
        out.forces.push_back({solver.time(), d.force.x, d.force.y, d.omega});
        if ((n + 1) % cfg.output_every == 0) {
            const long k = (n + 1) / cfg.output_every;
            const double omega_k =
                solver.case_descriptor().schedule().omega_at(static_cast<double>(k));
            if (emit) {
                if (down) {
                    const StaggeredField coarse = downsample(solver.state(), *down);
                    emit(k, omega_k, coarse, d.force);
                } else {
                    emit(k, omega_k, solver.state(), d.force);
                }
            }
            ++out.snapshots;
        }
    }
    return out;
}

} // namespace ibflow

#include "ibflow/case_setup.hpp"

#include <cmath>

namespace ibflow {

CaseSetup build_setup(const Config& cfg) {
    CaseSetup s;
    s.fluid.rho = cfg.get_double("fluid.rho", 1.0);
    s.fluid.nu = cfg.get_double("fluid.nu", 0.01);
    s.fluid.u_inf = cfg.get_double("fluid.u_inf", 1.0);
    s.fluid.diameter = cfg.get_double("cylinder.diameter", 1.0);
    s.bc.u_inlet = s.fluid.u_inf;

    s.cyl_x = cfg.get_double("cylinder.x");
    s.cyl_y = cfg.get_double("cylinder.y");
    s.n_markers = cfg.get_int("cylinder.markers", 196);

    const double D = s.fluid.diameter;
    const double lx = cfg.get_double("domain.lx");
    const double ly = cfg.get_double("domain.ly");

    s.window.x0 = cfg.get_double("window.x0");
    s.window.y0 = cfg.get_double("window.y0");
    s.window.width = cfg.get_double("window.width");
    s.window.height = cfg.get_double("window.height");

    const double box_half = cfg.get_double("fine.box_half", 2.0 * D);
    const double h_box = cfg.get_double("fine.h_box", D / 64.0);
    const double h_window = cfg.get_double("fine.h_window", 0.0);  // 0: no window band
    const double h_cap = cfg.get_double("fine.h_cap", D / 4.0);
    const double stretch = cfg.get_double("fine.stretch", 1.05);

    AxisSpec ax{0.0, lx, {}, stretch, h_cap};
    ax.bands.push_back({s.cyl_x - box_half, s.cyl_x + box_half, h_box});
    if (h_window > 0.0)
        ax.bands.push_back({s.window.x0, s.window.x0 + s.window.width, h_window});
    AxisSpec ay{0.0, ly, {}, stretch, h_cap};
    ay.bands.push_back({s.cyl_y - box_half, s.cyl_y + box_half, h_box});
    if (h_window > 0.0)
        ay.bands.push_back({s.window.y0, s.window.y0 + s.window.height, h_window});
    s.fine_grid = Grid(build_axis_spacings(ax), build_axis_spacings(ay), 0.0, 0.0,
                       DomainTag::Full);

    const int cnx = cfg.get_int("coarse.nx", 80);
    const int cny = cfg.get_int("coarse.ny", 40);
    s.coarse_grid = Grid::uniform(cnx, cny, s.window.x0, s.window.y0, s.window.width / cnx,
                                  s.window.height / cny, DomainTag::Truncated);

    const std::string kind = cfg.get_str("case.kind", "stationary");
    if (kind == "stationary") {
        s.cs.kind = CaseKind::Stationary;
    } else if (kind == "rotating") {
        s.cs.kind = CaseKind::Rotating;
    } else {
        throw ConfigError("case.kind must be stationary or rotating");
    }
    s.cs.omega_a = cfg.get_double("case.omega_a", 0.0);
    s.cs.f_r = cfg.get_double("case.f_r", 0.2);
    s.cs.re = cfg.get_double("case.re", 100.0);
    if (std::abs(s.fluid.reynolds() - s.cs.re) > 1e-9 * s.cs.re)
        throw ConfigError("fluid parameters give Re = " + std::to_string(s.fluid.reynolds()) +
                          " but case.re = " + std::to_string(s.cs.re));

    s.solver_cfg.dt = cfg.get_double("solver.dt", 0.005);
    s.solver_cfg.t_end = cfg.get_double("solver.t_end", 200.0);
    s.solver_cfg.dt_learn = cfg.get_double("model.dt_learn", 0.5);
    s.solver_cfg.poisson_tol = cfg.get_double("solver.poisson_tol", 1e-6);
    s.solver_cfg.poisson_max_cycles = cfg.get_int("solver.poisson_max_cycles", 400);
    s.solver_cfg.ib_iters = cfg.get_int("solver.ib_iters", 5);
    s.solver_cfg.output_every =
        cfg.get_int("solver.output_every",
                    static_cast<int>(std::llround(s.solver_cfg.dt_learn / s.solver_cfg.dt)));
    const std::string scheme = cfg.get_str("solver.scheme", "upwind");
    if (scheme == "upwind") {
        s.solver_cfg.scheme = AdvectionScheme::Upwind1;
    } else if (scheme == "central") {
        s.solver_cfg.scheme = AdvectionScheme::Central2;
    } else {
        throw ConfigError("solver.scheme must be upwind or central");
    }

    s.perturb_amp = cfg.get_double("solver.perturb_amp", 0.0);
    s.perturb_x = cfg.get_double("solver.perturb_x", s.cyl_x + D);
    s.perturb_y = cfg.get_double("solver.perturb_y", s.cyl_y);
    s.perturb_sigma = cfg.get_double("solver.perturb_sigma", 0.5 * D);

    s.model_cfg.n_substeps = cfg.get_int("model.n_substeps", 20);
    s.model_cfg.ib_iters = cfg.get_int("model.ib_iters", 5);
    s.model_cfg.dt_learn = s.solver_cfg.dt_learn;
    s.model_cfg.upsample_factor = cfg.get_int("model.factor", 8);
    s.model_cfg.hidden = cfg.get_int_list("model.hidden", {32, 64, 64, 32, 32});
    return s;
}

std::unique_ptr<RefSolver> make_solver(const CaseSetup& s) {
    return std::make_unique<RefSolver>(
        s.fine_grid, s.fluid, s.bc,
        cylinder_markers(s.fluid.diameter, s.n_markers, s.cyl_x, s.cyl_y), s.cs, s.solver_cfg);
}

std::unique_ptr<HybridModel> make_hybrid(const CaseSetup& s, uint64_t seed) {
    return std::make_unique<HybridModel>(s.coarse_grid, s.fluid, s.bc, s.n_markers, s.cyl_x,
                                         s.cyl_y, s.model_cfg, seed);
}

std::unique_ptr<DataDrivenModel> make_datadriven(const CaseSetup& s, uint64_t seed,
                                                 ModelKind kind) {
    return std::make_unique<DataDrivenModel>(s.coarse_grid, s.fluid, s.bc, s.n_markers, s.cyl_x,
                                             s.cyl_y, s.model_cfg, seed, kind);
}

std::unique_ptr<CoarseNumericalModel> make_coarse_numerical(const CaseSetup& s) {
    return std::make_unique<CoarseNumericalModel>(s.coarse_grid, s.fluid, s.bc, s.n_markers,
                                                  s.cyl_x, s.cyl_y, s.cs, s.model_cfg);
}

DatasetHeader make_dataset_header(const CaseSetup& s) {
    DatasetHeader h;
    h.nx = s.coarse_grid.nx();
    h.ny = s.coarse_grid.ny();
    h.dt_learn = s.solver_cfg.dt_learn;
    h.dt = s.solver_cfg.dt;
    h.rho = s.fluid.rho;
    h.nu = s.fluid.nu;
    h.u_inf = s.fluid.u_inf;
    h.diameter = s.fluid.diameter;
    h.case_kind = static_cast<uint32_t>(s.cs.kind);
    h.omega_a = s.cs.omega_a;
    h.f_r = s.cs.f_r;
    h.re = s.cs.re;
    h.win_x0 = s.window.x0;
    h.win_y0 = s.window.y0;
    h.win_w = s.window.width;
    h.win_h = s.window.height;
    h.cyl_x = s.cyl_x;
    h.cyl_y = s.cyl_y;
    h.n_markers = s.n_markers;
    return h;
}

} // namespace ibflow

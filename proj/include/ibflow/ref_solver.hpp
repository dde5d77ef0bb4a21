#pragma once

#include <functional>
#include <vector>

#include "ibflow/field.hpp"
#include "ibflow/ib.hpp"
#include "ibflow/poisson.hpp"
#include "ibflow/resample.hpp"
#include "ibflow/stencils.hpp"

namespace ibflow {

enum class CaseKind { Stationary, Rotating };

struct CaseDescriptor {
    CaseKind kind = CaseKind::Stationary;
    double omega_a = 0.0;
    double f_r = 0.0;
    double re = 100.0;

    RotationSchedule schedule() const {
        if (kind == CaseKind::Stationary) return {0.0, 0.0};
        return {omega_a, f_r};
    }
};

struct SolverConfig {
    double dt = 0.005;
    double t_end = 200.0;
    double dt_learn = 0.5;  // learning-step interval; drives the rotation phase
    double poisson_tol = 1e-6;
    int poisson_max_cycles = 400;
    int ib_iters = 5;
    int output_every = 100;
    AdvectionScheme scheme = AdvectionScheme::Upwind1;
};

struct StepDiagnostics {
    Vec2 force;
    double max_div = 0.0;
    double omega = 0.0;
    std::vector<double> ib_residuals;
};

/// Pressure-projection solver with multi-direct-forcing immersed boundary:
/// predictor (convection + diffusion, forward Euler) -> IB correction ->
/// pressure Poisson -> velocity correction.
class RefSolver {
public:
    RefSolver(const Grid& grid, FluidParams fp, DomainBC bc, LagrangianBoundary markers,
              CaseDescriptor cs, SolverConfig cfg);

    void set_state(const StaggeredField& f);
    /// Uniform inflow plus a localized transverse bump that seeds wake asymmetry.
    void init_uniform(double perturb_amp = 0.0, double perturb_x = 0.0, double perturb_y = 0.0,
                      double perturb_sigma = 1.0);

    StepDiagnostics step();

    // Stage operations; step() is exactly their composition.
    StaggeredField predictor(const StaggeredField& f) const;
    IBResult boundary_stage(StaggeredField& f, double k_learn) const;
    Array2D pressure_solve(const StaggeredField& f) const;
    void project(StaggeredField& f, const Array2D& p_new) const;

    const StaggeredField& state() const { return state_; }
    StaggeredField& state() { return state_; }
    const Grid& grid() const { return *grid_; }
    const LagrangianBoundary& boundary() const { return markers_; }
    const SolverConfig& config() const { return cfg_; }
    const CaseDescriptor& case_descriptor() const { return case_; }
    const FluidParams& fluid() const { return fluid_; }
    const DomainBC& bc() const { return bc_; }
    long step_index() const { return steps_; }
    void set_step_index(long n) { steps_ = n; }
    double time() const { return steps_ * cfg_.dt; }

private:
    const Grid* grid_;
    FluidParams fluid_;
    DomainBC bc_;
    LagrangianBoundary markers_;
    CaseDescriptor case_;
    SolverConfig cfg_;
    MultigridPoisson poisson_;
    StaggeredField state_;
    long steps_ = 0;
};

struct ForceSample {
    double t = 0.0;
    double fx = 0.0, fy = 0.0;
    double omega = 0.0;
};

struct RunOutputs {
    std::vector<ForceSample> forces;  // one per solver step
    long snapshots = 0;
    bool stride_warning = false;
};

/// Called with the learning-step index k (1-based for emitted snapshots), the
/// schedule value at k, the snapshot field (downsampled when a map is given,
/// otherwise the solver state), and the instantaneous force.
using SnapshotFn =
    std::function<void(long k, double omega_k, const StaggeredField& snap, Vec2 force)>;

/// Advances the solver to t_end, emitting a snapshot every output_every steps
/// and recording the full-rate force history. Warns (via the returned flag)
/// when the stride exceeds the horizon.
RunOutputs run_case(RefSolver& solver, const DownsampleMap* down, const SnapshotFn& emit);

} // namespace ibflow

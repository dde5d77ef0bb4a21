#pragma once

#include "ibflow/hybrid.hpp"
#include "ibflow/ref_solver.hpp"

namespace ibflow {

/// Purely data-driven baseline: three independent ConvResNet blocks mirroring
/// the hybrid data flow. Block A keeps the first correction block's input
/// arity (the state raster is stacked twice in place of a physics
/// prediction); block B stands in for the IB stage, reads the rotation rate
/// as a constant channel and emits the force through a 2-channel spatial-sum
/// head; block C mirrors the projection inputs. The physics-loss-constrained
/// baseline shares this architecture and differs only in its training
/// objective.
class DataDrivenModel : public StepModel {
public:
    DataDrivenModel(const Grid& coarse, FluidParams fp, DomainBC bc, int n_markers,
                    double cyl_x, double cyl_y, HybridConfig cfg, uint64_t seed,
                    ModelKind kind = ModelKind::DataDriven);

    struct TapedStep {
        FieldVars u_tilde;
        FieldVars u_star;
        FieldVars u_next;
        Var force;  // (1,2,1,1)
    };

    struct TapeParams {
        ConvResNet::TapeParams a, b, c;
    };
    TapeParams register_params(Tape& t, bool requires_grad = true) const;

    TapedStep taped_step(Tape& t, FieldVars in, double omega_k, const TapeParams& pv);

    StepOut step(const StaggeredField& in, double k, double omega_k) override;
    ModelKind kind() const override { return kind_; }

    ConvResNet& block_a() { return a_; }
    ConvResNet& block_b() { return b_; }
    ConvResNet& block_c() { return c_; }
    std::vector<Tensor*> parameters();
    size_t param_count() const {
        return a_.param_count() + b_.param_count() + c_.param_count();
    }

    const Grid& coarse_grid() const { return *coarse_; }
    const LagrangianBoundary& boundary() const { return markers_; }
    const FluidParams& fluid() const { return fluid_; }

private:
    const Grid* coarse_;
    FluidParams fluid_;
    DomainBC bc_;
    LagrangianBoundary markers_;  // used by the physics-loss objective
    HybridConfig cfg_;
    ModelKind kind_;
    ConvResNet a_, b_, c_;
};

/// Purely numerical baseline: the reference projection solver run on the
/// coarse grid with N sub-steps of dt_learn / N per learning step. Keeps its
/// own pressure field between calls as a warm start.
class CoarseNumericalModel : public StepModel {
public:
    CoarseNumericalModel(const Grid& coarse, FluidParams fp, DomainBC bc, int n_markers,
                         double cyl_x, double cyl_y, CaseDescriptor cs, HybridConfig cfg);

    StepOut step(const StaggeredField& in, double k, double omega_k) override;
    ModelKind kind() const override { return ModelKind::CoarseNumerical; }
    RefSolver& solver() { return solver_; }

private:
    int n_substeps_;
    RefSolver solver_;
};

} // namespace ibflow

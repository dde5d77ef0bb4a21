#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "ibflow/field_ops.hpp"
#include "ibflow/resnet.hpp"

namespace ibflow {

enum class ModelKind : uint32_t {
    Hybrid = 0,
    DataDriven = 1,
    PhysicsLoss = 2,
    CoarseNumerical = 3,
};

std::string model_kind_name(ModelKind k);

struct StepOut {
    StaggeredField next;
    Vec2 force;
};

/// One autoregressive step operator (u^k, omega_k) -> (u^{k+1}, F^{k+1}).
/// The rotation rate is supplied per call so one trained model serves any
/// schedule.
class StepModel {
public:
    virtual ~StepModel() = default;
    virtual StepOut step(const StaggeredField& in, double k, double omega_k) = 0;
    virtual ModelKind kind() const = 0;
};

struct HybridConfig {
    int n_substeps = 20;  // N
    int ib_iters = 5;     // M
    double dt_learn = 0.5;
    int upsample_factor = 8;
    std::vector<int> hidden = {32, 64, 64, 32, 32};
};

/// Intermediate stage outputs of one model step.
struct ModelStep {
    StaggeredField u_tilde_star;  // after the sub-iterated PDE operator
    StaggeredField u_tilde;       // after the first correction block
    StaggeredField u_star;        // after the immersed-boundary stage
    Array2D div_star;
    StaggeredField u_next;
    Vec2 force;
    double omega_k = 0.0;
    bool cfl_halved = false;
};

/// Physics-integrated surrogate: sub-iterated convection/diffusion ->
/// correction block -> super-resolved multi-direct-forcing IB -> learned
/// implicit pressure correction. Fully differentiable through a Tape.
class HybridModel : public StepModel {
public:
    HybridModel(const Grid& coarse, FluidParams fp, DomainBC bc, int n_markers,
                double cyl_x, double cyl_y, HybridConfig cfg, uint64_t seed);

    struct TapedStep {
        FieldVars u_tilde_star;
        FieldVars u_tilde;
        FieldVars u_star;
        Var div_star;
        FieldVars u_next;
        Var force;  // (1,2,1,1)
        bool cfl_halved = false;
    };

    TapedStep taped_step(Tape& t, FieldVars in, double omega_k,
                         const ConvResNet::TapeParams& p1, const ConvResNet::TapeParams& p2);

    // Individual stages (taped_step is exactly their composition).
    FieldVars pde_operator(Tape& t, FieldVars in, bool* halved = nullptr);
    FieldVars correct_intermediate(Tape& t, FieldVars u_tilde_star, FieldVars u_t,
                                   const ConvResNet::TapeParams& p1);
    std::pair<FieldVars, Var> ib_stage(Tape& t, FieldVars u_tilde, double omega_k);
    FieldVars learned_projection(Tape& t, FieldVars u_star, Var div_star,
                                 const ConvResNet::TapeParams& p2);

    StepOut step(const StaggeredField& in, double k, double omega_k) override;
    ModelStep step_detailed(const StaggeredField& in, double omega_k);
    ModelKind kind() const override { return ModelKind::Hybrid; }

    ConvResNet& block1() { return block1_; }
    ConvResNet& block2() { return block2_; }
    const ConvResNet& block1() const { return block1_; }
    const ConvResNet& block2() const { return block2_; }
    std::vector<Tensor*> parameters();
    size_t param_count() const { return block1_.param_count() + block2_.param_count(); }

    const Grid& coarse_grid() const { return *coarse_; }
    const Grid& fine_grid() const { return fine_; }
    const HybridConfig& config() const { return cfg_; }
    const LagrangianBoundary& boundary() const { return markers_; }
    const DomainBC& bc() const { return bc_; }
    const FluidParams& fluid() const { return fluid_; }

private:
    const Grid* coarse_;
    Grid fine_;
    FluidParams fluid_;
    DomainBC bc_;
    LagrangianBoundary markers_;  // bound to the super-resolved spacing
    HybridConfig cfg_;
    DownsampleMap down_;
    ConvResNet block1_, block2_;
};

} // namespace ibflow

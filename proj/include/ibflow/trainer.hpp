#pragma once

#include <memory>
#include <string>

#include "ibflow/baselines.hpp"
#include "ibflow/dataset.hpp"
#include "ibflow/loss.hpp"
#include "ibflow/optimizer.hpp"

namespace ibflow {

struct TapedStepOut {
    FieldVars next;
    Var force;
};

/// Uniform training-time view of a step model: parameter access plus the
/// taped step. Parameter registration order matches parameters().
class TrainableAdapter {
public:
    virtual ~TrainableAdapter() = default;
    virtual std::vector<Tensor*> parameters() = 0;
    virtual std::vector<Var> register_params(Tape& t, bool requires_grad) = 0;
    virtual TapedStepOut taped_step(Tape& t, FieldVars in, double omega_k,
                                    const std::vector<Var>& pv) = 0;
    virtual ModelKind kind() const = 0;
    virtual StepModel& model() = 0;
    virtual const Grid& grid() const = 0;
    virtual const LagrangianBoundary& boundary() const = 0;
    virtual const FluidParams& fluid() const = 0;
    virtual double dt_learn() const = 0;
};

std::unique_ptr<TrainableAdapter> make_adapter(HybridModel& m);
std::unique_ptr<TrainableAdapter> make_adapter(DataDrivenModel& m);

struct TrainRunConfig {
    int epochs = 3000;
    int batch_size = 128;
    uint64_t seed = 0;
    int window = 1;  // T: 1 = single-step supervision, >1 = BPTT
    double val_fraction = 0.1;
    double lr0 = 1e-3;
    AdamConfig adam;
    PlateauScheduler scheduler;
    LossConfig loss;
    PhysicsLossConfig phys{-1.0, 1.0};  // alpha < 0: balance against the data
                                        // loss on the first batch
    std::string log_csv;                // optional per-epoch log
};

/// One training window: a case index and the snapshot index it starts at.
struct WindowRef {
    int case_id = 0;
    int start = 0;
};

/// Temporal holdout per case: the last `fraction` of window starts become
/// validation; windows never cross case boundaries.
std::pair<std::vector<WindowRef>, std::vector<WindowRef>> split_windows(
    const std::vector<const SnapshotDataset*>& cases, int window, double fraction);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
    double wall_seconds = 0.0;
    size_t peak_bytes = 0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    double best_val = 0.0;
    int best_epoch = -1;
    size_t peak_activation_bytes = 0;
    double resolved_alpha = 0.0;
    size_t param_count = 0;
};

/// Mini-batch training with Adam, plateau scheduling on the validation loss,
/// and best-validation parameter retention (restored into the model on
/// return). window = 1 is single-step supervision; larger windows unroll the
/// model autoregressively and backpropagate through the whole window.
TrainResult train_model(TrainableAdapter& model,
                        const std::vector<const SnapshotDataset*>& cases,
                        const TrainRunConfig& cfg);

} // namespace ibflow

#pragma once

#include <string>

#include "ibflow/case_setup.hpp"
#include "ibflow/rollout.hpp"
#include "ibflow/trainer.hpp"

namespace ibflow {

struct BenchConfig {
    long rollout_steps = 400;
    double train_window_tstar = 100.0;  // pairs up to this t* are trainable
    TrainRunConfig train;
    double vel_limit_factor = 50.0;
    std::vector<ModelKind> kinds = {ModelKind::Hybrid, ModelKind::DataDriven,
                                    ModelKind::PhysicsLoss, ModelKind::CoarseNumerical};
    uint64_t seed = 0;
};

struct ModelReport {
    ModelKind kind = ModelKind::Hybrid;
    RolloutRecord record;
    double eps_in = -1.0;   // mean over the training window
    double eps_out = -1.0;  // mean over the extrapolation segment
    TrainResult train;
};

struct SeenReport {
    long split_step = 0;  // learning-step index of the training-window end
    double dt_learn = 0.5;
    std::vector<ModelReport> models;
};

/// Seen-condition protocol: train on the first window of one trajectory, roll
/// out over the whole horizon, split metrics at the window boundary.
SeenReport benchmark_seen(const CaseSetup& setup, const SnapshotDataset& truth,
                          const BenchConfig& bc, const std::string& out_dir);

struct UnseenReport {
    std::vector<ModelKind> kinds;
    std::vector<double> omegas;                 // test conditions
    std::vector<std::vector<double>> eps_mean;  // [kind][condition]
    std::vector<long> diverged;                 // earliest truncation per kind (-1 none)
};

/// Unseen-condition protocol: one model per kind trained on the pooled
/// training conditions, rolled out on each held-out condition.
UnseenReport benchmark_unseen(const CaseSetup& setup,
                              const std::vector<const SnapshotDataset*>& train_sets,
                              const std::vector<const SnapshotDataset*>& test_sets,
                              const BenchConfig& bc, const std::string& out_dir);

/// Returns a copy holding only snapshots with k <= last_k.
SnapshotDataset truncate_dataset(const SnapshotDataset& ds, long last_k);

/// Mean stepwise error over the full horizon; steps missing after a
/// divergence are charged at the worst recorded level (at least 1).
double penalized_eps_mean(const RolloutRecord& rec, long horizon);

// --- file emission -------------------------------------------------------

void ensure_dir(const std::string& path);

/// Columns: t_star, eps, eps_u, eps_v, eps_f, in_window.
void export_error_curves_csv(const std::string& path, const RolloutRecord& rec, double dt_learn,
                             double train_window_tstar);

/// Columns: t_star, c_d, c_l, c_d_truth, c_l_truth.
void export_force_history_csv(const std::string& path, const RolloutRecord& rec,
                              const SnapshotDataset* truth, const FluidParams& fp,
                              double dt_learn);

void export_seen_summary_csv(const std::string& path, const SeenReport& report);
void export_unseen_summary_csv(const std::string& path, const UnseenReport& report);

/// Mean of the eps column (ignoring non-finite rows); used to close the
/// written-report round trip.
double eps_mean_from_error_csv(const std::string& path);

/// 8-bit grayscale PGM of the vorticity field with a fixed symmetric scale.
void export_vorticity_pgm(const std::string& path, const StaggeredField& f, double vort_scale);

} // namespace ibflow

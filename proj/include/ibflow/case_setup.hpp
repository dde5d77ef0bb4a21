#pragma once

#include <memory>

#include "ibflow/baselines.hpp"
#include "ibflow/config.hpp"
#include "ibflow/dataset.hpp"

namespace ibflow {

/// Everything derived from one configuration: fluid, grids, case and solver
/// settings. Owns the grids; models built from it hold references, so the
/// setup must outlive them.
struct CaseSetup {
    FluidParams fluid;
    DomainBC bc;
    Grid fine_grid;
    Grid coarse_grid;
    CropWindow window;
    CaseDescriptor cs;
    SolverConfig solver_cfg;
    HybridConfig model_cfg;
    double cyl_x = 0.0, cyl_y = 0.0;
    int n_markers = 196;
    double perturb_amp = 0.0, perturb_x = 0.0, perturb_y = 0.0, perturb_sigma = 1.0;

    RotationSchedule schedule() const { return cs.schedule(); }
};

CaseSetup build_setup(const Config& cfg);

std::unique_ptr<RefSolver> make_solver(const CaseSetup& s);
std::unique_ptr<HybridModel> make_hybrid(const CaseSetup& s, uint64_t seed);
std::unique_ptr<DataDrivenModel> make_datadriven(const CaseSetup& s, uint64_t seed,
                                                 ModelKind kind);
std::unique_ptr<CoarseNumericalModel> make_coarse_numerical(const CaseSetup& s);
DatasetHeader make_dataset_header(const CaseSetup& s);

} // namespace ibflow

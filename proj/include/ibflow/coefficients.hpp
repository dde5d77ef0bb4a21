#pragma once

#include <optional>
#include <vector>

#include "ibflow/field.hpp"
#include "ibflow/ref_solver.hpp"

namespace ibflow {

struct ForceStats {
    double cd_mean = 0.0;
    double cl_amp = 0.0;  // half peak-to-peak of C_L over the analysis window
    std::optional<double> strouhal;
    double window_t0 = 0.0, window_t1 = 0.0;
    int n_samples = 0;
};

/// Dimensionless force statistics over the post-transient window.
/// C = 2 F / (rho U^2 D); the Strouhal number is taken from the largest
/// spectral magnitude bin of the demeaned lift signal with parabolic peak
/// interpolation. Throws InsufficientDataError when the window is shorter
/// than min_window convective times.
ForceStats compute_coefficients(const std::vector<ForceSample>& history, const FluidParams& fp,
                                double transient_cutoff = 100.0, double min_window = 60.0);

/// Strouhal number or InsufficientDataError when the lift has no spectral peak.
double require_strouhal(const ForceStats& stats);

} // namespace ibflow

#pragma once

#include <array>
#include <vector>

#include "ibflow/field.hpp"

namespace ibflow {

/// Three-point regularized delta kernel (1D factor), compactly supported on
/// |r| < 1.5 and continuous at the branch points.
double phi3(double r);

/// Two-dimensional tensor-product kernel: phi(|dx|/h) * phi(|dy|/h) / h^2.
double delta_h(double dx_, double dy_, double h);

struct Vec2 {
    double x = 0.0, y = 0.0;
};

/// Lagrangian representation of the immersed cylinder: uniformly spaced
/// surface markers, the mean arc spacing, and (once bound to a grid spacing h)
/// the discrete boundary measure ds = h * arc_spacing per marker.
struct LagrangianBoundary {
    std::vector<double> x, y;
    std::vector<double> ds;
    double arc_spacing = 0.0;
    double cx = 0.0, cy = 0.0;
    double radius = 0.0;

    int n_markers() const { return static_cast<int>(x.size()); }
};

LagrangianBoundary cylinder_markers(double diameter, int n_markers, double cx, double cy);

/// Sets ds = h * arc_spacing for the grid the boundary operates on.
void bind_measure(LagrangianBoundary& b, double h);

/// Prescribed rotational oscillation omega(k) = omega_a * sin(2 pi f_r k),
/// where k counts learning steps (fractional k interpolates the schedule in
/// simulation time).
struct RotationSchedule {
    double omega_a = 0.0;
    double f_r = 0.0;

    double omega_at(double k) const;
};

/// Rigid-rotation target velocities omega x (X - center) at step index k.
std::vector<Vec2> marker_targets(const LagrangianBoundary& b, const RotationSchedule& s,
                                 double k);

/// Target velocities at a given instantaneous rotation rate.
std::vector<Vec2> marker_targets(const LagrangianBoundary& b, double omega);

struct IBConfig {
    int sub_iterations = 5;  // M
};

/// Precomputed 4x4 kernel stamp of one marker on one component lattice.
struct KernelStamp {
    int i0 = 0, j0 = 0;
    std::array<double, 4> wx{}, wy{};
};

/// Builds the stamp for marker (X, Y) on the lattice with node coordinates
/// (xs, ys) and uniform local spacing h. Requires the marker to be at least 2h
/// from the lattice hull; the spacing must be uniform across the support.
KernelStamp make_stamp(const std::vector<double>& xs, const std::vector<double>& ys, double X,
                       double Y, double h);

/// Local grid spacing at the markers; verifies uniformity across all stamps.
double marker_region_spacing(const Grid& g, const LagrangianBoundary& b);

/// Velocity interpolation to the markers (Eulerian -> Lagrangian): per
/// component, sum of field values weighted by delta_h * h^2.
std::vector<Vec2> interpolate_to_markers(const StaggeredField& f, const LagrangianBoundary& b);

/// Direct-forcing term (target - interpolated) / dt per marker.
std::vector<Vec2> marker_forcing(const std::vector<Vec2>& targets,
                                 const std::vector<Vec2>& interpolated, double dt_learn);

/// Force spreading (Lagrangian -> Eulerian): body-force density
/// f(x) = sum_K F_K delta_h ds_K per staggered component.
FaceVec spread_forcing(const std::vector<Vec2>& forces, const LagrangianBoundary& b,
                       const Grid& g);

/// Net hydrodynamic force: F = sum_K ( - sum_m F_K^m ds_K ).
Vec2 accumulate_force(const std::vector<std::vector<Vec2>>& forcing_history,
                      const std::vector<double>& ds);

struct IBResult {
    Vec2 force;
    std::vector<double> residuals;  // max-norm marker mismatch before each cycle
};

/// Multi-direct-forcing correction: M cycles of interpolate -> force -> spread
/// -> update (u += dt * f), modifying `f` in place. Returns the accumulated
/// reaction force and the per-cycle residuals.
IBResult ib_correct(StaggeredField& f, const LagrangianBoundary& b,
                    const std::vector<Vec2>& targets, const IBConfig& cfg, double dt_learn,
                    long step_index = -1);

} // namespace ibflow

#pragma once

#include <string>
#include <vector>

#include "ibflow/errors.hpp"

namespace ibflow {

/// Which physical domain a grid discretizes.
enum class DomainTag { Full, Truncated };

/// 2D Cartesian cell grid with per-axis spacings. Staggered (MAC) layout:
/// pressure at cell centers, u on vertical (x-normal) faces, v on horizontal
/// (y-normal) faces.
///
///   u(j,i) at (xf[i], yc[j])   shape ny x (nx+1)
///   v(j,i) at (xc[i], yf[j])   shape (ny+1) x nx
///   p(j,i) at (xc[i], yc[j])   shape ny x nx
class Grid {
public:
    Grid() = default;
    Grid(std::vector<double> dx, std::vector<double> dy, double x0, double y0,
         DomainTag tag = DomainTag::Full);

    static Grid uniform(int nx, int ny, double x0, double y0, double hx, double hy,
                        DomainTag tag = DomainTag::Full);

    int nx() const { return static_cast<int>(dx_.size()); }
    int ny() const { return static_cast<int>(dy_.size()); }
    double x0() const { return x0_; }
    double y0() const { return y0_; }
    double lx() const { return xf_.back() - xf_.front(); }
    double ly() const { return yf_.back() - yf_.front(); }
    DomainTag tag() const { return tag_; }

    double dx(int i) const { return dx_[i]; }
    double dy(int j) const { return dy_[j]; }
    const std::vector<double>& dx() const { return dx_; }
    const std::vector<double>& dy() const { return dy_; }

    /// Face coordinates: xf has nx+1 entries, yf has ny+1 entries.
    double xf(int i) const { return xf_[i]; }
    double yf(int j) const { return yf_[j]; }
    const std::vector<double>& xf() const { return xf_; }
    const std::vector<double>& yf() const { return yf_; }

    /// Cell-center coordinates: xc has nx entries, yc has ny entries.
    double xc(int i) const { return xc_[i]; }
    double yc(int j) const { return yc_[j]; }
    const std::vector<double>& xc() const { return xc_; }
    const std::vector<double>& yc() const { return yc_; }

    double min_spacing() const;
    double max_spacing() const;
    bool is_uniform(double rel_tol = 1e-12) const;

private:
    std::vector<double> dx_, dy_;
    std::vector<double> xf_, yf_;
    std::vector<double> xc_, yc_;
    double x0_ = 0.0, y0_ = 0.0;
    DomainTag tag_ = DomainTag::Full;
};

/// One mandatory uniform interval of an axis (e.g. the refinement box or the
/// crop-window band). Intervals may nest; the smallest spacing wins where they
/// overlap.
struct UniformBand {
    double a = 0.0;
    double b = 0.0;
    double h = 0.0;
};

/// Stretched-axis description: uniform bands joined by geometric ramps with
/// bounded growth, capped spacing in the far field.
struct AxisSpec {
    double x0 = 0.0;
    double x1 = 1.0;
    std::vector<UniformBand> bands;
    double stretch_ratio = 1.05;
    double h_cap = 1e30;
};

/// Builds per-cell spacings for a stretched axis. The returned spacings sum to
/// x1-x0 within 1e-12 relative; every uniform band is honored exactly.
std::vector<double> build_axis_spacings(const AxisSpec& spec);

} // namespace ibflow

#pragma once

#include "ibflow/field.hpp"

namespace ibflow {

/// Mapping from a fine grid onto a coarse grid covering a crop window inside
/// it. Coarse face lines snap to the nearest fine face line; the snap must be
/// closer than half the local fine spacing. Coarse cell bands are the fine
/// cells between consecutive snapped faces.
struct DownsampleMap {
    const Grid* fine = nullptr;
    const Grid* coarse = nullptr;
    std::vector<int> xface;  // nx_c+1 fine x-face indices
    std::vector<int> yface;  // ny_c+1 fine y-face indices
};

DownsampleMap build_downsample_map(const Grid& fine, const Grid& coarse);

/// Fine -> coarse transfer: u is the length-weighted average of the fine
/// u-faces lying on the coarse face segment (fine faces interior to a coarse
/// cell are discarded), v likewise, p is the area-weighted subcell average.
StaggeredField downsample(const StaggeredField& fine, const DownsampleMap& map);

/// Convenience wrapper: crops `window` (uniform coarse lattice) out of `fine`
/// and reduces by `factor`. The window must cover a whole number of fine cells
/// divisible by `factor` along each axis.
struct CropWindow {
    double x0 = 0.0, y0 = 0.0;
    double width = 0.0, height = 0.0;
};
Grid make_window_grid(const Grid& fine, const CropWindow& window, int factor);

/// Uniform refinement of a (uniform) coarse grid by an integer factor.
Grid refined_grid(const Grid& coarse, int factor);

/// Coarse -> fine transfer by bilinear interpolation on the staggered layout.
/// Queries beyond the outermost sample rows extrapolate linearly, so the map
/// is exact on constant and linear fields. `fine` must live on
/// refined_grid(coarse, factor).
void upsample(const StaggeredField& coarse, StaggeredField& fine, int factor);

/// 1D interpolation index/weight with linear extrapolation past the ends.
struct LinWeight {
    int i0 = 0;
    double t = 0.0;  // value = (1-t)*a[i0] + t*a[i0+1]
};
LinWeight center_weight(const std::vector<double>& coords, double x);

} // namespace ibflow

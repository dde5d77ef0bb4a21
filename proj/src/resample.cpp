#include "ibflow/resample.hpp"

#include <algorithm>
#include <cmath>

namespace ibflow {

namespace {

int nearest_face(const std::vector<double>& faces, double x) {
    auto it = std::lower_bound(faces.begin(), faces.end(), x);
    if (it == faces.begin()) return 0;
    if (it == faces.end()) return static_cast<int>(faces.size()) - 1;
    const int hi = static_cast<int>(it - faces.begin());
    return (x - faces[hi - 1] <= faces[hi] - x) ? hi - 1 : hi;
}

std::vector<int> snap_faces(const std::vector<double>& fine_faces,
                            const std::vector<double>& fine_spacing,
                            const std::vector<double>& coarse_faces) {
    std::vector<int> idx(coarse_faces.size());
    for (size_t k = 0; k < coarse_faces.size(); ++k) {
        const int i = nearest_face(fine_faces, coarse_faces[k]);
        const double h_local =
            fine_spacing[std::min<size_t>(std::max(i - 1, 0), fine_spacing.size() - 1)];
        if (std::abs(fine_faces[i] - coarse_faces[k]) > 0.51 * h_local)
            throw ConfigError("crop window does not align with the fine grid");
        idx[k] = i;
    }
    for (size_t k = 1; k < idx.size(); ++k)
        if (idx[k] <= idx[k - 1])
            throw ConfigError("coarse cell covers no fine cells; window/factor mismatch");
    return idx;
}

} // namespace

DownsampleMap build_downsample_map(const Grid& fine, const Grid& coarse) {
    DownsampleMap m;
    m.fine = &fine;
    m.coarse = &coarse;
    m.xface = snap_faces(fine.xf(), fine.dx(), coarse.xf());
    m.yface = snap_faces(fine.yf(), fine.dy(), coarse.yf());
    return m;
}

StaggeredField downsample(const StaggeredField& ff, const DownsampleMap& map) {
    require(ff.grid == map.fine, "downsample: field not on the map's fine grid");
    const Grid& fg = *map.fine;
    const Grid& cg = *map.coarse;
    StaggeredField out(cg);

    const int NX = cg.nx(), NY = cg.ny();

    // u: fine u-faces on the coarse face line, length-weighted over the band.
    for (int J = 0; J < NY; ++J) {
        const int j0 = map.yface[J], j1 = map.yface[J + 1];
        double den = 0.0;
        for (int j = j0; j < j1; ++j) den += fg.dy(j);
        for (int I = 0; I <= NX; ++I) {
            const int fi = map.xface[I];
            double acc = 0.0;
            for (int j = j0; j < j1; ++j) acc += (fg.dy(j) / den) * ff.u(j, fi);
            out.u(J, I) = acc;
        }
    }

    // v: symmetric.
    for (int J = 0; J <= NY; ++J) {
        const int fj = map.yface[J];
        for (int I = 0; I < NX; ++I) {
            const int i0 = map.xface[I], i1 = map.xface[I + 1];
            double den = 0.0;
            for (int i = i0; i < i1; ++i) den += fg.dx(i);
            double acc = 0.0;
            for (int i = i0; i < i1; ++i) acc += (fg.dx(i) / den) * ff.v(fj, i);
            out.v(J, I) = acc;
        }
    }

    // p: area-weighted subcell average.
    for (int J = 0; J < NY; ++J) {
        const int j0 = map.yface[J], j1 = map.yface[J + 1];
        for (int I = 0; I < NX; ++I) {
            const int i0 = map.xface[I], i1 = map.xface[I + 1];
            double den = 0.0;
            for (int j = j0; j < j1; ++j)
                for (int i = i0; i < i1; ++i) den += fg.dx(i) * fg.dy(j);
            double acc = 0.0;
            for (int j = j0; j < j1; ++j)
                for (int i = i0; i < i1; ++i) acc += (fg.dx(i) * fg.dy(j) / den) * ff.p(j, i);
            out.p(J, I) = acc;
        }
    }
    return out;
}

Grid make_window_grid(const Grid& fine, const CropWindow& w, int factor) {
    if (factor < 1) throw ConfigError("reduction factor must be >= 1");
    const int i0 = nearest_face(fine.xf(), w.x0);
    const int i1 = nearest_face(fine.xf(), w.x0 + w.width);
    const int j0 = nearest_face(fine.yf(), w.y0);
    const int j1 = nearest_face(fine.yf(), w.y0 + w.height);
    const int ncx = i1 - i0, ncy = j1 - j0;
    if (ncx <= 0 || ncy <= 0) throw ConfigError("crop window is empty");
    if (ncx % factor != 0 || ncy % factor != 0)
        throw ConfigError("crop window fine-cell count not divisible by factor");
    const int NX = ncx / factor, NY = ncy / factor;
    return Grid::uniform(NX, NY, w.x0, w.y0, w.width / NX, w.height / NY, DomainTag::Truncated);
}

Grid refined_grid(const Grid& coarse, int factor) {
    require(factor >= 1, "refinement factor must be >= 1");
    require(coarse.is_uniform(1e-9), "refined_grid expects a uniform coarse grid");
    return Grid::uniform(coarse.nx() * factor, coarse.ny() * factor, coarse.x0(), coarse.y0(),
                         coarse.dx(0) / factor, coarse.dy(0) / factor, coarse.tag());
}

LinWeight center_weight(const std::vector<double>& coords, double x) {
    const int n = static_cast<int>(coords.size());
    require(n >= 2, "need at least two samples to interpolate");
    auto it = std::upper_bound(coords.begin(), coords.end(), x);
    int i0 = static_cast<int>(it - coords.begin()) - 1;
    i0 = std::clamp(i0, 0, n - 2);
    return {i0, (x - coords[i0]) / (coords[i0 + 1] - coords[i0])};
}

void upsample(const StaggeredField& cf, StaggeredField& ff, int factor) {
    const Grid& cg = *cf.grid;
    const Grid& fg = *ff.grid;
    require(fg.nx() == cg.nx() * factor && fg.ny() == cg.ny() * factor,
            "upsample: fine field is not a refinement of the coarse field");
    const int s = factor;
    const int NX = cg.nx(), NY = cg.ny();

    // u: exact on coarse face columns, bilinear between; extrapolating linear
    // weights across the row centers.
    for (int j = 0; j < fg.ny(); ++j) {
        const LinWeight wy = center_weight(cg.yc(), fg.yc(j));
        for (int i = 0; i <= fg.nx(); ++i) {
            const int I0 = std::min(i / s, NX - 1);
            const double t = static_cast<double>(i - I0 * s) / s;
            const double a = (1.0 - wy.t) * cf.u(wy.i0, I0) + wy.t * cf.u(wy.i0 + 1, I0);
            const double b = (1.0 - wy.t) * cf.u(wy.i0, I0 + 1) + wy.t * cf.u(wy.i0 + 1, I0 + 1);
            ff.u(j, i) = (1.0 - t) * a + t * b;
        }
    }

    for (int j = 0; j <= fg.ny(); ++j) {
        const int J0 = std::min(j / s, NY - 1);
        const double t = static_cast<double>(j - J0 * s) / s;
        for (int i = 0; i < fg.nx(); ++i) {
            const LinWeight wx = center_weight(cg.xc(), fg.xc(i));
            const double a = (1.0 - wx.t) * cf.v(J0, wx.i0) + wx.t * cf.v(J0, wx.i0 + 1);
            const double b = (1.0 - wx.t) * cf.v(J0 + 1, wx.i0) + wx.t * cf.v(J0 + 1, wx.i0 + 1);
            ff.v(j, i) = (1.0 - t) * a + t * b;
        }
    }

    for (int j = 0; j < fg.ny(); ++j) {
        const LinWeight wy = center_weight(cg.yc(), fg.yc(j));
        for (int i = 0; i < fg.nx(); ++i) {
            const LinWeight wx = center_weight(cg.xc(), fg.xc(i));
            const double a = (1.0 - wx.t) * cf.p(wy.i0, wx.i0) + wx.t * cf.p(wy.i0, wx.i0 + 1);
            const double b =
                (1.0 - wx.t) * cf.p(wy.i0 + 1, wx.i0) + wx.t * cf.p(wy.i0 + 1, wx.i0 + 1);
            ff.p(j, i) = (1.0 - wy.t) * a + wy.t * b;
        }
    }
}

} // namespace ibflow

#include "ibflow/stencils.hpp"

#include <cmath>

namespace ibflow {

Array2D divergence(const StaggeredField& f) {
    require(f.shapes_consistent(), "divergence: field shapes inconsistent with grid");
    const Grid& g = *f.grid;
    Array2D div(g.ny(), g.nx());
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            div(j, i) = (f.u(j, i + 1) - f.u(j, i)) / g.dx(i) +
                        (f.v(j + 1, i) - f.v(j, i)) / g.dy(j);
    return div;
}

namespace {

// One-sided and central slopes with ghost handling; `scheme` picks the face
// value. Zero advecting velocity averages the two one-sided slopes.
inline double pick_slope(double adv, double bwd, double fwd, double central,
                         AdvectionScheme scheme) {
    if (scheme == AdvectionScheme::Central2) return central;
    if (adv > 0.0) return bwd;
    if (adv < 0.0) return fwd;
    return 0.5 * (bwd + fwd);
}

} // namespace

FaceVec convect(const StaggeredField& f, AdvectionScheme scheme) {
    require(f.shapes_consistent(), "convect: field shapes inconsistent with grid");
    const Grid& g = *f.grid;
    const int nx = g.nx(), ny = g.ny();
    FaceVec out(g);

    // u-faces, interior columns only.
    for (int j = 0; j < ny; ++j) {
        for (int i = 1; i < nx; ++i) {
            const double uu = f.u(j, i);
            const double vv = 0.25 * (f.v(j, i - 1) + f.v(j, i) +
                                      f.v(j + 1, i - 1) + f.v(j + 1, i));

            const double hxw = g.xf(i) - g.xf(i - 1);
            const double hxe = g.xf(i + 1) - g.xf(i);
            const double bwd_x = (f.u(j, i) - f.u(j, i - 1)) / hxw;
            const double fwd_x = (f.u(j, i + 1) - f.u(j, i)) / hxe;
            const double cen_x = (f.u(j, i + 1) - f.u(j, i - 1)) / (hxw + hxe);

            const double u_s = u_ghost(f.u, j - 1, i);
            const double u_n = u_ghost(f.u, j + 1, i);
            const double hys = (j == 0) ? g.dy(0) : g.yc(j) - g.yc(j - 1);
            const double hyn = (j == ny - 1) ? g.dy(ny - 1) : g.yc(j + 1) - g.yc(j);
            const double bwd_y = (f.u(j, i) - u_s) / hys;
            const double fwd_y = (u_n - f.u(j, i)) / hyn;
            const double cen_y = (u_n - u_s) / (hys + hyn);

            const double dudx = pick_slope(uu, bwd_x, fwd_x, cen_x, scheme);
            const double dudy = pick_slope(vv, bwd_y, fwd_y, cen_y, scheme);
            out.u(j, i) = -(uu * dudx + vv * dudy);
        }
    }

    // v-faces, interior rows only.
    for (int j = 1; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double vv = f.v(j, i);
            const double uu = 0.25 * (f.u(j - 1, i) + f.u(j - 1, i + 1) +
                                      f.u(j, i) + f.u(j, i + 1));

            const double v_w = v_ghost(f.v, j, i - 1);
            const double v_e = v_ghost(f.v, j, i + 1);
            const double hxw = (i == 0) ? g.dx(0) : g.xc(i) - g.xc(i - 1);
            const double hxe = (i == nx - 1) ? g.dx(nx - 1) : g.xc(i + 1) - g.xc(i);
            const double bwd_x = (f.v(j, i) - v_w) / hxw;
            const double fwd_x = (v_e - f.v(j, i)) / hxe;
            const double cen_x = (v_e - v_w) / (hxw + hxe);

            const double hys = g.yf(j) - g.yf(j - 1);
            const double hyn = g.yf(j + 1) - g.yf(j);
            const double bwd_y = (f.v(j, i) - f.v(j - 1, i)) / hys;
            const double fwd_y = (f.v(j + 1, i) - f.v(j, i)) / hyn;
            const double cen_y = (f.v(j + 1, i) - f.v(j - 1, i)) / (hys + hyn);

            const double dvdx = pick_slope(uu, bwd_x, fwd_x, cen_x, scheme);
            const double dvdy = pick_slope(vv, bwd_y, fwd_y, cen_y, scheme);
            out.v(j, i) = -(uu * dvdx + vv * dvdy);
        }
    }
    return out;
}

FaceVec diffuse(const StaggeredField& f, double nu) {
    require(f.shapes_consistent(), "diffuse: field shapes inconsistent with grid");
    const Grid& g = *f.grid;
    const int nx = g.nx(), ny = g.ny();
    FaceVec out(g);

    for (int j = 0; j < ny; ++j) {
        for (int i = 1; i < nx; ++i) {
            const double hxw = g.xf(i) - g.xf(i - 1);
            const double hxe = g.xf(i + 1) - g.xf(i);
            const double d2x = 2.0 *
                ((f.u(j, i + 1) - f.u(j, i)) / hxe - (f.u(j, i) - f.u(j, i - 1)) / hxw) /
                (hxe + hxw);

            const double u_s = u_ghost(f.u, j - 1, i);
            const double u_n = u_ghost(f.u, j + 1, i);
            const double hys = (j == 0) ? g.dy(0) : g.yc(j) - g.yc(j - 1);
            const double hyn = (j == ny - 1) ? g.dy(ny - 1) : g.yc(j + 1) - g.yc(j);
            const double d2y = 2.0 *
                ((u_n - f.u(j, i)) / hyn - (f.u(j, i) - u_s) / hys) / (hyn + hys);

            out.u(j, i) = nu * (d2x + d2y);
        }
    }

    for (int j = 1; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double v_w = v_ghost(f.v, j, i - 1);
            const double v_e = v_ghost(f.v, j, i + 1);
            const double hxw = (i == 0) ? g.dx(0) : g.xc(i) - g.xc(i - 1);
            const double hxe = (i == nx - 1) ? g.dx(nx - 1) : g.xc(i + 1) - g.xc(i);
            const double d2x = 2.0 *
                ((v_e - f.v(j, i)) / hxe - (f.v(j, i) - v_w) / hxw) / (hxe + hxw);

            const double hys = g.yf(j) - g.yf(j - 1);
            const double hyn = g.yf(j + 1) - g.yf(j);
            const double d2y = 2.0 *
                ((f.v(j + 1, i) - f.v(j, i)) / hyn - (f.v(j, i) - f.v(j - 1, i)) / hys) /
                (hyn + hys);

            out.v(j, i) = nu * (d2x + d2y);
        }
    }
    return out;
}

Array2D vorticity(const StaggeredField& f) {
    require(f.shapes_consistent(), "vorticity: field shapes inconsistent with grid");
    const Grid& g = *f.grid;
    const int nx = g.nx(), ny = g.ny();
    Array2D w(ny + 1, nx + 1);
    for (int jn = 0; jn <= ny; ++jn) {
        for (int in = 0; in <= nx; ++in) {
            int i0 = in - 1, i1 = in;
            if (i0 < 0) { i0 = 0; i1 = 1; }
            if (i1 > nx - 1) { i1 = nx - 1; i0 = nx - 2; }
            const double dvdx = (f.v(jn, i1) - f.v(jn, i0)) / (g.xc(i1) - g.xc(i0));

            int j0 = jn - 1, j1 = jn;
            if (j0 < 0) { j0 = 0; j1 = 1; }
            if (j1 > ny - 1) { j1 = ny - 1; j0 = ny - 2; }
            const double dudy = (f.u(j1, in) - f.u(j0, in)) / (g.yc(j1) - g.yc(j0));

            w(jn, in) = dvdx - dudy;
        }
    }
    return w;
}

double cfl_number(const StaggeredField& f, double dt) {
    return dt * f.max_velocity() / f.grid->min_spacing();
}

} // namespace ibflow

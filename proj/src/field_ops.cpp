#include "ibflow/field_ops.hpp"

#include <cmath>

namespace ibflow {

FieldVars field_leaves(Tape& t, const StaggeredField& f, bool requires_grad) {
    return {t.leaf(Tensor::from_array(f.u), requires_grad),
            t.leaf(Tensor::from_array(f.v), requires_grad)};
}

StaggeredField field_values(const Tape& t, FieldVars fv, const Grid& g) {
    StaggeredField f(g);
    f.u = t.val(fv.u).to_array();
    f.v = t.val(fv.v).to_array();
    return f;
}

double scalar_value(const Tape& t, Var v) { return t.val(v).data[0]; }

namespace {

// Ghost-aware accessors mirroring field.cpp, plus their adjoint writers.
inline double uval(const Tensor& u, int j, int i) {
    if (j < 0) j = 0;
    if (j >= u.h) j = u.h - 1;
    return u.data[static_cast<size_t>(j) * u.w + i];
}
inline void uadd(Tensor& gu, int j, int i, double w) {
    if (j < 0) j = 0;
    if (j >= gu.h) j = gu.h - 1;
    gu.data[static_cast<size_t>(j) * gu.w + i] += w;
}
inline double vval(const Tensor& v, int j, int i) {
    if (i < 0) return -v.data[static_cast<size_t>(j) * v.w + 0];
    if (i >= v.w) return v.data[static_cast<size_t>(j) * v.w + v.w - 1];
    return v.data[static_cast<size_t>(j) * v.w + i];
}
inline void vadd(Tensor& gv, int j, int i, double w) {
    if (i < 0) {
        gv.data[static_cast<size_t>(j) * gv.w + 0] -= w;
        return;
    }
    if (i >= gv.w) i = gv.w - 1;
    gv.data[static_cast<size_t>(j) * gv.w + i] += w;
}

inline double slope_select(double adv, double bwd, double fwd, double cen,
                           AdvectionScheme scheme) {
    if (scheme == AdvectionScheme::Central2) return cen;
    if (adv > 0.0) return bwd;
    if (adv < 0.0) return fwd;
    return 0.5 * (bwd + fwd);
}

} // namespace

FieldVars op_substep(Tape& t, FieldVars in, const Grid& g, double nu, double dt,
                     AdvectionScheme scheme) {
    const Tensor& u = t.val(in.u);
    const Tensor& v = t.val(in.v);
    const int nx = g.nx(), ny = g.ny();
    require(u.h == ny && u.w == nx + 1 && v.h == ny + 1 && v.w == nx, "substep: shape mismatch");

    Tensor uo = u, vo = v;

    // Forward pass; the vjp below re-derives the same local quantities from
    // the recorded inputs, so no per-face cache is stored.
    for (int j = 0; j < ny; ++j) {
        for (int i = 1; i < nx; ++i) {
            const double uu = uval(u, j, i);
            const double vv = 0.25 * (vval(v, j, i - 1) + vval(v, j, i) +
                                      vval(v, j + 1, i - 1) + vval(v, j + 1, i));
            const double hxw = g.xf(i) - g.xf(i - 1);
            const double hxe = g.xf(i + 1) - g.xf(i);
            const double bwd_x = (uval(u, j, i) - uval(u, j, i - 1)) / hxw;
            const double fwd_x = (uval(u, j, i + 1) - uval(u, j, i)) / hxe;
            const double cen_x = (uval(u, j, i + 1) - uval(u, j, i - 1)) / (hxw + hxe);
            const double hys = (j == 0) ? g.dy(0) : g.yc(j) - g.yc(j - 1);
            const double hyn = (j == ny - 1) ? g.dy(ny - 1) : g.yc(j + 1) - g.yc(j);
            const double bwd_y = (uval(u, j, i) - uval(u, j - 1, i)) / hys;
            const double fwd_y = (uval(u, j + 1, i) - uval(u, j, i)) / hyn;
            const double cen_y = (uval(u, j + 1, i) - uval(u, j - 1, i)) / (hys + hyn);
            const double dudx = slope_select(uu, bwd_x, fwd_x, cen_x, scheme);
            const double dudy = slope_select(vv, bwd_y, fwd_y, cen_y, scheme);
            const double conv = -(uu * dudx + vv * dudy);
            const double d2x = 2.0 * (fwd_x - bwd_x) / (hxe + hxw);
            const double d2y = 2.0 * (fwd_y - bwd_y) / (hyn + hys);
            uo.data[static_cast<size_t>(j) * uo.w + i] =
                uu + dt * (conv + nu * (d2x + d2y));
        }
    }
    for (int j = 1; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double vv = vval(v, j, i);
            const double uu = 0.25 * (uval(u, j - 1, i) + uval(u, j - 1, i + 1) +
                                      uval(u, j, i) + uval(u, j, i + 1));
            const double hxw = (i == 0) ? g.dx(0) : g.xc(i) - g.xc(i - 1);
            const double hxe = (i == nx - 1) ? g.dx(nx - 1) : g.xc(i + 1) - g.xc(i);
            const double bwd_x = (vval(v, j, i) - vval(v, j, i - 1)) / hxw;
            const double fwd_x = (vval(v, j, i + 1) - vval(v, j, i)) / hxe;
            const double cen_x = (vval(v, j, i + 1) - vval(v, j, i - 1)) / (hxw + hxe);
            const double hys = g.yf(j) - g.yf(j - 1);
            const double hyn = g.yf(j + 1) - g.yf(j);
            const double bwd_y = (vval(v, j, i) - vval(v, j - 1, i)) / hys;
            const double fwd_y = (vval(v, j + 1, i) - vval(v, j, i)) / hyn;
            const double cen_y = (vval(v, j + 1, i) - vval(v, j - 1, i)) / (hys + hyn);
            const double dvdx = slope_select(uu, bwd_x, fwd_x, cen_x, scheme);
            const double dvdy = slope_select(vv, bwd_y, fwd_y, cen_y, scheme);
            const double conv = -(uu * dvdx + vv * dvdy);
            const double d2x = 2.0 * (fwd_x - bwd_x) / (hxe + hxw);
            const double d2y = 2.0 * (fwd_y - bwd_y) / (hyn + hys);
            vo.data[static_cast<size_t>(j) * vo.w + i] =
                vv + dt * (conv + nu * (d2x + d2y));
        }
    }

    const int id = static_cast<int>(t.num_nodes());
    const Var ou{id, 0}, ov{id, 1};
    const Grid* gp = &g;
    t.emit({in.u, in.v}, {std::move(uo), std::move(vo)},
           [ou, ov, in, gp, nu, dt, scheme](Tape& tp) {
               const Tensor* gu_out = tp.maybe_grad(ou);
               const Tensor* gv_out = tp.maybe_grad(ov);
               const Tensor& u = tp.val(in.u);
               const Tensor& v = tp.val(in.v);
               const Grid& g = *gp;
               const int nx = g.nx(), ny = g.ny();
               Tensor gu(1, 1, ny, nx + 1), gv(1, 1, ny + 1, nx);
               if (gu_out)
                   for (size_t k = 0; k < gu.size(); ++k) gu.data[k] = gu_out->data[k];
               if (gv_out)
                   for (size_t k = 0; k < gv.size(); ++k) gv.data[k] = gv_out->data[k];

               if (gu_out) {
                   for (int j = 0; j < ny; ++j) {
                       for (int i = 1; i < nx; ++i) {
                           const double go = gu_out->data[static_cast<size_t>(j) * (nx + 1) + i];
                           if (go == 0.0) continue;
                           const double s = dt * go;
                           const double uu = uval(u, j, i);
                           const double vv = 0.25 * (vval(v, j, i - 1) + vval(v, j, i) +
                                                     vval(v, j + 1, i - 1) + vval(v, j + 1, i));
                           const double hxw = g.xf(i) - g.xf(i - 1);
                           const double hxe = g.xf(i + 1) - g.xf(i);
                           const double bwd_x = (uval(u, j, i) - uval(u, j, i - 1)) / hxw;
                           const double fwd_x = (uval(u, j, i + 1) - uval(u, j, i)) / hxe;
                           const double cen_x =
                               (uval(u, j, i + 1) - uval(u, j, i - 1)) / (hxw + hxe);
                           const double hys = (j == 0) ? g.dy(0) : g.yc(j) - g.yc(j - 1);
                           const double hyn =
                               (j == ny - 1) ? g.dy(ny - 1) : g.yc(j + 1) - g.yc(j);
                           const double bwd_y = (uval(u, j, i) - uval(u, j - 1, i)) / hys;
                           const double fwd_y = (uval(u, j + 1, i) - uval(u, j, i)) / hyn;
                           const double cen_y =
                               (uval(u, j + 1, i) - uval(u, j - 1, i)) / (hys + hyn);
                           const double dudx = slope_select(uu, bwd_x, fwd_x, cen_x, scheme);
                           const double dudy = slope_select(vv, bwd_y, fwd_y, cen_y, scheme);

                           // d(out)/d(uu): -dudx plus the identity handled above.
                           uadd(gu, j, i, -s * dudx);
                           // d(out)/d(vv) = -dudy, spread over the 4-point average.
                           const double gvv = -s * dudy * 0.25;
                           vadd(gv, j, i - 1, gvv);
                           vadd(gv, j, i, gvv);
                           vadd(gv, j + 1, i - 1, gvv);
                           vadd(gv, j + 1, i, gvv);
                           // d(out)/d(slope) terms: conv slope weighted by the
                           // advecting velocity, diffusion linear.
                           auto slope_adj_x = [&](double w) {
                               // w multiplies the selected x-slope.
                               if (scheme == AdvectionScheme::Central2) {
                                   uadd(gu, j, i + 1, w / (hxw + hxe));
                                   uadd(gu, j, i - 1, -w / (hxw + hxe));
                               } else if (uu > 0.0) {
                                   uadd(gu, j, i, w / hxw);
                                   uadd(gu, j, i - 1, -w / hxw);
                               } else if (uu < 0.0) {
                                   uadd(gu, j, i + 1, w / hxe);
                                   uadd(gu, j, i, -w / hxe);
                               } else {
                                   uadd(gu, j, i, 0.5 * w / hxw);
                                   uadd(gu, j, i - 1, -0.5 * w / hxw);
                                   uadd(gu, j, i + 1, 0.5 * w / hxe);
                                   uadd(gu, j, i, -0.5 * w / hxe);
                               }
                           };
                           auto slope_adj_y = [&](double w) {
                               if (scheme == AdvectionScheme::Central2) {
                                   uadd(gu, j + 1, i, w / (hys + hyn));
                                   uadd(gu, j - 1, i, -w / (hys + hyn));
                               } else if (vv > 0.0) {
                                   uadd(gu, j, i, w / hys);
                                   uadd(gu, j - 1, i, -w / hys);
                               } else if (vv < 0.0) {
                                   uadd(gu, j + 1, i, w / hyn);
                                   uadd(gu, j, i, -w / hyn);
                               } else {
                                   uadd(gu, j, i, 0.5 * w / hys);
                                   uadd(gu, j - 1, i, -0.5 * w / hys);
                                   uadd(gu, j + 1, i, 0.5 * w / hyn);
                                   uadd(gu, j, i, -0.5 * w / hyn);
                               }
                           };
                           slope_adj_x(-s * uu);
                           slope_adj_y(-s * vv);
                           // Diffusion: nu * (2(fwd_x-bwd_x)/(hxe+hxw) + ...).
                           const double cx = s * nu * 2.0 / (hxe + hxw);
                           uadd(gu, j, i + 1, cx / hxe);
                           uadd(gu, j, i, -cx / hxe);
                           uadd(gu, j, i, -cx / hxw);
                           uadd(gu, j, i - 1, cx / hxw);
                           const double cy = s * nu * 2.0 / (hyn + hys);
                           uadd(gu, j + 1, i, cy / hyn);
                           uadd(gu, j, i, -cy / hyn);
                           uadd(gu, j, i, -cy / hys);
                           uadd(gu, j - 1, i, cy / hys);
                       }
                   }
               }

               if (gv_out) {
                   for (int j = 1; j < ny; ++j) {
                       for (int i = 0; i < nx; ++i) {
                           const double go = gv_out->data[static_cast<size_t>(j) * nx + i];
                           if (go == 0.0) continue;
                           const double s = dt * go;
                           const double vv = vval(v, j, i);
                           const double uu = 0.25 * (uval(u, j - 1, i) + uval(u, j - 1, i + 1) +
                                                     uval(u, j, i) + uval(u, j, i + 1));
                           const double hxw = (i == 0) ? g.dx(0) : g.xc(i) - g.xc(i - 1);
                           const double hxe =
                               (i == nx - 1) ? g.dx(nx - 1) : g.xc(i + 1) - g.xc(i);
                           const double bwd_x = (vval(v, j, i) - vval(v, j, i - 1)) / hxw;
                           const double fwd_x = (vval(v, j, i + 1) - vval(v, j, i)) / hxe;
                           const double cen_x =
                               (vval(v, j, i + 1) - vval(v, j, i - 1)) / (hxw + hxe);
                           const double hys = g.yf(j) - g.yf(j - 1);
                           const double hyn = g.yf(j + 1) - g.yf(j);
                           const double bwd_y = (vval(v, j, i) - vval(v, j - 1, i)) / hys;
                           const double fwd_y = (vval(v, j + 1, i) - vval(v, j, i)) / hyn;
                           const double cen_y =
                               (vval(v, j + 1, i) - vval(v, j - 1, i)) / (hys + hyn);
                           const double dvdx = slope_select(uu, bwd_x, fwd_x, cen_x, scheme);
                           const double dvdy = slope_select(vv, bwd_y, fwd_y, cen_y, scheme);

                           const double guu = -s * dvdx * 0.25;
                           uadd(gu, j - 1, i, guu);
                           uadd(gu, j - 1, i + 1, guu);
                           uadd(gu, j, i, guu);
                           uadd(gu, j, i + 1, guu);
                           vadd(gv, j, i, -s * dvdy);
                           auto slope_adj_x = [&](double w) {
                               if (scheme == AdvectionScheme::Central2) {
                                   vadd(gv, j, i + 1, w / (hxw + hxe));
                                   vadd(gv, j, i - 1, -w / (hxw + hxe));
                               } else if (uu > 0.0) {
                                   vadd(gv, j, i, w / hxw);
                                   vadd(gv, j, i - 1, -w / hxw);
                               } else if (uu < 0.0) {
                                   vadd(gv, j, i + 1, w / hxe);
                                   vadd(gv, j, i, -w / hxe);
                               } else {
                                   vadd(gv, j, i, 0.5 * w / hxw);
                                   vadd(gv, j, i - 1, -0.5 * w / hxw);
                                   vadd(gv, j, i + 1, 0.5 * w / hxe);
                                   vadd(gv, j, i, -0.5 * w / hxe);
                               }
                           };
                           auto slope_adj_y = [&](double w) {
                               if (scheme == AdvectionScheme::Central2) {
                                   vadd(gv, j + 1, i, w / (hys + hyn));
                                   vadd(gv, j - 1, i, -w / (hys + hyn));
                               } else if (vv > 0.0) {
                                   vadd(gv, j, i, w / hys);
                                   vadd(gv, j - 1, i, -w / hys);
                               } else if (vv < 0.0) {
                                   vadd(gv, j + 1, i, w / hyn);
                                   vadd(gv, j, i, -w / hyn);
                               } else {
                                   vadd(gv, j, i, 0.5 * w / hys);
                                   vadd(gv, j - 1, i, -0.5 * w / hys);
                                   vadd(gv, j + 1, i, 0.5 * w / hyn);
                                   vadd(gv, j, i, -0.5 * w / hyn);
                               }
                           };
                           slope_adj_x(-s * uu);
                           slope_adj_y(-s * vv);
                           const double cx = s * nu * 2.0 / (hxe + hxw);
                           vadd(gv, j, i + 1, cx / hxe);
                           vadd(gv, j, i, -cx / hxe);
                           vadd(gv, j, i, -cx / hxw);
                           vadd(gv, j, i - 1, cx / hxw);
                           const double cy = s * nu * 2.0 / (hyn + hys);
                           vadd(gv, j + 1, i, cy / hyn);
                           vadd(gv, j, i, -cy / hyn);
                           vadd(gv, j, i, -cy / hys);
                           vadd(gv, j - 1, i, cy / hys);
                       }
                   }
               }
               tp.add_grad(in.u, gu);
               tp.add_grad(in.v, gv);
           });
    return {ou, ov};
}

FieldVars op_enforce_bc(Tape& t, FieldVars in, const Grid& g, const DomainBC& bc) {
    const Tensor& u = t.val(in.u);
    const Tensor& v = t.val(in.v);
    const int nx = g.nx(), ny = g.ny();
    Tensor uo = u, vo = v;
    for (int j = 0; j < ny; ++j) {
        uo.data[static_cast<size_t>(j) * (nx + 1)] = bc.u_inlet;
        uo.data[static_cast<size_t>(j) * (nx + 1) + nx] =
            u.data[static_cast<size_t>(j) * (nx + 1) + nx - 1];
    }
    for (int i = 0; i < nx; ++i) {
        vo.data[i] = 0.0;
        vo.data[static_cast<size_t>(ny) * nx + i] = 0.0;
    }
    const int id = static_cast<int>(t.num_nodes());
    const Var ou{id, 0}, ov{id, 1};
    t.emit({in.u, in.v}, {std::move(uo), std::move(vo)}, [ou, ov, in, nx, ny](Tape& tp) {
        const Tensor* gu_out = tp.maybe_grad(ou);
        const Tensor* gv_out = tp.maybe_grad(ov);
        if (gu_out) {
            Tensor gu(1, 1, ny, nx + 1);
            for (int j = 0; j < ny; ++j) {
                for (int i = 1; i < nx; ++i)
                    gu.data[static_cast<size_t>(j) * (nx + 1) + i] =
                        gu_out->data[static_cast<size_t>(j) * (nx + 1) + i];
                gu.data[static_cast<size_t>(j) * (nx + 1) + nx - 1] +=
                    gu_out->data[static_cast<size_t>(j) * (nx + 1) + nx];
            }
            tp.add_grad(in.u, gu);
        }
        if (gv_out) {
            Tensor gv(1, 1, ny + 1, nx);
            for (int j = 1; j < ny; ++j)
                for (int i = 0; i < nx; ++i)
                    gv.data[static_cast<size_t>(j) * nx + i] =
                        gv_out->data[static_cast<size_t>(j) * nx + i];
            tp.add_grad(in.v, gv);
        }
    });
    return {ou, ov};
}

Var op_face_to_center(Tape& t, FieldVars in, const Grid& g) {
    const Tensor& u = t.val(in.u);
    const Tensor& v = t.val(in.v);
    const int nx = g.nx(), ny = g.ny();
    Tensor out(1, 2, ny, nx);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            out.at(0, 0, j, i) = 0.5 * (u.data[static_cast<size_t>(j) * (nx + 1) + i] +
                                        u.data[static_cast<size_t>(j) * (nx + 1) + i + 1]);
            out.at(0, 1, j, i) = 0.5 * (v.data[static_cast<size_t>(j) * nx + i] +
                                        v.data[static_cast<size_t>(j + 1) * nx + i]);
        }
    const Var self{static_cast<int>(t.num_nodes()), 0};
    t.emit({in.u, in.v}, {std::move(out)}, [self, in, nx, ny](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        Tensor gu(1, 1, ny, nx + 1), gv(1, 1, ny + 1, nx);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double g0 = 0.5 * g->at(0, 0, j, i);
                gu.data[static_cast<size_t>(j) * (nx + 1) + i] += g0;
                gu.data[static_cast<size_t>(j) * (nx + 1) + i + 1] += g0;
                const double g1 = 0.5 * g->at(0, 1, j, i);
                gv.data[static_cast<size_t>(j) * nx + i] += g1;
                gv.data[static_cast<size_t>(j + 1) * nx + i] += g1;
            }
        tp.add_grad(in.u, gu);
        tp.add_grad(in.v, gv);
    });
    return self;
}

FieldVars op_center_to_face(Tape& t, Var centers, const Grid& g) {
    const Tensor& c = t.val(centers);
    const int nx = g.nx(), ny = g.ny();
    require(c.c == 2 && c.h == ny && c.w == nx, "center_to_face: expects a 2-channel raster");
    Tensor uo(1, 1, ny, nx + 1), vo(1, 1, ny + 1, nx);
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i)
            uo.data[static_cast<size_t>(j) * (nx + 1) + i] =
                0.5 * (c.at(0, 0, j, i - 1) + c.at(0, 0, j, i));
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            vo.data[static_cast<size_t>(j) * nx + i] =
                0.5 * (c.at(0, 1, j - 1, i) + c.at(0, 1, j, i));
    const int id = static_cast<int>(t.num_nodes());
    const Var ou{id, 0}, ov{id, 1};
    t.emit({centers}, {std::move(uo), std::move(vo)}, [ou, ov, centers, nx, ny](Tape& tp) {
        const Tensor* gu = tp.maybe_grad(ou);
        const Tensor* gv = tp.maybe_grad(ov);
        Tensor gc(1, 2, ny, nx);
        if (gu)
            for (int j = 0; j < ny; ++j)
                for (int i = 1; i < nx; ++i) {
                    const double g0 = 0.5 * gu->data[static_cast<size_t>(j) * (nx + 1) + i];
                    gc.at(0, 0, j, i - 1) += g0;
                    gc.at(0, 0, j, i) += g0;
                }
        if (gv)
            for (int j = 1; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    const double g1 = 0.5 * gv->data[static_cast<size_t>(j) * nx + i];
                    gc.at(0, 1, j - 1, i) += g1;
                    gc.at(0, 1, j, i) += g1;
                }
        tp.add_grad(centers, gc);
    });
    return {ou, ov};
}

Var op_divergence(Tape& t, FieldVars in, const Grid& g) {
    const Tensor& u = t.val(in.u);
    const Tensor& v = t.val(in.v);
    const int nx = g.nx(), ny = g.ny();
    Tensor out(1, 1, ny, nx);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out.at(0, 0, j, i) =
                (u.data[static_cast<size_t>(j) * (nx + 1) + i + 1] -
                 u.data[static_cast<size_t>(j) * (nx + 1) + i]) / g.dx(i) +
                (v.data[static_cast<size_t>(j + 1) * nx + i] -
                 v.data[static_cast<size_t>(j) * nx + i]) / g.dy(j);
    const Var self{static_cast<int>(t.num_nodes()), 0};
    const Grid* gp = &g;
    t.emit({in.u, in.v}, {std::move(out)}, [self, in, gp, nx, ny](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        Tensor gu(1, 1, ny, nx + 1), gv(1, 1, ny + 1, nx);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double gd = g->at(0, 0, j, i);
                if (gd == 0.0) continue;
                gu.data[static_cast<size_t>(j) * (nx + 1) + i + 1] += gd / gp->dx(i);
                gu.data[static_cast<size_t>(j) * (nx + 1) + i] -= gd / gp->dx(i);
                gv.data[static_cast<size_t>(j + 1) * nx + i] += gd / gp->dy(j);
                gv.data[static_cast<size_t>(j) * nx + i] -= gd / gp->dy(j);
            }
        tp.add_grad(in.u, gu);
        tp.add_grad(in.v, gv);
    });
    return self;
}

FieldVars op_upsample(Tape& t, FieldVars coarse, const Grid& cg, const Grid& fg, int factor) {
    const Tensor& cu = t.val(coarse.u);
    const Tensor& cv = t.val(coarse.v);
    const int NX = cg.nx(), NY = cg.ny();
    require(fg.nx() == NX * factor && fg.ny() == NY * factor, "upsample: grid factor mismatch");
    const int s = factor;

    // Precomputed 1D weights (shared by forward and adjoint).
    std::vector<LinWeight> wy_u(fg.ny()), wx_v(fg.nx());
    for (int j = 0; j < fg.ny(); ++j) wy_u[j] = center_weight(cg.yc(), fg.yc(j));
    for (int i = 0; i < fg.nx(); ++i) wx_v[i] = center_weight(cg.xc(), fg.xc(i));

    Tensor fu(1, 1, fg.ny(), fg.nx() + 1), fv(1, 1, fg.ny() + 1, fg.nx());
    for (int j = 0; j < fg.ny(); ++j) {
        const LinWeight wy = wy_u[j];
        for (int i = 0; i <= fg.nx(); ++i) {
            const int I0 = std::min(i / s, NX - 1);
            const double tx = static_cast<double>(i - I0 * s) / s;
            const double a =
                (1.0 - wy.t) * cu.at(0, 0, wy.i0, I0) + wy.t * cu.at(0, 0, wy.i0 + 1, I0);
            const double b = (1.0 - wy.t) * cu.at(0, 0, wy.i0, I0 + 1) +
                             wy.t * cu.at(0, 0, wy.i0 + 1, I0 + 1);
            fu.at(0, 0, j, i) = (1.0 - tx) * a + tx * b;
        }
    }
    for (int j = 0; j <= fg.ny(); ++j) {
        const int J0 = std::min(j / s, NY - 1);
        const double ty = static_cast<double>(j - J0 * s) / s;
        for (int i = 0; i < fg.nx(); ++i) {
            const LinWeight wx = wx_v[i];
            const double a =
                (1.0 - wx.t) * cv.at(0, 0, J0, wx.i0) + wx.t * cv.at(0, 0, J0, wx.i0 + 1);
            const double b = (1.0 - wx.t) * cv.at(0, 0, J0 + 1, wx.i0) +
                             wx.t * cv.at(0, 0, J0 + 1, wx.i0 + 1);
            fv.at(0, 0, j, i) = (1.0 - ty) * a + ty * b;
        }
    }

    const int id = static_cast<int>(t.num_nodes());
    const Var ou{id, 0}, ov{id, 1};
    const int fny = fg.ny(), fnx = fg.nx();
    t.emit({coarse.u, coarse.v}, {std::move(fu), std::move(fv)},
           [ou, ov, coarse, wy_u, wx_v, s, NX, NY, fny, fnx](Tape& tp) {
               const Tensor* gfu = tp.maybe_grad(ou);
               const Tensor* gfv = tp.maybe_grad(ov);
               Tensor gcu(1, 1, NY, NX + 1), gcv(1, 1, NY + 1, NX);
               if (gfu)
                   for (int j = 0; j < fny; ++j) {
                       const LinWeight wy = wy_u[j];
                       for (int i = 0; i <= fnx; ++i) {
                           const double g = gfu->at(0, 0, j, i);
                           if (g == 0.0) continue;
                           const int I0 = std::min(i / s, NX - 1);
                           const double tx = static_cast<double>(i - I0 * s) / s;
                           gcu.at(0, 0, wy.i0, I0) += g * (1.0 - tx) * (1.0 - wy.t);
                           gcu.at(0, 0, wy.i0 + 1, I0) += g * (1.0 - tx) * wy.t;
                           gcu.at(0, 0, wy.i0, I0 + 1) += g * tx * (1.0 - wy.t);
                           gcu.at(0, 0, wy.i0 + 1, I0 + 1) += g * tx * wy.t;
                       }
                   }
               if (gfv)
                   for (int j = 0; j <= fny; ++j) {
                       const int J0 = std::min(j / s, NY - 1);
                       const double ty = static_cast<double>(j - J0 * s) / s;
                       for (int i = 0; i < fnx; ++i) {
                           const double g = gfv->at(0, 0, j, i);
                           if (g == 0.0) continue;
                           const LinWeight wx = wx_v[i];
                           gcv.at(0, 0, J0, wx.i0) += g * (1.0 - ty) * (1.0 - wx.t);
                           gcv.at(0, 0, J0, wx.i0 + 1) += g * (1.0 - ty) * wx.t;
                           gcv.at(0, 0, J0 + 1, wx.i0) += g * ty * (1.0 - wx.t);
                           gcv.at(0, 0, J0 + 1, wx.i0 + 1) += g * ty * wx.t;
                       }
                   }
               tp.add_grad(coarse.u, gcu);
               tp.add_grad(coarse.v, gcv);
           });
    return {ou, ov};
}

FieldVars op_downsample(Tape& t, FieldVars fine, const DownsampleMap& map) {
    const Tensor& fu = t.val(fine.u);
    const Tensor& fv = t.val(fine.v);
    const Grid& fg = *map.fine;
    const Grid& cg = *map.coarse;
    const int NX = cg.nx(), NY = cg.ny();
    require(fu.h == fg.ny() && fu.w == fg.nx() + 1, "downsample: fine shape mismatch");

    Tensor cu(1, 1, NY, NX + 1), cv(1, 1, NY + 1, NX);
    for (int J = 0; J < NY; ++J) {
        const int j0 = map.yface[J], j1 = map.yface[J + 1];
        double den = 0.0;
        for (int j = j0; j < j1; ++j) den += fg.dy(j);
        for (int I = 0; I <= NX; ++I) {
            const int fi = map.xface[I];
            double acc = 0.0;
            for (int j = j0; j < j1; ++j) acc += (fg.dy(j) / den) * fu.at(0, 0, j, fi);
            cu.at(0, 0, J, I) = acc;
        }
    }
    for (int J = 0; J <= NY; ++J) {
        const int fj = map.yface[J];
        for (int I = 0; I < NX; ++I) {
            const int i0 = map.xface[I], i1 = map.xface[I + 1];
            double den = 0.0;
            for (int i = i0; i < i1; ++i) den += fg.dx(i);
            double acc = 0.0;
            for (int i = i0; i < i1; ++i) acc += (fg.dx(i) / den) * fv.at(0, 0, fj, i);
            cv.at(0, 0, J, I) = acc;
        }
    }

    const int id = static_cast<int>(t.num_nodes());
    const Var ou{id, 0}, ov{id, 1};
    const DownsampleMap* mp = &map;
    t.emit({fine.u, fine.v}, {std::move(cu), std::move(cv)}, [ou, ov, fine, mp](Tape& tp) {
        const Tensor* gcu = tp.maybe_grad(ou);
        const Tensor* gcv = tp.maybe_grad(ov);
        const Grid& fg = *mp->fine;
        const Grid& cg = *mp->coarse;
        const int NX = cg.nx(), NY = cg.ny();
        Tensor gfu(1, 1, fg.ny(), fg.nx() + 1), gfv(1, 1, fg.ny() + 1, fg.nx());
        if (gcu)
            for (int J = 0; J < NY; ++J) {
                const int j0 = mp->yface[J], j1 = mp->yface[J + 1];
                double den = 0.0;
                for (int j = j0; j < j1; ++j) den += fg.dy(j);
                for (int I = 0; I <= NX; ++I) {
                    const double g = gcu->at(0, 0, J, I);
                    if (g == 0.0) continue;
                    const int fi = mp->xface[I];
                    for (int j = j0; j < j1; ++j)
                        gfu.at(0, 0, j, fi) += g * fg.dy(j) / den;
                }
            }
        if (gcv)
            for (int J = 0; J <= NY; ++J) {
                const int fj = mp->yface[J];
                for (int I = 0; I < NX; ++I) {
                    const double g = gcv->at(0, 0, J, I);
                    if (g == 0.0) continue;
                    const int i0 = mp->xface[I], i1 = mp->xface[I + 1];
                    double den = 0.0;
                    for (int i = i0; i < i1; ++i) den += fg.dx(i);
                    for (int i = i0; i < i1; ++i)
                        gfv.at(0, 0, fj, i) += g * fg.dx(i) / den;
                }
            }
        tp.add_grad(fine.u, gfu);
        tp.add_grad(fine.v, gfv);
    });
    return {ou, ov};
}

Var op_interp_markers(Tape& t, FieldVars fine, const Grid& fg, const LagrangianBoundary& b) {
    const Tensor& fu = t.val(fine.u);
    const Tensor& fv = t.val(fine.v);
    const double h = marker_region_spacing(fg, b);
    const int N = b.n_markers();
    Tensor out(1, 2, N, 1);
    std::vector<KernelStamp> su(N), sv(N);
    for (int m = 0; m < N; ++m) {
        su[m] = make_stamp(fg.xf(), fg.yc(), b.x[m], b.y[m], h);
        sv[m] = make_stamp(fg.xc(), fg.yf(), b.x[m], b.y[m], h);
        double uu = 0.0, vv = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int c = 0; c < 4; ++c) {
                uu += fu.at(0, 0, su[m].j0 + a, su[m].i0 + c) * su[m].wy[a] * su[m].wx[c];
                vv += fv.at(0, 0, sv[m].j0 + a, sv[m].i0 + c) * sv[m].wy[a] * sv[m].wx[c];
            }
        out.at(0, 0, m, 0) = uu;
        out.at(0, 1, m, 0) = vv;
    }
    const Var self{static_cast<int>(t.num_nodes()), 0};
    const int fny = fg.ny(), fnx = fg.nx();
    t.emit({fine.u, fine.v}, {std::move(out)}, [self, fine, su, sv, N, fny, fnx](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        Tensor gfu(1, 1, fny, fnx + 1), gfv(1, 1, fny + 1, fnx);
        for (int m = 0; m < N; ++m) {
            const double g0 = g->at(0, 0, m, 0);
            const double g1 = g->at(0, 1, m, 0);
            for (int a = 0; a < 4; ++a)
                for (int c = 0; c < 4; ++c) {
                    gfu.at(0, 0, su[m].j0 + a, su[m].i0 + c) += g0 * su[m].wy[a] * su[m].wx[c];
                    gfv.at(0, 0, sv[m].j0 + a, sv[m].i0 + c) += g1 * sv[m].wy[a] * sv[m].wx[c];
                }
        }
        tp.add_grad(fine.u, gfu);
        tp.add_grad(fine.v, gfv);
    });
    return self;
}

FieldVars op_spread(Tape& t, Var marker_f, const Grid& fg, const LagrangianBoundary& b) {
    const Tensor& mf = t.val(marker_f);
    const int N = b.n_markers();
    require(mf.c == 2 && mf.h == N, "spread: expects a (1,2,N,1) marker tensor");
    require(!b.ds.empty(), "spread: boundary measure not bound");
    const double h = marker_region_spacing(fg, b);
    const double h2 = h * h;

    std::vector<KernelStamp> su(N), sv(N);
    Tensor fu(1, 1, fg.ny(), fg.nx() + 1), fv(1, 1, fg.ny() + 1, fg.nx());
    for (int m = 0; m < N; ++m) {
        su[m] = make_stamp(fg.xf(), fg.yc(), b.x[m], b.y[m], h);
        sv[m] = make_stamp(fg.xc(), fg.yf(), b.x[m], b.y[m], h);
        const double cu = mf.at(0, 0, m, 0) * b.ds[m] / h2;
        const double cv = mf.at(0, 1, m, 0) * b.ds[m] / h2;
        for (int a = 0; a < 4; ++a)
            for (int c = 0; c < 4; ++c) {
                fu.at(0, 0, su[m].j0 + a, su[m].i0 + c) += cu * su[m].wy[a] * su[m].wx[c];
                fv.at(0, 0, sv[m].j0 + a, sv[m].i0 + c) += cv * sv[m].wy[a] * sv[m].wx[c];
            }
    }
    const int id = static_cast<int>(t.num_nodes());
    const Var ou{id, 0}, ov{id, 1};
    const std::vector<double> ds = b.ds;
    t.emit({marker_f}, {std::move(fu), std::move(fv)},
           [ou, ov, marker_f, su, sv, ds, h2, N](Tape& tp) {
               const Tensor* gfu = tp.maybe_grad(ou);
               const Tensor* gfv = tp.maybe_grad(ov);
               Tensor gm(1, 2, N, 1);
               for (int m = 0; m < N; ++m) {
                   const double w = ds[m] / h2;
                   double s0 = 0.0, s1 = 0.0;
                   for (int a = 0; a < 4; ++a)
                       for (int c = 0; c < 4; ++c) {
                           if (gfu)
                               s0 += gfu->at(0, 0, su[m].j0 + a, su[m].i0 + c) * su[m].wy[a] *
                                     su[m].wx[c];
                           if (gfv)
                               s1 += gfv->at(0, 0, sv[m].j0 + a, sv[m].i0 + c) * sv[m].wy[a] *
                                     sv[m].wx[c];
                       }
                   gm.at(0, 0, m, 0) = s0 * w;
                   gm.at(0, 1, m, 0) = s1 * w;
               }
               tp.add_grad(marker_f, gm);
           });
    return {ou, ov};
}

Var op_marker_total(Tape& t, Var marker_f, const LagrangianBoundary& b, double sign) {
    const Tensor& mf = t.val(marker_f);
    const int N = b.n_markers();
    require(mf.c == 2 && mf.h == N, "marker_total: expects a (1,2,N,1) marker tensor");
    Tensor out(1, 2, 1, 1);
    for (int m = 0; m < N; ++m) {
        out.at(0, 0, 0, 0) += sign * mf.at(0, 0, m, 0) * b.ds[m];
        out.at(0, 1, 0, 0) += sign * mf.at(0, 1, m, 0) * b.ds[m];
    }
    const Var self{static_cast<int>(t.num_nodes()), 0};
    const std::vector<double> ds = b.ds;
    t.emit({marker_f}, {std::move(out)}, [self, marker_f, ds, sign, N](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        Tensor gm(1, 2, N, 1);
        for (int m = 0; m < N; ++m) {
            gm.at(0, 0, m, 0) = sign * ds[m] * g->at(0, 0, 0, 0);
            gm.at(0, 1, m, 0) = sign * ds[m] * g->at(0, 1, 0, 0);
        }
        tp.add_grad(marker_f, gm);
    });
    return self;
}

} // namespace ibflow

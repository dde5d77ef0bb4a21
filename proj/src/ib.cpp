#include "ibflow/ib.hpp"

#include <algorithm>
#include <cmath>

namespace ibflow {

double phi3(double r) {
    require(r >= 0.0, "phi3: normalized distance must be non-negative");
    if (r < 0.5) return (1.0 + std::sqrt(1.0 - 3.0 * r * r)) / 3.0;
    if (r < 1.5) return (5.0 - 3.0 * r - std::sqrt(-2.0 + 6.0 * r - 3.0 * r * r)) / 6.0;
    return 0.0;
}

double delta_h(double dx_, double dy_, double h) {
    require(h > 0.0, "delta_h: spacing must be positive");
    return phi3(std::abs(dx_) / h) * phi3(std::abs(dy_) / h) / (h * h);
}

LagrangianBoundary cylinder_markers(double diameter, int n_markers, double cx, double cy) {
    require(diameter > 0.0 && n_markers >= 3, "cylinder needs a positive diameter and >= 3 markers");
    LagrangianBoundary b;
    b.cx = cx;
    b.cy = cy;
    b.radius = 0.5 * diameter;
    b.x.resize(n_markers);
    b.y.resize(n_markers);
    const double two_pi = 2.0 * M_PI;
    for (int k = 0; k < n_markers; ++k) {
        const double th = two_pi * k / n_markers;
        b.x[k] = cx + b.radius * std::cos(th);
        b.y[k] = cy + b.radius * std::sin(th);
    }
    b.arc_spacing = M_PI * diameter / n_markers;
    return b;
}

void bind_measure(LagrangianBoundary& b, double h) {
    require(h > 0.0, "boundary measure needs a positive grid spacing");
    b.ds.assign(b.n_markers(), h * b.arc_spacing);
}

double RotationSchedule::omega_at(double k) const {
    return omega_a * std::sin(2.0 * M_PI * f_r * k);
}

std::vector<Vec2> marker_targets(const LagrangianBoundary& b, const RotationSchedule& s,
                                 double k) {
    return marker_targets(b, s.omega_at(k));
}

std::vector<Vec2> marker_targets(const LagrangianBoundary& b, double omega) {
    std::vector<Vec2> t(b.n_markers());
    for (int m = 0; m < b.n_markers(); ++m)
        t[m] = {-omega * (b.y[m] - b.cy), omega * (b.x[m] - b.cx)};
    return t;
}

KernelStamp make_stamp(const std::vector<double>& xs, const std::vector<double>& ys, double X,
                       double Y, double h) {
    KernelStamp st;
    auto locate = [&](const std::vector<double>& c, double q) {
        auto it = std::upper_bound(c.begin(), c.end(), q);
        return static_cast<int>(it - c.begin()) - 1;  // last index with c[i] <= q
    };
    st.i0 = locate(xs, X) - 1;
    st.j0 = locate(ys, Y) - 1;
    if (st.i0 < 0 || st.j0 < 0 || st.i0 + 3 >= static_cast<int>(xs.size()) ||
        st.j0 + 3 >= static_cast<int>(ys.size()))
        throw ContractViolation("marker too close to the domain boundary for the kernel support");
    for (int a = 0; a < 4; ++a) {
        st.wx[a] = phi3(std::abs(xs[st.i0 + a] - X) / h);
        st.wy[a] = phi3(std::abs(ys[st.j0 + a] - Y) / h);
    }
    return st;
}

double marker_region_spacing(const Grid& g, const LagrangianBoundary& b) {
    require(b.n_markers() > 0, "boundary has no markers");
    double h = 0.0;
    for (int m = 0; m < b.n_markers(); ++m) {
        const double hx = g.dx(std::clamp(
            static_cast<int>(std::upper_bound(g.xf().begin(), g.xf().end(), b.x[m]) -
                             g.xf().begin()) - 1,
            0, g.nx() - 1));
        if (b.x[m] < g.xf().front() + 2.0 * hx || b.x[m] > g.xf().back() - 2.0 * hx ||
            b.y[m] < g.yf().front() + 2.0 * hx || b.y[m] > g.yf().back() - 2.0 * hx)
            throw ContractViolation("marker closer than 2h to the domain boundary");
    }
    for (int m = 0; m < b.n_markers(); ++m) {
        auto it = std::upper_bound(g.xf().begin(), g.xf().end(), b.x[m]);
        int ci = static_cast<int>(it - g.xf().begin()) - 1;
        ci = std::clamp(ci, 0, g.nx() - 1);
        auto jt = std::upper_bound(g.yf().begin(), g.yf().end(), b.y[m]);
        int cj = static_cast<int>(jt - g.yf().begin()) - 1;
        cj = std::clamp(cj, 0, g.ny() - 1);
        for (int d = -2; d <= 2; ++d) {
            const int i = std::clamp(ci + d, 0, g.nx() - 1);
            const int j = std::clamp(cj + d, 0, g.ny() - 1);
            if (h == 0.0) h = g.dx(i);
            if (std::abs(g.dx(i) - h) > 1e-9 * h || std::abs(g.dy(j) - h) > 1e-9 * h)
                throw ContractViolation("grid not locally uniform around the markers");
        }
    }
    return h;
}

std::vector<Vec2> interpolate_to_markers(const StaggeredField& f, const LagrangianBoundary& b) {
    const Grid& g = *f.grid;
    const double h = marker_region_spacing(g, b);
    std::vector<Vec2> out(b.n_markers());
    for (int m = 0; m < b.n_markers(); ++m) {
        const KernelStamp su = make_stamp(g.xf(), g.yc(), b.x[m], b.y[m], h);
        const KernelStamp sv = make_stamp(g.xc(), g.yf(), b.x[m], b.y[m], h);
        double uu = 0.0, vv = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int c = 0; c < 4; ++c) {
                uu += f.u(su.j0 + a, su.i0 + c) * su.wy[a] * su.wx[c];
                vv += f.v(sv.j0 + a, sv.i0 + c) * sv.wy[a] * sv.wx[c];
            }
        // delta_h carries 1/h^2 and the quadrature carries h^2; they cancel.
        out[m] = {uu, vv};
    }
    return out;
}

std::vector<Vec2> marker_forcing(const std::vector<Vec2>& targets,
                                 const std::vector<Vec2>& interpolated, double dt_learn) {
    require(dt_learn > 0.0, "marker forcing needs a positive time step");
    require(targets.size() == interpolated.size(), "marker count mismatch");
    std::vector<Vec2> f(targets.size());
    for (size_t m = 0; m < targets.size(); ++m)
        f[m] = {(targets[m].x - interpolated[m].x) / dt_learn,
                (targets[m].y - interpolated[m].y) / dt_learn};
    return f;
}

FaceVec spread_forcing(const std::vector<Vec2>& forces, const LagrangianBoundary& b,
                       const Grid& g) {
    require(static_cast<int>(forces.size()) == b.n_markers(), "marker count mismatch");
    require(!b.ds.empty(), "boundary measure not bound to a grid spacing");
    const double h = marker_region_spacing(g, b);
    const double h2 = h * h;
    FaceVec out(g);
    for (int m = 0; m < b.n_markers(); ++m) {
        const KernelStamp su = make_stamp(g.xf(), g.yc(), b.x[m], b.y[m], h);
        const KernelStamp sv = make_stamp(g.xc(), g.yf(), b.x[m], b.y[m], h);
        const double cu = forces[m].x * b.ds[m] / h2;
        const double cv = forces[m].y * b.ds[m] / h2;
        for (int a = 0; a < 4; ++a)
            for (int c = 0; c < 4; ++c) {
                out.u(su.j0 + a, su.i0 + c) += cu * su.wy[a] * su.wx[c];
                out.v(sv.j0 + a, sv.i0 + c) += cv * sv.wy[a] * sv.wx[c];
            }
    }
    return out;
}

Vec2 accumulate_force(const std::vector<std::vector<Vec2>>& forcing_history,
                      const std::vector<double>& ds) {
    Vec2 total;
    for (const auto& cycle : forcing_history) {
        require(cycle.size() == ds.size(), "marker count mismatch in forcing history");
        for (size_t m = 0; m < cycle.size(); ++m) {
            total.x -= cycle[m].x * ds[m];
            total.y -= cycle[m].y * ds[m];
        }
    }
    return total;
}

IBResult ib_correct(StaggeredField& f, const LagrangianBoundary& b,
                    const std::vector<Vec2>& targets, const IBConfig& cfg, double dt_learn,
                    long step_index) {
    require(cfg.sub_iterations >= 1, "need at least one forcing sub-iteration");
    IBResult res;
    std::vector<std::vector<Vec2>> history;
    history.reserve(cfg.sub_iterations);

    for (int m = 0; m < cfg.sub_iterations; ++m) {
        const std::vector<Vec2> interp = interpolate_to_markers(f, b);
        double r = 0.0;
        for (size_t k = 0; k < interp.size(); ++k)
            r = std::max(r, std::hypot(targets[k].x - interp[k].x, targets[k].y - interp[k].y));
        res.residuals.push_back(r);

        const std::vector<Vec2> forces = marker_forcing(targets, interp, dt_learn);
        const FaceVec body = spread_forcing(forces, b, *f.grid);
        for (int j = 0; j < f.u.rows(); ++j)
            for (int i = 0; i < f.u.cols(); ++i) f.u(j, i) += dt_learn * body.u(j, i);
        for (int j = 0; j < f.v.rows(); ++j)
            for (int i = 0; i < f.v.cols(); ++i) f.v(j, i) += dt_learn * body.v(j, i);
        history.push_back(forces);

        if (!f.u.all_finite() || !f.v.all_finite())
            throw DivergenceError("non-finite values in forcing sub-iteration " +
                                      std::to_string(m),
                                  step_index);
    }
    res.force = accumulate_force(history, b.ds);
    return res;
}

} // namespace ibflow

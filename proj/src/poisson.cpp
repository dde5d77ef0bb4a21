#include "ibflow/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ibflow/errors.hpp"

namespace ibflow {

namespace {

struct Level {
    int nx = 0, ny = 0;
    std::vector<double> dx, dy, xc, yc;
    Array2D gw, ge, gs, gn, diag, vol;
    mutable Array2D p, rhs, res;
    // Bilinear transfer tables to the next-coarser level: fine index ->
    // bracketing coarse index and weight; plus the restriction normalizer.
    std::vector<int> cx_i0, cy_j0;
    std::vector<double> cx_t, cy_t;
    Array2D rnorm;  // coarse-shaped: sum of w * vol over contributing fine cells
};

void assemble(Level& L, const PoissonBCSet& bc) {
    L.gw = Array2D(L.ny, L.nx);
    L.ge = Array2D(L.ny, L.nx);
    L.gs = Array2D(L.ny, L.nx);
    L.gn = Array2D(L.ny, L.nx);
    L.diag = Array2D(L.ny, L.nx);
    L.vol = Array2D(L.ny, L.nx);
    L.p = Array2D(L.ny, L.nx);
    L.rhs = Array2D(L.ny, L.nx);
    L.res = Array2D(L.ny, L.nx);

    for (int j = 0; j < L.ny; ++j) {
        for (int i = 0; i < L.nx; ++i) {
            double gw = 0.0, ge = 0.0, gs = 0.0, gn = 0.0;
            if (i > 0)
                gw = L.dy[j] / (L.xc[i] - L.xc[i - 1]);
            else if (bc.left == PressureBC::DirichletFace)
                gw = L.dy[j] / (0.5 * L.dx[0]);
            if (i < L.nx - 1)
                ge = L.dy[j] / (L.xc[i + 1] - L.xc[i]);
            else if (bc.right == PressureBC::DirichletFace)
                ge = L.dy[j] / (0.5 * L.dx[L.nx - 1]);
            if (j > 0)
                gs = L.dx[i] / (L.yc[j] - L.yc[j - 1]);
            else if (bc.bottom == PressureBC::DirichletFace)
                gs = L.dx[i] / (0.5 * L.dy[0]);
            if (j < L.ny - 1)
                gn = L.dx[i] / (L.yc[j + 1] - L.yc[j]);
            else if (bc.top == PressureBC::DirichletFace)
                gn = L.dx[i] / (0.5 * L.dy[L.ny - 1]);
            L.gw(j, i) = gw;
            L.ge(j, i) = ge;
            L.gs(j, i) = gs;
            L.gn(j, i) = gn;
            L.diag(j, i) = gw + ge + gs + gn;
            L.vol(j, i) = L.dx[i] * L.dy[j];
        }
    }
}

std::vector<double> coarsen_axis(const std::vector<double>& d) {
    std::vector<double> out;
    out.reserve((d.size() + 1) / 2);
    for (size_t i = 0; i < d.size(); i += 2) {
        double w = d[i];
        if (i + 1 < d.size()) w += d[i + 1];
        out.push_back(w);
    }
    return out;
}

void centers_from_spacings(const std::vector<double>& d, std::vector<double>& c) {
    c.resize(d.size());
    double x = 0.0;
    for (size_t i = 0; i < d.size(); ++i) {
        c[i] = x + 0.5 * d[i];
        x += d[i];
    }
}

// Alternating zebra line relaxation: stretched grids produce strongly
// anisotropic cells, where point relaxation fails to smooth along the strong
// coupling direction. Each line is a tridiagonal solve with the transverse
// neighbors frozen; even lines first, then odd.
void smooth_line_x(const Level& L, std::vector<double>& cp, std::vector<double>& dp) {
    cp.resize(L.nx);
    dp.resize(L.nx);
    for (int parity = 0; parity < 2; ++parity) {
        for (int j = parity; j < L.ny; j += 2) {
            // a p_{i-1} + b p_i + c p_{i+1} = d with b = -diag.
            double b0 = -L.diag(j, 0);
            if (b0 == 0.0) continue;  // isolated cell (1x1 all-Neumann bottom)
            double d0 = L.rhs(j, 0) * L.vol(j, 0);
            if (j > 0) d0 -= L.gs(j, 0) * L.p(j - 1, 0);
            if (j < L.ny - 1) d0 -= L.gn(j, 0) * L.p(j + 1, 0);
            cp[0] = L.ge(j, 0) / b0;
            dp[0] = d0 / b0;
            for (int i = 1; i < L.nx; ++i) {
                const double a = L.gw(j, i);
                const double b = -L.diag(j, i);
                double d = L.rhs(j, i) * L.vol(j, i);
                if (j > 0) d -= L.gs(j, i) * L.p(j - 1, i);
                if (j < L.ny - 1) d -= L.gn(j, i) * L.p(j + 1, i);
                double m = b - a * cp[i - 1];
                m = (m == 0.0) ? -1e300 : m;
                cp[i] = L.ge(j, i) / m;
                dp[i] = (d - a * dp[i - 1]) / m;
            }
            L.p(j, L.nx - 1) = dp[L.nx - 1];
            for (int i = L.nx - 2; i >= 0; --i) L.p(j, i) = dp[i] - cp[i] * L.p(j, i + 1);
        }
    }
}

// All columns solved simultaneously (lateral neighbors taken at the old
// iterate), which keeps the inner loops contiguous and vectorizable. The
// alternating x-line zebra pass supplies the lateral Gauss-Seidel coupling.
void smooth_line_y(const Level& L, Array2D& cp, Array2D& dp) {
    if (cp.rows() != L.ny || cp.cols() != L.nx) {
        cp = Array2D(L.ny, L.nx);
        dp = Array2D(L.ny, L.nx);
    }
    const int nx = L.nx, ny = L.ny;
    auto lateral = [&](int j, int i) {
        double d = L.rhs(j, i) * L.vol(j, i);
        if (i > 0) d -= L.gw(j, i) * L.p(j, i - 1);
        if (i < nx - 1) d -= L.ge(j, i) * L.p(j, i + 1);
        return d;
    };
    for (int i = 0; i < nx; ++i) {
        const double b0 = -L.diag(0, i);
        if (b0 == 0.0) {
            cp(0, i) = 0.0;
            dp(0, i) = L.p(0, i);
            continue;
        }
        cp(0, i) = L.gn(0, i) / b0;
        dp(0, i) = lateral(0, i) / b0;
    }
    for (int j = 1; j < ny; ++j) {
        const double* __restrict__ gs = L.gs.data() + static_cast<size_t>(j) * nx;
        const double* __restrict__ gn = L.gn.data() + static_cast<size_t>(j) * nx;
        const double* __restrict__ dg = L.diag.data() + static_cast<size_t>(j) * nx;
        const double* __restrict__ cprev = cp.data() + static_cast<size_t>(j - 1) * nx;
        const double* __restrict__ dprev = dp.data() + static_cast<size_t>(j - 1) * nx;
        double* __restrict__ crow = cp.data() + static_cast<size_t>(j) * nx;
        double* __restrict__ drow = dp.data() + static_cast<size_t>(j) * nx;
        for (int i = 0; i < nx; ++i) {
            double m = -dg[i] - gs[i] * cprev[i];
            m = (m == 0.0) ? -1e300 : m;  // fully singular column (pure gauge)
            crow[i] = gn[i] / m;
            drow[i] = (lateral(j, i) - gs[i] * dprev[i]) / m;
        }
    }
    for (int i = 0; i < nx; ++i) L.p(ny - 1, i) = dp(ny - 1, i);
    for (int j = ny - 2; j >= 0; --j) {
        const double* __restrict__ crow = cp.data() + static_cast<size_t>(j) * nx;
        const double* __restrict__ drow = dp.data() + static_cast<size_t>(j) * nx;
        double* __restrict__ prow = L.p.data() + static_cast<size_t>(j) * nx;
        const double* __restrict__ pnext = L.p.data() + static_cast<size_t>(j + 1) * nx;
        for (int i = 0; i < nx; ++i) prow[i] = drow[i] - crow[i] * pnext[i];
    }
}

void smooth(const Level& L) {
    thread_local std::vector<double> cx, dx;
    thread_local Array2D cy, dy;
    smooth_line_x(L, cx, dx);
    smooth_line_y(L, cy, dy);
}

void compute_residual(const Level& L) {
    for (int j = 0; j < L.ny; ++j) {
        for (int i = 0; i < L.nx; ++i) {
            double flux = -L.diag(j, i) * L.p(j, i);
            if (i > 0) flux += L.gw(j, i) * L.p(j, i - 1);
            if (i < L.nx - 1) flux += L.ge(j, i) * L.p(j, i + 1);
            if (j > 0) flux += L.gs(j, i) * L.p(j - 1, i);
            if (j < L.ny - 1) flux += L.gn(j, i) * L.p(j + 1, i);
            L.res(j, i) = L.rhs(j, i) - flux / L.vol(j, i);
        }
    }
}

double weighted_l2(const Array2D& a, const Array2D& vol) {
    double s = 0.0, w = 0.0;
    for (int j = 0; j < a.rows(); ++j)
        for (int i = 0; i < a.cols(); ++i) {
            s += a(j, i) * a(j, i) * vol(j, i);
            w += vol(j, i);
        }
    return std::sqrt(s / w);
}

} // namespace

struct MultigridPoisson::Impl {
    PoissonBCSet bc;
    std::vector<Level> levels;

    void vcycle(size_t l) const {
        const Level& L = levels[l];
        if (l + 1 == levels.size()) {
            for (int s = 0; s < 80; ++s) smooth(L);
            return;
        }
        smooth(L);
        compute_residual(L);

        const Level& C = levels[l + 1];
        C.p.fill(0.0);
        C.rhs.fill(0.0);
        for (int j = 0; j < L.ny; ++j) {
            const int J0 = L.cy_j0[j];
            const double ty = L.cy_t[j];
            const int J1 = std::min(J0 + 1, C.ny - 1);
            for (int i = 0; i < L.nx; ++i) {
                const int I0 = L.cx_i0[i];
                const double tx = L.cx_t[i];
                const int I1 = std::min(I0 + 1, C.nx - 1);
                const double rv = L.res(j, i) * L.vol(j, i);
                C.rhs(J0, I0) += (1 - ty) * (1 - tx) * rv;
                C.rhs(J0, I1) += (1 - ty) * tx * rv;
                C.rhs(J1, I0) += ty * (1 - tx) * rv;
                C.rhs(J1, I1) += ty * tx * rv;
            }
        }
        for (int J = 0; J < C.ny; ++J)
            for (int I = 0; I < C.nx; ++I) C.rhs(J, I) /= L.rnorm(J, I);
        vcycle(l + 1);

        // Bilinear prolongation on the physical cell centers.
        for (int j = 0; j < L.ny; ++j) {
            const int J0 = L.cy_j0[j];
            const double ty = L.cy_t[j];
            const int J1 = std::min(J0 + 1, C.ny - 1);
            const double* __restrict__ c0 = C.p.data() + static_cast<size_t>(J0) * C.nx;
            const double* __restrict__ c1 = C.p.data() + static_cast<size_t>(J1) * C.nx;
            double* __restrict__ prow = L.p.data() + static_cast<size_t>(j) * L.nx;
            for (int i = 0; i < L.nx; ++i) {
                const int I0 = L.cx_i0[i];
                const double tx = L.cx_t[i];
                const int I1 = std::min(I0 + 1, C.nx - 1);
                prow[i] += (1 - ty) * ((1 - tx) * c0[I0] + tx * c0[I1]) +
                           ty * ((1 - tx) * c1[I0] + tx * c1[I1]);
            }
        }
        smooth(L);
    }
};

MultigridPoisson::MultigridPoisson(const Grid& grid, PoissonBCSet bc)
    : impl_(std::make_unique<Impl>()) {
    impl_->bc = bc;
    Level fine;
    fine.nx = grid.nx();
    fine.ny = grid.ny();
    fine.dx = grid.dx();
    fine.dy = grid.dy();
    centers_from_spacings(fine.dx, fine.xc);
    centers_from_spacings(fine.dy, fine.yc);
    assemble(fine, bc);
    impl_->levels.push_back(std::move(fine));
    while (true) {
        const Level& prev = impl_->levels.back();
        if ((prev.nx <= 3 && prev.ny <= 3) || impl_->levels.size() >= 30) break;
        Level L;
        L.dx = coarsen_axis(prev.dx);
        L.dy = coarsen_axis(prev.dy);
        L.nx = static_cast<int>(L.dx.size());
        L.ny = static_cast<int>(L.dy.size());
        centers_from_spacings(L.dx, L.xc);
        centers_from_spacings(L.dy, L.yc);
        assemble(L, bc);
        impl_->levels.push_back(std::move(L));

        // Transfer tables fine -> this new coarse level.
        Level& F = impl_->levels[impl_->levels.size() - 2];
        Level& C = impl_->levels.back();
        auto build_axis_table = [](const std::vector<double>& fc, const std::vector<double>& cc,
                                   std::vector<int>& i0s, std::vector<double>& ts) {
            i0s.resize(fc.size());
            ts.resize(fc.size());
            const int n = static_cast<int>(cc.size());
            for (size_t k = 0; k < fc.size(); ++k) {
                auto it = std::upper_bound(cc.begin(), cc.end(), fc[k]);
                int i0 = std::clamp(static_cast<int>(it - cc.begin()) - 1, 0, std::max(n - 2, 0));
                double t = (n > 1) ? std::clamp((fc[k] - cc[i0]) / (cc[i0 + 1] - cc[i0]), 0.0, 1.0)
                                   : 0.0;
                i0s[k] = i0;
                ts[k] = t;
            }
        };
        build_axis_table(F.xc, C.xc, F.cx_i0, F.cx_t);
        build_axis_table(F.yc, C.yc, F.cy_j0, F.cy_t);
        F.rnorm = Array2D(C.ny, C.nx);
        for (int j = 0; j < F.ny; ++j) {
            const int J0 = F.cy_j0[j];
            const double ty = F.cy_t[j];
            const int J1 = std::min(J0 + 1, C.ny - 1);
            for (int i = 0; i < F.nx; ++i) {
                const int I0 = F.cx_i0[i];
                const double tx = F.cx_t[i];
                const int I1 = std::min(I0 + 1, C.nx - 1);
                const double v = F.vol(j, i);
                F.rnorm(J0, I0) += (1 - ty) * (1 - tx) * v;
                F.rnorm(J0, I1) += (1 - ty) * tx * v;
                F.rnorm(J1, I0) += ty * (1 - tx) * v;
                F.rnorm(J1, I1) += ty * tx * v;
            }
        }
    }
}

MultigridPoisson::~MultigridPoisson() = default;
MultigridPoisson::MultigridPoisson(MultigridPoisson&&) noexcept = default;
MultigridPoisson& MultigridPoisson::operator=(MultigridPoisson&&) noexcept = default;

Array2D MultigridPoisson::residual(const Array2D& rhs, const Array2D& p) const {
    const Level& L = impl_->levels.front();
    require(rhs.rows() == L.ny && rhs.cols() == L.nx, "poisson: rhs shape mismatch");
    L.p = p;
    L.rhs = rhs;
    compute_residual(L);
    return L.res;
}

PoissonStats MultigridPoisson::solve(const Array2D& rhs, Array2D& p, double tol,
                                     int max_cycles) const {
    const Level& L = impl_->levels.front();
    require(rhs.rows() == L.ny && rhs.cols() == L.nx, "poisson: rhs shape mismatch");
    require(p.rows() == L.ny && p.cols() == L.nx, "poisson: solution shape mismatch");
    require(tol > 0.0, "poisson: tolerance must be positive");

    const bool gauge_free = impl_->bc.all_neumann();
    const size_t n = rhs.size();
    double total_vol = 0.0;
    for (int j = 0; j < L.ny; ++j)
        for (int i = 0; i < L.nx; ++i) total_vol += L.vol(j, i);

    auto vdot = [&](const Array2D& a, const Array2D& b) {
        double acc = 0.0;
        const double* __restrict__ pa = a.data();
        const double* __restrict__ pb = b.data();
        const double* __restrict__ pv = L.vol.data();
        for (size_t k = 0; k < n; ++k) acc += pa[k] * pb[k] * pv[k];
        return acc;
    };
    auto project_gauge = [&](Array2D& a) {
        if (!gauge_free) return;
        double mean = 0.0;
        for (size_t k = 0; k < n; ++k) mean += a.data()[k] * L.vol.data()[k];
        mean /= total_vol;
        for (size_t k = 0; k < n; ++k) a.data()[k] -= mean;
    };
    auto apply_op = [&](const Array2D& x, Array2D& out) {
        L.p = x;
        L.rhs.fill(0.0);
        compute_residual(L);  // res = -A x
        for (size_t k = 0; k < n; ++k) out.data()[k] = -L.res.data()[k];
    };

    Array2D b = rhs;
    project_gauge(b);
    const double bnorm = std::sqrt(std::max(vdot(b, b) / total_vol, 0.0));

    // Residual of the warm start.
    Array2D r(L.ny, L.nx), q(L.ny, L.nx);
    apply_op(p, q);
    for (size_t k = 0; k < n; ++k) r.data()[k] = b.data()[k] - q.data()[k];
    project_gauge(r);

    PoissonStats st;
    const double floor_ = 1e-300;
    Array2D z(L.ny, L.nx), d(L.ny, L.nx), r_old(L.ny, L.nx);
    double rz_old = 0.0;
    bool have_dir = false;

    for (int it = 0; it <= max_cycles; ++it) {
        const double rnorm = std::sqrt(std::max(vdot(r, r) / total_vol, 0.0));
        st.cycles = it;
        st.rel_residual = (bnorm > floor_) ? rnorm / bnorm : rnorm;
        if (st.rel_residual <= tol) {
            project_gauge(p);
            return st;
        }
        if (it == max_cycles) break;

        // Preconditioner: one V-cycle on the residual equation.
        L.rhs = r;
        L.p.fill(0.0);
        impl_->vcycle(0);
        z = L.p;
        project_gauge(z);

        // Flexible CG (Polak-Ribiere form tolerates the nonsymmetric sweep
        // ordering inside the preconditioner).
        double rz = vdot(r, z);
        double beta = 0.0;
        if (have_dir) {
            double zr_old = 0.0;
            const double* __restrict__ pz = z.data();
            const double* __restrict__ pr = r.data();
            const double* __restrict__ po = r_old.data();
            const double* __restrict__ pv = L.vol.data();
            for (size_t k = 0; k < n; ++k) zr_old += pz[k] * (pr[k] - po[k]) * pv[k];
            beta = (std::abs(rz_old) > floor_) ? zr_old / rz_old : 0.0;
            if (!(beta > -1e12 && beta < 1e12)) beta = 0.0;
        }
        if (!have_dir || beta == 0.0) {
            d = z;
        } else {
            for (size_t k = 0; k < n; ++k) d.data()[k] = z.data()[k] + beta * d.data()[k];
        }
        apply_op(d, q);
        const double dq = vdot(d, q);
        if (std::abs(dq) < floor_) break;
        const double alpha = rz / dq;
        r_old = r;
        for (size_t k = 0; k < n; ++k) {
            p.data()[k] += alpha * d.data()[k];
            r.data()[k] -= alpha * q.data()[k];
        }
        project_gauge(r);
        rz_old = rz;
        have_dir = true;
    }
    throw ConvergenceError("pressure Poisson solve did not converge", st.rel_residual);
}

} // namespace ibflow

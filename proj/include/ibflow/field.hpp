#pragma once

#include "ibflow/array2d.hpp"
#include "ibflow/grid.hpp"

namespace ibflow {

/// Fluid properties and reference scales.
struct FluidParams {
    double rho = 1.0;    // density
    double nu = 0.01;    // kinematic viscosity
    double u_inf = 1.0;  // inflow speed
    double diameter = 1.0;

    double reynolds() const { return u_inf * diameter / nu; }
};

/// Domain boundary conditions: Dirichlet inflow on the left, zero-normal-gradient
/// outflow on the right, free-slip top and bottom.
struct DomainBC {
    double u_inlet = 1.0;
};

/// Velocity + pressure state on a staggered MAC grid.
struct StaggeredField {
    const Grid* grid = nullptr;
    Array2D u;  // ny x (nx+1)
    Array2D v;  // (ny+1) x nx
    Array2D p;  // ny x nx

    StaggeredField() = default;
    explicit StaggeredField(const Grid& g)
        : grid(&g), u(g.ny(), g.nx() + 1), v(g.ny() + 1, g.nx()), p(g.ny(), g.nx()) {}

    bool shapes_consistent() const {
        if (!grid) return false;
        return u.rows() == grid->ny() && u.cols() == grid->nx() + 1 &&
               v.rows() == grid->ny() + 1 && v.cols() == grid->nx() &&
               p.rows() == grid->ny() && p.cols() == grid->nx();
    }

    bool all_finite() const { return u.all_finite() && v.all_finite() && p.all_finite(); }

    void fill(double uu, double vv, double pp = 0.0) {
        u.fill(uu);
        v.fill(vv);
        p.fill(pp);
    }

    double max_velocity() const { return std::max(u.max_abs(), v.max_abs()); }
};

/// Face-valued vector quantity (e.g. convective or diffusive terms), laid out
/// like the velocity components of a StaggeredField.
struct FaceVec {
    Array2D u;  // ny x (nx+1)
    Array2D v;  // (ny+1) x nx

    FaceVec() = default;
    explicit FaceVec(const Grid& g) : u(g.ny(), g.nx() + 1), v(g.ny() + 1, g.nx()) {}
};

/// Fills the boundary velocity entries in place: inlet faces to u_inlet,
/// outlet faces copied from the adjacent interior column, wall-normal faces to
/// zero. Idempotent.
void apply_boundary(StaggeredField& f, const DomainBC& bc);

/// Ghost-value accessors used by the stencil operators. Out-of-range indices
/// are synthesized from the boundary conditions: free-slip mirror for u across
/// the walls, reflection (v=0) at the inlet, zero-gradient at the outlet.
double u_ghost(const Array2D& u, int j, int i);
double v_ghost(const Array2D& v, int j, int i);
double p_ghost(const Array2D& p, int j, int i);

} // namespace ibflow

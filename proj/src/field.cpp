#include "ibflow/field.hpp"

namespace ibflow {

void apply_boundary(StaggeredField& f, const DomainBC& bc) {
    require(f.shapes_consistent(), "field shapes inconsistent with grid");
    const int nx = f.grid->nx();
    const int ny = f.grid->ny();

    for (int j = 0; j < ny; ++j) {
        f.u(j, 0) = bc.u_inlet;       // inlet: Dirichlet
        f.u(j, nx) = f.u(j, nx - 1);  // outlet: zero normal gradient
    }
    for (int i = 0; i < nx; ++i) {
        f.v(0, i) = 0.0;   // bottom wall: no penetration
        f.v(ny, i) = 0.0;  // top wall: no penetration
    }
}

double u_ghost(const Array2D& u, int j, int i) {
    // u rows live between the walls; free slip mirrors the tangential velocity.
    if (j < 0) j = 0;
    if (j >= u.rows()) j = u.rows() - 1;
    return u(j, i);
}

double v_ghost(const Array2D& v, int j, int i) {
    if (i < 0) return -v(j, 0);                       // inlet: v = 0 on the boundary
    if (i >= v.cols()) return v(j, v.cols() - 1);     // outlet: zero gradient
    return v(j, i);
}

double p_ghost(const Array2D& p, int j, int i) {
    // Neumann everywhere except the outlet, where p = 0 on the boundary face.
    if (i >= p.cols()) return -p(j, p.cols() - 1);
    if (i < 0) i = 0;
    if (j < 0) j = 0;
    if (j >= p.rows()) j = p.rows() - 1;
    return p(j, i);
}

} // namespace ibflow

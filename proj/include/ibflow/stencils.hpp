#pragma once

#include "ibflow/field.hpp"

namespace ibflow {

enum class AdvectionScheme { Upwind1, Central2 };

/// Discrete MAC divergence at cell centers:
/// div(j,i) = (u(j,i+1)-u(j,i))/dx_i + (v(j+1,i)-v(j,i))/dy_j.
Array2D divergence(const StaggeredField& f);

/// Convective term -(u.grad)u evaluated on u- and v-faces. Upwind direction
/// follows the sign of the advecting component; a zero advecting velocity uses
/// the mean of the one-sided slopes. Boundary faces are left at zero (they are
/// owned by the boundary conditions).
FaceVec convect(const StaggeredField& f, AdvectionScheme scheme = AdvectionScheme::Upwind1);

/// Viscous term nu * laplacian(u) on faces, 5-point central stencil with
/// non-uniform spacing support.
FaceVec diffuse(const StaggeredField& f, double nu);

/// Vorticity dv/dx - du/dy on the (ny+1) x (nx+1) node lattice; one-sided
/// differences at boundary nodes.
Array2D vorticity(const StaggeredField& f);

/// CFL number dt * max|u| / min spacing.
double cfl_number(const StaggeredField& f, double dt);

} // namespace ibflow

#pragma once

#include "ibflow/field.hpp"
#include "ibflow/ib.hpp"
#include "ibflow/resample.hpp"
#include "ibflow/stencils.hpp"
#include "ibflow/tape.hpp"

namespace ibflow {

/// The two staggered velocity components of one field as tape variables:
/// u is (1,1,ny,nx+1), v is (1,1,ny+1,nx).
struct FieldVars {
    Var u, v;
};

FieldVars field_leaves(Tape& t, const StaggeredField& f, bool requires_grad = false);
StaggeredField field_values(const Tape& t, FieldVars fv, const Grid& g);

/// One forward-Euler substep u' = u + dt*(-(u.grad)u + nu lap u) with the
/// boundary-aware stencils; boundary faces pass through unchanged.
FieldVars op_substep(Tape& t, FieldVars in, const Grid& g, double nu, double dt,
                     AdvectionScheme scheme);

/// In-graph equivalent of apply_boundary().
FieldVars op_enforce_bc(Tape& t, FieldVars in, const Grid& g, const DomainBC& bc);

/// Two-point averaging of the staggered components onto cell centers,
/// stacked as a 2-channel raster (u then v).
Var op_face_to_center(Tape& t, FieldVars in, const Grid& g);

/// Two-point averaging of a 2-channel center raster back onto faces; boundary
/// faces are pinned to zero (they belong to the boundary conditions).
FieldVars op_center_to_face(Tape& t, Var centers, const Grid& g);

/// MAC divergence as a (1,1,ny,nx) raster.
Var op_divergence(Tape& t, FieldVars in, const Grid& g);

/// Bilinear refinement onto refined_grid(cg, factor); linear extrapolation in
/// the half-cell boundary strips (exact on linears).
FieldVars op_upsample(Tape& t, FieldVars coarse, const Grid& cg, const Grid& fg, int factor);

/// Length-weighted face averaging back to the coarse lattice.
FieldVars op_downsample(Tape& t, FieldVars fine, const DownsampleMap& map);

/// Kernel interpolation of both components to the markers: (1,2,N,1).
Var op_interp_markers(Tape& t, FieldVars fine, const Grid& fg, const LagrangianBoundary& b);

/// Kernel spreading of marker forces (1,2,N,1) to face-valued body-force
/// densities (weights delta_h * ds_K).
FieldVars op_spread(Tape& t, Var marker_f, const Grid& fg, const LagrangianBoundary& b);

/// sign * sum_K f_K ds_K per component: (1,2,1,1).
Var op_marker_total(Tape& t, Var marker_f, const LagrangianBoundary& b, double sign);

double scalar_value(const Tape& t, Var v);

} // namespace ibflow

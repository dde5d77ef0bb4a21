#pragma once

#include <memory>

#include "ibflow/array2d.hpp"
#include "ibflow/grid.hpp"

namespace ibflow {

/// Pressure boundary condition per side. DirichletFace pins p = 0 on the
/// boundary face itself (the outlet); Neumann is zero normal gradient.
enum class PressureBC { Neumann, DirichletFace };

struct PoissonBCSet {
    PressureBC left = PressureBC::Neumann;
    PressureBC right = PressureBC::DirichletFace;
    PressureBC bottom = PressureBC::Neumann;
    PressureBC top = PressureBC::Neumann;

    bool all_neumann() const {
        return left == PressureBC::Neumann && right == PressureBC::Neumann &&
               bottom == PressureBC::Neumann && top == PressureBC::Neumann;
    }
};

struct PoissonStats {
    int cycles = 0;
    double rel_residual = 0.0;
};

/// Geometric multigrid for the variable-spacing 5-point Laplacian
/// (flux form, cell-centered), red-black Gauss-Seidel smoothing, V-cycles,
/// volume-weighted restriction and bilinear prolongation. Coarsening pairs
/// cells (odd trailing cells coarsen alone) so arbitrary cell counts work.
class MultigridPoisson {
public:
    MultigridPoisson(const Grid& grid, PoissonBCSet bc);
    ~MultigridPoisson();
    MultigridPoisson(MultigridPoisson&&) noexcept;
    MultigridPoisson& operator=(MultigridPoisson&&) noexcept;

    /// Solves laplacian(p) = rhs to ||r||_2 <= tol * ||rhs||_2, starting from
    /// the current contents of p (warm start). Throws ConvergenceError if
    /// max_cycles is exhausted.
    PoissonStats solve(const Array2D& rhs, Array2D& p, double tol, int max_cycles) const;

    /// Residual rhs - laplacian(p) on the fine level.
    Array2D residual(const Array2D& rhs, const Array2D& p) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace ibflow

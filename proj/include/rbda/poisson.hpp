#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "rbda/grid.hpp"

namespace rbda {

/// Solves the cell-centered discrete Poisson problem  L p = rhs  with L the
/// periodic-in-x, homogeneous-Neumann-in-y 5-point operator (the composition
/// `divergence(gradient(.))`).
///
/// A real FFT along x decouples the problem into one tridiagonal system in y
/// per wavenumber. The factorizations are computed once at construction. The
/// zero wavenumber is singular and is closed by the zero-mean gauge, so any
/// mean in `rhs` is discarded and the result has zero domain mean.
///
/// Holds FFT work buffers: one instance must not be used from two threads at
/// once. Instances are cheap to move.
class PoissonSolver {
 public:
  explicit PoissonSolver(const StaggeredGrid& grid);
  ~PoissonSolver();
  PoissonSolver(PoissonSolver&&) noexcept;
  PoissonSolver& operator=(PoissonSolver&&) noexcept;
  PoissonSolver(const PoissonSolver&) = delete;
  PoissonSolver& operator=(const PoissonSolver&) = delete;

  const StaggeredGrid& grid() const noexcept { return grid_; }

  /// Discrete x-eigenvalue of the periodic second difference for mode k.
  double x_eigenvalue(int k) const noexcept { return eig_[static_cast<std::size_t>(k)]; }

  ScalarField solve(const ScalarField& rhs);

  /// ||L p - (rhs - mean rhs)||_2 / ||rhs - mean rhs||_2 (0 when rhs is
  /// constant).
  static double relative_residual(const ScalarField& p, const ScalarField& rhs);

 private:
  struct Plans;

  StaggeredGrid grid_;
  int nk_;
  std::vector<double> eig_;
  // Thomas factors per wavenumber, row-major [k][j].
  std::vector<double> upper_;
  std::vector<double> inv_pivot_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace rbda

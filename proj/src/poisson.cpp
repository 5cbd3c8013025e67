#include "rbda/poisson.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace rbda {

namespace {

// FFTW planning and plan destruction are not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct PoissonSolver::Plans {
  double* real = nullptr;
  fftw_complex* spectral = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  Plans(int nx, int ny, int nk) {
    std::lock_guard lock(fftw_planner_mutex());
    real = fftw_alloc_real(static_cast<std::size_t>(nx) * ny);
    spectral = fftw_alloc_complex(static_cast<std::size_t>(nk) * ny);
    int n[] = {nx};
    // FFTW_ESTIMATE keeps plan choice, and hence rounding, deterministic.
    forward = fftw_plan_many_dft_r2c(1, n, ny, real, nullptr, 1, nx, spectral, nullptr, 1, nk,
                                     FFTW_ESTIMATE);
    backward = fftw_plan_many_dft_c2r(1, n, ny, spectral, nullptr, 1, nk, real, nullptr, 1, nx,
                                      FFTW_ESTIMATE);
    if (!real || !spectral || !forward || !backward) {
      release();
      throw Error("FFTW plan creation failed");
    }
  }
  ~Plans() {
    std::lock_guard lock(fftw_planner_mutex());
    release();
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;

 private:
  void release() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (real) fftw_free(real);
    if (spectral) fftw_free(spectral);
    forward = backward = nullptr;
    real = nullptr;
    spectral = nullptr;
  }
};

PoissonSolver::PoissonSolver(const StaggeredGrid& grid)
    : grid_(grid), nk_(grid.nx() / 2 + 1) {
  const int nx = grid_.nx();
  const int ny = grid_.ny();
  const double hx = grid_.hx();
  const double hy2 = grid_.hy() * grid_.hy();

  eig_.resize(static_cast<std::size_t>(nk_));
  for (int k = 0; k < nk_; ++k) {
    const double s = std::sin(std::numbers::pi * k / nx);
    eig_[static_cast<std::size_t>(k)] = -4.0 * s * s / (hx * hx);
  }

  upper_.assign(static_cast<std::size_t>(nk_) * ny, 0.0);
  inv_pivot_.assign(static_cast<std::size_t>(nk_) * ny, 0.0);
  for (int k = 0; k < nk_; ++k) {
    double* c = upper_.data() + static_cast<std::size_t>(k) * ny;
    double* ip = inv_pivot_.data() + static_cast<std::size_t>(k) * ny;
    const double shift = hy2 * eig_[static_cast<std::size_t>(k)];
    for (int j = 0; j < ny; ++j) {
      double diag = (j == 0 || j == ny - 1 ? -1.0 : -2.0) + shift;
      double lower = j > 0 ? 1.0 : 0.0;
      double up = j + 1 < ny ? 1.0 : 0.0;
      if (k == 0 && j == 0) {
        // Gauge row: pin the first value, restored to zero mean afterwards.
        diag = 1.0;
        up = 0.0;
      }
      const double denom = diag - (j > 0 ? lower * c[j - 1] : 0.0);
      ip[j] = 1.0 / denom;
      c[j] = up * ip[j];
    }
  }
  plans_ = std::make_unique<Plans>(nx, ny, nk_);
}

PoissonSolver::~PoissonSolver() = default;
PoissonSolver::PoissonSolver(PoissonSolver&&) noexcept = default;
PoissonSolver& PoissonSolver::operator=(PoissonSolver&&) noexcept = default;

ScalarField PoissonSolver::solve(const ScalarField& rhs) {
  if (rhs.location() != Location::cell_center || !(rhs.grid() == grid_)) {
    throw ConfigError("Poisson right-hand side must be cell-centered on the solver grid");
  }
  const int nx = grid_.nx();
  const int ny = grid_.ny();
  const double hy2 = grid_.hy() * grid_.hy();

  std::copy(rhs.data(), rhs.data() + rhs.size(), plans_->real);
  fftw_execute_dft_r2c(plans_->forward, plans_->real, plans_->spectral);

  fftw_complex* f = plans_->spectral;
  {
    // Project out the incompatible mean so the pinned k = 0 system is exact.
    double rhs_mean = 0.0;
    for (int j = 0; j < ny; ++j) rhs_mean += f[static_cast<std::size_t>(j) * nk_][0];
    rhs_mean /= ny;
    for (int j = 0; j < ny; ++j) f[static_cast<std::size_t>(j) * nk_][0] -= rhs_mean;
  }
  for (int k = 0; k < nk_; ++k) {
    const double* c = upper_.data() + static_cast<std::size_t>(k) * ny;
    const double* ip = inv_pivot_.data() + static_cast<std::size_t>(k) * ny;
    double pre = 0.0;
    double pim = 0.0;
    for (int j = 0; j < ny; ++j) {
      fftw_complex& z = f[static_cast<std::size_t>(j) * nk_ + k];
      double dre = hy2 * z[0];
      double dim = hy2 * z[1];
      if (k == 0 && j == 0) dre = dim = 0.0;
      if (j > 0) {
        dre -= pre;
        dim -= pim;
      }
      pre = dre * ip[j];
      pim = dim * ip[j];
      z[0] = pre;
      z[1] = pim;
    }
    for (int j = ny - 2; j >= 0; --j) {
      fftw_complex& z = f[static_cast<std::size_t>(j) * nk_ + k];
      const fftw_complex& zn = f[static_cast<std::size_t>(j + 1) * nk_ + k];
      z[0] -= c[j] * zn[0];
      z[1] -= c[j] * zn[1];
    }
  }
  // Zero-mean gauge on the k = 0 column.
  double mean = 0.0;
  for (int j = 0; j < ny; ++j) mean += f[static_cast<std::size_t>(j) * nk_][0];
  mean /= ny;
  for (int j = 0; j < ny; ++j) {
    f[static_cast<std::size_t>(j) * nk_][0] -= mean;
    f[static_cast<std::size_t>(j) * nk_][1] = 0.0;
  }
  if (nx % 2 == 0) {
    for (int j = 0; j < ny; ++j) f[static_cast<std::size_t>(j) * nk_ + nk_ - 1][1] = 0.0;
  }

  fftw_execute_dft_c2r(plans_->backward, plans_->spectral, plans_->real);
  ScalarField p(grid_, Location::cell_center);
  const double scale = 1.0 / nx;
  for (std::size_t n = 0; n < p.size(); ++n) p.data()[n] = plans_->real[n] * scale;
  return p;
}

double PoissonSolver::relative_residual(const ScalarField& p, const ScalarField& rhs) {
  const ScalarField lp = neumann_laplacian(p);
  const double mean = rhs.sum() / static_cast<double>(rhs.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t n = 0; n < rhs.size(); ++n) {
    const double b = rhs.data()[n] - mean;
    const double r = lp.data()[n] - b;
    num += r * r;
    den += b * b;
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

}  // namespace rbda

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbda/grid.hpp"

/// Measurement routines shared by the unit tests and the acceptance runner.
/// Each returns the measured quantity; the caller owns the tolerance.
namespace rbda::checks {

/// Relative 2-norm difference between PoissonSolver and a dense LU solve of
/// the hand-assembled periodic/Neumann 5-point matrix (zero-mean gauge
/// imposed through a bordered system).
double dense_poisson_error(int nx, int ny, double lx, std::uint64_t seed);

/// max |div| after projecting a random provisional velocity.
double projected_divergence(int nx, int ny, double lx, std::uint64_t seed);

struct OrderStudy {
  std::vector<double> spacing;  // h or dt
  std::vector<double> error;
  double order = 0.0;  // least-squares log-log slope
};

double fitted_order(const std::vector<double>& spacing, const std::vector<double>& error);

/// Global temporal error of the full nudging-free solver (RK4 startup, then
/// AB3) against a run at dt/8, on a smooth divergence-free initial state.
OrderStudy temporal_order_study();

enum class SpatialCase { advect_theta, advect_momentum, diffuse_fields, uniform_strip };
std::string to_string(SpatialCase c);

/// Discrete operator vs analytic expression of a smooth manufactured field,
/// RMS error over a refinement sequence.
OrderStudy spatial_order_study(SpatialCase c);

/// Smooth wall-compatible state: psi = a sin(kx) sin^2(pi y),
/// theta = b cos(kx) sin(pi y), sampled at native points (not projected).
FieldSet manufactured_state(const StaggeredGrid& grid, double a, double b);

/// Runs CDA and DDA with S = 1 from the same inputs for `steps` steps on an
/// n x n grid and returns the number of steps whose states differ bitwise.
int dda_cda_mismatched_steps(int n, int steps);

struct KsCalibration {
  int reps = 0;
  int gauss_pass = 0;
  int uniform_reject = 0;
};
KsCalibration ks_calibration(int reps, int n, std::uint64_t seed);

struct BootstrapCheck {
  double std10 = 0.0;
  double std20 = 0.0;
  double ratio = 0.0;  // std10 / std20
  double freq[3] = {0.0, 0.0, 0.0};  // frequencies of {0, 0.5, 1} in the {0,1} oracle
  int enumeration_resamples = 0;
  double max_freq_z = 0.0;  // largest |observed - expected| / binomial std
  double kde_integral = 0.0;
};
BootstrapCheck bootstrap_check(std::uint64_t seed);

/// Lambda of `members` synthetic fields truth + N(0, sigma^2), divided by
/// sigma^2 * area.
double lambda_mc_ratio(int members, double sigma, std::uint64_t seed);

}  // namespace rbda::checks

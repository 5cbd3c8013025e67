#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>

#include "rbda/grid.hpp"
#include "rbda/poisson.hpp"

namespace rbda {

struct PhysicsParams {
  double ra = 1.0e6;
  double pr = 0.7;

  /// Throws ConfigError unless Ra, Pr are positive and finite.
  void validate() const;
  double viscosity() const;    // Pr / sqrt(Ra)
  double diffusivity() const;  // 1 / sqrt(Ra)
};

/// Right-hand side of the prognostic equations at native locations.
struct Tendency {
  ScalarField du;
  ScalarField dv;
  ScalarField dtheta;

  explicit Tendency(const StaggeredGrid& grid);
  Tendency(ScalarField du, ScalarField dv, ScalarField dtheta);
};

/// Additive source for the momentum and energy equations (nudging).
struct ForcingTerm {
  Tendency terms;
  bool active = false;

  explicit ForcingTerm(const StaggeredGrid& grid) : terms(grid) {}
  static ForcingTerm inactive(const StaggeredGrid& grid) { return ForcingTerm(grid); }
  double max_abs_u() const { return std::max(terms.du.max_abs(), terms.dv.max_abs()); }
  double max_abs_theta() const { return terms.dtheta.max_abs(); }
};

/// What happens to forcing already stored in the multistep history when a
/// step arrives without active forcing.
enum class ForcingHistory {
  retain,              // forcing keeps its multistep weights (continuous nudging)
  flush_when_inactive  // stored forcing is zeroed on unforced steps (impulsive nudging)
};

enum class StartupScheme {
  euler_ab2,  // forward Euler, then AB2, then AB3
  rk4         // classical RK4 for the first two steps, then AB3
};

/// Fixed-step third-order Adams-Bashforth integrator state.
class TimeStepper {
 public:
  explicit TimeStepper(double dt, double cfl_limit = 0.5,
                       StartupScheme startup = StartupScheme::euler_ab2);

  double dt() const noexcept { return dt_; }
  double cfl_limit() const noexcept { return cfl_limit_; }
  std::int64_t step_index() const noexcept { return step_index_; }
  std::size_t history_length() const noexcept { return history_.size(); }
  StartupScheme startup() const noexcept { return startup_; }
  double last_courant() const noexcept { return last_courant_; }
  double last_residual() const noexcept { return last_residual_; }
  /// Residual above which a projection raises SolverFailure.
  double residual_tolerance = 1.0e-8;

 private:
  struct Level {
    Tendency physics;
    std::optional<Tendency> forcing;
  };

  friend FieldSet step(const FieldSet&, TimeStepper&, const PhysicsParams&, PoissonSolver&,
                       const ForcingTerm*, ForcingHistory);

  double dt_;
  double cfl_limit_;
  StartupScheme startup_;
  std::int64_t step_index_ = 0;
  std::deque<Level> history_;  // front = most recent, at most 2 entries kept between steps
  double last_courant_ = 0.0;
  double last_residual_ = 0.0;
};

/// Physical tendency of the Boussinesq system (pressure excluded):
///   du = -div(u u) + Pr/sqrt(Ra) lap u
///   dv = -div(u v) + Pr/sqrt(Ra) lap v + Pr theta
///   dtheta = -div(u theta) + 1/sqrt(Ra) lap theta + v
/// with `forcing` added when given. Throws NumericalBlowup (tagged with
/// `step_index`) on non-finite input.
Tendency tendency(const FieldSet& fs, const PhysicsParams& params,
                  const ForcingTerm* forcing = nullptr, std::int64_t step_index = 0);

/// Fractional-step projection: solves lap(phi) = div(u*)/dt,
/// u <- u* - dt grad(phi), pressure <- phi. Throws SolverFailure when the
/// Poisson residual exceeds `residual_tolerance`.
FieldSet project(const FieldSet& fs, double dt, PoissonSolver& solver,
                 double residual_tolerance = 1.0e-8, double* residual_out = nullptr);

/// Advance one step: AB3 combination of the stored tendencies (startup per
/// the stepper), wall conditions, projection. Raises NumericalBlowup if the
/// new state is non-finite or its Courant number exceeds the stepper limit.
FieldSet step(const FieldSet& fs, TimeStepper& stepper, const PhysicsParams& params,
              PoissonSolver& solver, const ForcingTerm* forcing = nullptr,
              ForcingHistory policy = ForcingHistory::retain);

/// 2 L_y / max|u| over both velocity components.
double turnover_time(const FieldSet& fs);

double max_courant(const FieldSet& fs, double dt);
double kinetic_energy(const FieldSet& fs);

}  // namespace rbda

#include "rbda/solver.hpp"

#include <array>
#include <cmath>
#include <string>

namespace rbda {

void PhysicsParams::validate() const {
  if (!(ra > 0.0) || !std::isfinite(ra)) throw ConfigError("Rayleigh number must be > 0");
  if (!(pr > 0.0) || !std::isfinite(pr)) throw ConfigError("Prandtl number must be > 0");
}

double PhysicsParams::viscosity() const { return pr / std::sqrt(ra); }
double PhysicsParams::diffusivity() const { return 1.0 / std::sqrt(ra); }

Tendency::Tendency(const StaggeredGrid& grid)
    : du(grid, Location::x_face), dv(grid, Location::y_face), dtheta(grid, Location::cell_center) {}

Tendency::Tendency(ScalarField du_, ScalarField dv_, ScalarField dtheta_)
    : du(std::move(du_)), dv(std::move(dv_)), dtheta(std::move(dtheta_)) {}

TimeStepper::TimeStepper(double dt, double cfl_limit, StartupScheme startup)
    : dt_(dt), cfl_limit_(cfl_limit), startup_(startup) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be > 0");
  if (!(cfl_limit > 0.0)) throw ConfigError("CFL limit must be > 0");
}

Tendency tendency(const FieldSet& fs, const PhysicsParams& params, const ForcingTerm* forcing,
                  std::int64_t step_index) {
  if (!fs.all_finite()) throw NumericalBlowup("non-finite values in field set", step_index);
  const double nu = params.viscosity();
  const double kappa = params.diffusivity();

  auto [du, dv] = advect_momentum(fs);
  du += diffuse(fs.u, nu);
  dv += diffuse(fs.v, nu);
  dv.add_scaled(params.pr, centers_to_yfaces(fs.theta));

  ScalarField dtheta = advect_scalar(fs, fs.theta);
  dtheta += diffuse(fs.theta, kappa);
  dtheta += yfaces_to_centers(fs.v);

  if (forcing != nullptr && forcing->active) {
    du += forcing->terms.du;
    dv += forcing->terms.dv;
    dtheta += forcing->terms.dtheta;
  }
  return Tendency(std::move(du), std::move(dv), std::move(dtheta));
}

FieldSet project(const FieldSet& fs, double dt, PoissonSolver& solver, double residual_tolerance,
                 double* residual_out) {
  if (!(dt > 0.0)) throw ConfigError("projection needs dt > 0");
  FieldSet out = apply_boundary_conditions(fs);
  ScalarField rhs = divergence(out);
  rhs *= 1.0 / dt;
  ScalarField phi = solver.solve(rhs);
  const double residual = PoissonSolver::relative_residual(phi, rhs);
  if (residual_out) *residual_out = residual;
  if (!(residual <= residual_tolerance)) {
    throw SolverFailure("pressure Poisson solve did not converge", residual);
  }
  auto [gx, gy] = gradient(phi);
  out.u.add_scaled(-dt, gx);
  out.v.add_scaled(-dt, gy);
  out.pressure = std::move(phi);
  return out;
}

namespace {

// out = base + dt * sum_k w_k (physics_k + forcing_k)
void combine(ScalarField& out, const ScalarField& base, double dt,
             std::span<const ScalarField* const> physics,
             std::span<const ScalarField* const> forcing, std::span<const double> w) {
  const std::size_t n = base.size();
  double* o = out.data();
  const double* b = base.data();
  for (std::size_t p = 0; p < n; ++p) {
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      double t = physics[k]->data()[p];
      if (forcing[k]) t += forcing[k]->data()[p];
      acc += w[k] * t;
    }
    o[p] = b[p] + dt * acc;
  }
}

FieldSet advance_state(const FieldSet& fs, double dt, std::span<const double> weights,
                       std::span<const Tendency* const> physics,
                       std::span<const Tendency* const> forcing) {
  const std::size_t m = weights.size();
  std::array<const ScalarField*, 4> ph{};
  std::array<const ScalarField*, 4> fo{};
  FieldSet star = fs;
  auto run = [&](ScalarField Tendency::*member, ScalarField& out, const ScalarField& base) {
    for (std::size_t k = 0; k < m; ++k) {
      ph[k] = &(physics[k]->*member);
      fo[k] = forcing[k] ? &(forcing[k]->*member) : nullptr;
    }
    combine(out, base, dt, std::span(ph.data(), m), std::span(fo.data(), m), weights);
  };
  run(&Tendency::du, star.u, fs.u);
  run(&Tendency::dv, star.v, fs.v);
  run(&Tendency::dtheta, star.theta, fs.theta);
  star.time = fs.time + dt;
  return star;
}

}  // namespace

FieldSet step(const FieldSet& fs, TimeStepper& stepper, const PhysicsParams& params,
              PoissonSolver& solver, const ForcingTerm* forcing, ForcingHistory policy) {
  const std::int64_t n = stepper.step_index_;
  const double dt = stepper.dt_;
  if (!fs.all_finite()) throw NumericalBlowup("non-finite values in field set", n);
  const bool forced = forcing != nullptr && forcing->active;
  if (policy == ForcingHistory::flush_when_inactive && !forced) {
    for (auto& level : stepper.history_) level.forcing.reset();
  }

  stepper.history_.push_front(TimeStepper::Level{
      tendency(fs, params, nullptr, n),
      forced ? std::optional<Tendency>(forcing->terms) : std::nullopt});

  FieldSet next(fs.grid());
  double residual = 0.0;
  const std::size_t levels = stepper.history_.size();

  if (stepper.startup_ == StartupScheme::rk4 && levels < 3) {
    // Classical RK4 on the projected system, forcing held over the step.
    const ForcingTerm* f = forced ? forcing : nullptr;
    const Tendency& k1 = stepper.history_.front().physics;
    const Tendency* k1f = forced ? &forcing->terms : nullptr;
    auto stage = [&](std::span<const double> w, std::span<const Tendency* const> ks,
                     std::span<const Tendency* const> fs_k, double h) {
      FieldSet s = advance_state(fs, h, w, ks, fs_k);
      return project(s, h, solver, stepper.residual_tolerance, &residual);
    };
    const std::array<double, 1> one{1.0};
    const std::array<const Tendency*, 1> f1{k1f};
    const std::array<const Tendency*, 1> none{nullptr};
    FieldSet s2 = stage(one, std::array<const Tendency*, 1>{&k1}, f1, 0.5 * dt);
    Tendency k2 = tendency(s2, params, f, n);
    FieldSet s3 = stage(one, std::array<const Tendency*, 1>{&k2}, none, 0.5 * dt);
    Tendency k3 = tendency(s3, params, f, n);
    FieldSet s4 = stage(one, std::array<const Tendency*, 1>{&k3}, none, dt);
    Tendency k4 = tendency(s4, params, f, n);
    const std::array<double, 4> w{1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0};
    const std::array<const Tendency*, 4> ks{&k1, &k2, &k3, &k4};
    const std::array<const Tendency*, 4> fk{k1f, nullptr, nullptr, nullptr};
    next = stage(w, ks, fk, dt);
  } else {
    static constexpr std::array<double, 1> euler{1.0};
    static constexpr std::array<double, 2> ab2{1.5, -0.5};
    static constexpr std::array<double, 3> ab3{23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0};
    std::span<const double> w = levels == 1   ? std::span<const double>(euler)
                                : levels == 2 ? std::span<const double>(ab2)
                                              : std::span<const double>(ab3);
    std::array<const Tendency*, 3> ph{};
    std::array<const Tendency*, 3> fo{};
    for (std::size_t k = 0; k < levels; ++k) {
      const auto& level = stepper.history_[k];
      ph[k] = &level.physics;
      fo[k] = level.forcing ? &*level.forcing : nullptr;
    }
    FieldSet star = advance_state(fs, dt, w, std::span(ph.data(), levels),
                                  std::span(fo.data(), levels));
    next = project(star, dt, solver, stepper.residual_tolerance, &residual);
  }
  while (stepper.history_.size() > 2) stepper.history_.pop_back();

  next.time = fs.time + dt;
  stepper.step_index_ = n + 1;
  stepper.last_residual_ = residual;
  if (!next.all_finite()) throw NumericalBlowup("non-finite values after step", n + 1);
  stepper.last_courant_ = max_courant(next, dt);
  if (stepper.last_courant_ > stepper.cfl_limit_) {
    throw NumericalBlowup("Courant number " + std::to_string(stepper.last_courant_) +
                              " exceeds limit " + std::to_string(stepper.cfl_limit_) +
                              " (healthy runs sit near 0.15)",
                          n + 1);
  }
  return next;
}

double turnover_time(const FieldSet& fs) {
  const double umax = std::max(fs.u.max_abs(), fs.v.max_abs());
  if (!(umax > 0.0)) throw UndefinedMetric("turnover time undefined for a fluid at rest");
  // Domain height is 1 in the scaled coordinates.
  return 2.0 / umax;
}

double max_courant(const FieldSet& fs, double dt) {
  const StaggeredGrid& g = fs.grid();
  return std::max(fs.u.max_abs() * dt / g.hx(), fs.v.max_abs() * dt / g.hy());
}

double kinetic_energy(const FieldSet& fs) {
  return 0.5 * (fs.u.sum_squares() + fs.v.sum_squares()) * fs.grid().cell_area();
}

}  // namespace rbda

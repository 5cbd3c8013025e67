#include "rbda/assimilation.hpp"

#include <cmath>
#include <string>

namespace rbda {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

ObservationGrid::ObservationGrid(const StaggeredGrid& grid, int factor)
    : grid_(grid), factor_(factor), ncx_(0), ncy_(0) {
  if (factor < 1) throw ConfigError("spatial downscaling factor must be >= 1");
  if (factor > grid.nx() || factor > grid.ny()) {
    throw ConfigError("spatial downscaling factor exceeds the grid size");
  }
  ncx_ = ceil_div(grid.nx(), factor);
  ncy_ = ceil_div(grid.ny(), factor);

  const int nx = grid.nx();
  for (Location loc : {Location::cell_center, Location::x_face, Location::y_face}) {
    const int rows = grid.rows(loc);
    auto& owner = owner_[index(loc)];
    owner.resize(static_cast<std::size_t>(nx) * rows);
    for (int j = 0; j < rows; ++j) {
      const int cj = std::min(j / factor, ncy_ - 1);
      for (int i = 0; i < nx; ++i) {
        owner[static_cast<std::size_t>(j) * nx + i] =
            static_cast<std::size_t>(cj) * ncx_ + static_cast<std::size_t>(i / factor);
      }
    }
    auto& sample = sample_[index(loc)];
    sample.resize(size());
    for (std::size_t k = 0; k < size(); ++k) {
      const CellRange c = cell(k);
      const int lx = c.i1 - c.i0;
      const int ly = c.j1 - c.j0;
      // Faces sit on integer fine coordinates, centers on half-integers.
      const int si = loc == Location::x_face ? c.i0 + lx / 2 : c.i0 + (lx - 1) / 2;
      const int sj = loc == Location::y_face ? c.j0 + ly / 2 : c.j0 + (ly - 1) / 2;
      sample[k] = static_cast<std::size_t>(sj) * nx + static_cast<std::size_t>(si);
    }
  }
}

ObservationGrid::CellRange ObservationGrid::cell(std::size_t k) const {
  const int ci = static_cast<int>(k % static_cast<std::size_t>(ncx_));
  const int cj = static_cast<int>(k / static_cast<std::size_t>(ncx_));
  return {ci * factor_, std::min((ci + 1) * factor_, grid_.nx()), cj * factor_,
          std::min((cj + 1) * factor_, grid_.ny())};
}

double ObservationGrid::extent(std::size_t k) const {
  const CellRange c = cell(k);
  return std::max((c.i1 - c.i0) * grid_.hx(), (c.j1 - c.j0) * grid_.hy());
}

std::vector<double> sample_coarse(const ScalarField& s, const ObservationGrid& og) {
  if (!(s.grid() == og.grid())) throw ConfigError("observation grid built on another grid");
  std::vector<double> out(og.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = s.data()[og.sample_index(s.location(), k)];
  }
  return out;
}

ScalarField expand_coarse(std::span<const double> coarse, const ObservationGrid& og,
                          Location loc) {
  if (coarse.size() != og.size()) {
    throw ConfigError("coarse array has " + std::to_string(coarse.size()) + " values, expected " +
                      std::to_string(og.size()));
  }
  const StaggeredGrid& g = og.grid();
  ScalarField out(g, loc);
  for (int j = 0; j < out.rows(); ++j) {
    for (int i = 0; i < g.nx(); ++i) out.at(i, j) = coarse[og.owner(loc, i, j)];
  }
  return out;
}

ScalarField interpolate_coarse(const ScalarField& s, const ObservationGrid& og) {
  return expand_coarse(sample_coarse(s, og), og, s.location());
}

std::string_view to_string(Algorithm a) { return a == Algorithm::cda ? "cda" : "dda"; }

Algorithm parse_algorithm(std::string_view text) {
  if (text == "cda" || text == "CDA") return Algorithm::cda;
  if (text == "dda" || text == "DDA") return Algorithm::dda;
  throw ConfigError("unknown algorithm '" + std::string(text) + "' (expected cda or dda)");
}

void NudgingConfig::validate() const {
  if (!(mu_u >= 0.0) || !(mu_theta >= 0.0) || !std::isfinite(mu_u) || !std::isfinite(mu_theta)) {
    throw ConfigError("nudging parameters must be finite and non-negative");
  }
  if (s < 1) throw ConfigError("temporal downscaling factor must be >= 1");
}

namespace {

// out = mu * (I(obs) - I(model)) at the native location of `model`.
void nudge(ScalarField& out, const ScalarField& model, std::span<const double> obs,
           const ObservationGrid& og, double mu) {
  if (obs.size() != og.size()) {
    throw ConfigError("observation frame size " + std::to_string(obs.size()) +
                      " does not match the observation grid (" + std::to_string(og.size()) + ")");
  }
  if (mu == 0.0) return;
  const Location loc = model.location();
  std::vector<double> diff(og.size());
  for (std::size_t k = 0; k < diff.size(); ++k) {
    diff[k] = mu * (obs[k] - model.data()[og.sample_index(loc, k)]);
  }
  const int nx = og.grid().nx();
  for (int j = 0; j < out.rows(); ++j) {
    double* o = out.data() + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) o[i] = diff[og.owner(loc, i, j)];
  }
}

}  // namespace

NudgingForcing cda_forcing(const FieldSet& fs, const ObservationFrame& obs,
                           const ObservationGrid& og, const NudgingConfig& cfg) {
  if (!(fs.grid() == og.grid())) throw ConfigError("observation grid built on another grid");
  NudgingForcing f(fs.grid());
  f.active = true;
  nudge(f.terms.du, fs.u, obs.u, og, cfg.mu_u);
  nudge(f.terms.dv, fs.v, obs.v, og, cfg.mu_u);
  // v is not prognostic on the walls.
  for (double& x : f.terms.dv.row(0)) x = 0.0;
  for (double& x : f.terms.dv.row(fs.grid().ny())) x = 0.0;
  nudge(f.terms.dtheta, fs.theta, obs.theta, og, cfg.mu_theta);
  return f;
}

NudgingForcing dda_forcing(const FieldSet& fs, const ObservationFrame& obs,
                           const ObservationGrid& og, const NudgingConfig& cfg,
                           std::int64_t step_index) {
  if (step_index % cfg.s != 0) return NudgingForcing::inactive(fs.grid());
  return cda_forcing(fs, obs, og, cfg);
}

DownscalingResult run_downscaling(const FieldSet& initial,
                                  std::span<const ObservationFrame> obs_stream,
                                  const ObservationGrid& og, const NudgingConfig& cfg,
                                  const PhysicsParams& params, TimeStepper& stepper,
                                  std::int64_t steps, const StepObserver& observer) {
  cfg.validate();
  params.validate();
  if (steps < 0) throw ConfigError("negative step count");
  if (!(initial.grid() == og.grid())) throw ConfigError("observation grid built on another grid");
  const double cadence = cfg.s * stepper.dt();
  for (std::size_t i = 0; i < obs_stream.size(); ++i) {
    const double expected = initial.time + static_cast<double>(i) * cadence;
    if (std::abs(obs_stream[i].time - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
      throw ConfigError("observation frame " + std::to_string(i) + " at t=" +
                        std::to_string(obs_stream[i].time) + " is not on the step grid (expected " +
                        std::to_string(expected) + ")");
    }
  }
  if (steps > 0) {
    const auto needed = static_cast<std::size_t>((steps - 1) / cfg.s + 1);
    if (obs_stream.size() < needed) {
      throw MissingInput("observation stream has " + std::to_string(obs_stream.size()) +
                         " frames, horizon needs " + std::to_string(needed));
    }
  }

  PoissonSolver solver(initial.grid());
  DownscalingResult result{initial};
  if (observer) observer(result.final, 0);
  const ForcingHistory policy = cfg.history_policy();
  for (std::int64_t n = 0; n < steps; ++n) {
    const ObservationFrame& frame = obs_stream[static_cast<std::size_t>(n / cfg.s)];
    const NudgingForcing forcing = cfg.algorithm == Algorithm::cda
                                       ? cda_forcing(result.final, frame, og, cfg)
                                       : dda_forcing(result.final, frame, og, cfg, n);
    if (forcing.active) {
      result.max_forcing_u = std::max(result.max_forcing_u, forcing.max_abs_u());
      result.max_forcing_theta = std::max(result.max_forcing_theta, forcing.max_abs_theta());
    }
    result.final = step(result.final, stepper, params, solver, &forcing, policy);
    result.max_courant = std::max(result.max_courant, stepper.last_courant());
    result.steps = n + 1;
    if (observer) observer(result.final, n + 1);
  }
  return result;
}

}  // namespace rbda

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "rbda/grid.hpp"
#include "rbda/observations.hpp"
#include "rbda/solver.hpp"

namespace rbda {

/// Partition of the fine grid into coarse cells Q_k of R x R fine cells
/// (trailing partial cells when R does not divide the cell count), with one
/// observation point per variable per coarse cell: the native staggered
/// sample nearest the coarse-cell center (lower index on ties).
class ObservationGrid {
 public:
  struct CellRange {
    int i0, i1;  // fine cell columns [i0, i1)
    int j0, j1;  // fine cell rows [j0, j1)
  };

  ObservationGrid(const StaggeredGrid& grid, int factor);

  const StaggeredGrid& grid() const noexcept { return grid_; }
  int factor() const noexcept { return factor_; }
  int ncx() const noexcept { return ncx_; }
  int ncy() const noexcept { return ncy_; }
  /// Number of coarse cells, ceil(nx/R) * ceil(ny/R).
  std::size_t size() const noexcept { return static_cast<std::size_t>(ncx_) * ncy_; }
  /// Observation spacing h_o = R * max(hx, hy).
  double spacing() const noexcept { return factor_ * std::max(grid_.hx(), grid_.hy()); }

  CellRange cell(std::size_t k) const;
  /// Largest side length of Q_k.
  double extent(std::size_t k) const;

  /// Coarse cell owning native sample (i, j) at `loc`.
  std::size_t owner(Location loc, int i, int j) const noexcept {
    return owner_[index(loc)][static_cast<std::size_t>(j) * grid_.nx() + i];
  }
  /// Flat storage index of the observation point of Q_k at `loc`.
  std::size_t sample_index(Location loc, std::size_t k) const noexcept {
    return sample_[index(loc)][k];
  }

  friend bool operator==(const ObservationGrid& a, const ObservationGrid& b) {
    return a.grid_ == b.grid_ && a.factor_ == b.factor_;
  }

 private:
  static std::size_t index(Location loc) noexcept { return static_cast<std::size_t>(loc); }

  StaggeredGrid grid_;
  int factor_;
  int ncx_;
  int ncy_;
  std::vector<std::size_t> owner_[3];
  std::vector<std::size_t> sample_[3];
};

/// Values of `s` at the observation points, one per coarse cell.
std::vector<double> sample_coarse(const ScalarField& s, const ObservationGrid& og);

/// Piecewise-constant fine field at `loc` equal to coarse[k] on Q_k.
ScalarField expand_coarse(std::span<const double> coarse, const ObservationGrid& og,
                          Location loc);

/// Zeroth-order interpolant: sum_k s(x_k) chi_{Q_k}.
ScalarField interpolate_coarse(const ScalarField& s, const ObservationGrid& og);

enum class Algorithm { cda, dda };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);

struct NudgingConfig {
  Algorithm algorithm = Algorithm::dda;
  double mu_u = 7.0;
  double mu_theta = 7.0;  // 0 means temperature is not assimilated
  int s = 10;             // observation every s steps

  void validate() const;
  ForcingHistory history_policy() const noexcept {
    return algorithm == Algorithm::cda ? ForcingHistory::retain
                                       : ForcingHistory::flush_when_inactive;
  }
};

using NudgingForcing = ForcingTerm;

/// Continuous nudging  mu (I(obs) - I(model))  for every prognostic field.
/// v forcing is zero on the wall rows.
NudgingForcing cda_forcing(const FieldSet& fs, const ObservationFrame& obs,
                           const ObservationGrid& og, const NudgingConfig& cfg);

/// Impulsive nudging: equal to `cda_forcing` on observation steps
/// (step_index divisible by s) and inactive otherwise.
NudgingForcing dda_forcing(const FieldSet& fs, const ObservationFrame& obs,
                           const ObservationGrid& og, const NudgingConfig& cfg,
                           std::int64_t step_index);

/// Per-step observer: state after `step` steps (step 0 = initial state).
using StepObserver = std::function<void(const FieldSet& state, std::int64_t step)>;

struct DownscalingResult {
  FieldSet final;
  std::int64_t steps = 0;
  double max_forcing_u = 0.0;
  double max_forcing_theta = 0.0;
  double max_courant = 0.0;
};

/// Integrate the nudged system for `steps` steps from `initial`.
///
/// Frame i of `obs_stream` must sit at initial.time + i * s * dt; the frame
/// in use at step n is n / s (held between observations for CDA). Throws
/// ConfigError for misaligned frames and MissingInput when the stream ends
/// before the horizon.
DownscalingResult run_downscaling(const FieldSet& initial,
                                  std::span<const ObservationFrame> obs_stream,
                                  const ObservationGrid& og, const NudgingConfig& cfg,
                                  const PhysicsParams& params, TimeStepper& stepper,
                                  std::int64_t steps, const StepObserver& observer = {});

}  // namespace rbda

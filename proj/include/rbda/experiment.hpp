#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rbda/assimilation.hpp"
#include "rbda/config.hpp"
#include "rbda/metrics.hpp"
#include "rbda/observations.hpp"

namespace rbda {

/// Receives one progress line at a time; may be called from worker threads.
using LogSink = std::function<void(const std::string&)>;

/// Spatial and temporal downscaling factors of one observation stream.
struct ObservationKey {
  int r = 4;
  int s = 10;
  auto operator<=>(const ObservationKey&) const = default;
};

/// Fields drawn pointwise: theta ~ U(-0.2, 0.2), u, v ~ U(-0.1, 0.1), with
/// the v wall rows zeroed. Not yet divergence free.
FieldSet sample_random_state(const StaggeredGrid& grid, std::uint64_t seed);

/// sample_random_state followed by a projection of the velocity.
FieldSet random_initial_state(const StaggeredGrid& grid, std::uint64_t seed);

struct ReferenceRun {
  ExperimentConfig config;
  /// Truth every metric_stride steps from t = 0 (index = step / metric_stride).
  std::vector<FieldSet> truth;
  /// Noise-free observation frames per requested (R, S).
  std::map<ObservationKey, std::vector<ObservationFrame>> clean;
  double max_courant = 0.0;
  double max_kinetic_energy = 0.0;
  double wall_seconds = 0.0;

  const std::vector<ObservationFrame>& frames(ObservationKey key) const;
};

/// Called with every reference state whose step (counted from t = 0) is a
/// multiple of the snapshot stride.
using SnapshotSink = std::function<void(const FieldSet&, std::int64_t step)>;

/// Random initial field, spin-up (time reset to 0 afterwards), then the
/// horizon. Records truth and the noise-free frames for every key.
ReferenceRun run_reference(const ExperimentConfig& cfg, std::span<const ObservationKey> keys,
                           const LogSink& log = {}, const SnapshotSink& snapshots = {});

/// Everything that identifies one downscaled realization.
struct MemberSpec {
  int index = 0;
  Algorithm algorithm = Algorithm::dda;
  ObservationKey key;
  double sigma_theta = 0.1;
  double sigma_u = 0.05;
  double mu_u = 7.0;
  double mu_theta = 7.0;
  std::uint64_t noise_seed = 0;    // base of the per-frame noise seeds
  std::uint64_t initial_seed = 0;  // seed of the random initial field

  auto operator<=>(const MemberSpec&) const = default;
};

/// Member `index` of the ensemble described by `cfg`.
MemberSpec member_spec(const ExperimentConfig& cfg, int index);

struct MemberResult {
  MemberSpec spec;
  bool ok = false;
  std::string error;
  int exit_code = 0;
  std::vector<double> times;  // metric times
  /// AE, RMSE, RRMSE for u, v, theta (score-major).
  std::vector<SkillSeries> series;
  /// Area-weighted squared error per metric time, indexed by Variable.
  std::array<std::vector<double>, 3> l2;
  /// Member fields every field_stride steps, final state last.
  std::vector<FieldSet> fields;
  double max_forcing_u = 0.0;
  double max_forcing_theta = 0.0;
  double max_courant = 0.0;
  double wall_seconds = 0.0;

  const SkillSeries& find(Score score, Variable v) const;
  const FieldSet& final_state() const { return fields.back(); }
};

/// Downscales one member against `truth` (metric stride) using the
/// noise-free `clean` frames. Numerical failures are caught and reported in
/// the result (ok = false); configuration errors propagate.
MemberResult run_member(const ExperimentConfig& cfg, std::span<const FieldSet> truth,
                        std::span<const ObservationFrame> clean, const MemberSpec& spec,
                        const LogSink& log = {});

/// Runs fn(0..n-1) on `workers` threads. Results must be written to
/// per-index slots; the first exception (lowest index) is rethrown after
/// all tasks finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Default worker count: hardware concurrency, at least 1.
int default_workers();

struct EnsembleStats {
  std::vector<SkillSeries> series;  // Lambda per variable (metric times), AES (field times)
  std::array<double, 3> lambda_final{};
  std::array<double, 3> lambda_plateau{};  // mean over the plateau window
  std::array<double, 3> aes_final{};
  std::array<double, 3> mean_solution_rrmse{};  // final time
  std::array<std::vector<double>, 3> member_rrmse_final;
  std::array<std::vector<double>, 3> member_rrmse_plateau;
  std::size_t members_ok = 0;
  std::size_t members_failed = 0;
  double plateau_start = 0.0;  // start of the averaging window
};

/// Leading `fraction` of the time axis excluded from plateau averages.
inline constexpr double default_plateau_fraction = 0.75;

/// Mean of the values with time >= t_start.
double window_mean(const std::vector<double>& times, const std::vector<double>& values,
                   double t_start);

/// First metric time after which the least-squares slope of log10(value)
/// over every following window of `window` time units stays within
/// `tolerance` per time unit. Returns the final time if none is found.
double plateau_onset(const SkillSeries& series, double window, double tolerance = 0.02);

/// Lambda, AES and mean-solution skill over the successful members.
/// Members with differing metric times are rejected.
EnsembleStats ensemble_stats(std::span<const MemberResult> members,
                             std::span<const FieldSet> truth,
                             double plateau_fraction = default_plateau_fraction);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least-squares line through (log x, log y). Refuses fewer than three
/// points or non-positive data with ConfigError.
LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace rbda

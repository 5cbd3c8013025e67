#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rbda/assimilation.hpp"
#include "rbda/grid.hpp"
#include "rbda/observations.hpp"
#include "rbda/solver.hpp"
#include "rbda/stats.hpp"

namespace rbda {

enum class Profile { desk, paper };

std::string_view to_string(Profile p);
Profile parse_profile(std::string_view text);

/// Everything needed to reproduce one experiment. Serialized as flat
/// `section.key=value` lines; '#' starts a comment.
struct ExperimentConfig {
  // physics
  double ra = 1.0e6;
  double pr = 0.7;
  // grid
  int nx = 192;
  int ny = 64;
  double lx = 3.0;
  // time
  double dt = 1.0e-3;
  double horizon = 20.0;
  double spinup = 10.0;  // reference integration discarded before t = 0
  double cfl_limit = 0.5;
  // output
  int snapshot_stride = 0;  // steps between persisted reference snapshots; 0 = obs.s
  int metric_stride = 100;  // steps between recorded skill scores
  int field_stride = 1000;  // steps between stored member fields (AES)
  int log_stride = 1000;    // steps between progress lines
  std::string out_dir = "out";
  // nudging
  Algorithm algorithm = Algorithm::dda;
  double mu_u = 7.0;
  double mu_theta = 7.0;
  // observations
  int r = 4;
  int s = 10;
  double sigma_theta = 0.1;
  double sigma_u = 0.05;
  int members = 20;
  // seeds
  std::uint64_t seed_reference = 1;
  std::uint64_t seed_noise = 2;
  std::uint64_t seed_initial = 3;
  // analysis
  KSMethod ks_method = KSMethod::lilliefors;
  int bootstrap_resamples = 500;
  // presets
  std::string preset;
  std::vector<double> sweep_sigma{0.025, 0.05, 0.1, 0.2};
  std::vector<int> sweep_r{2, 4, 8, 16};
  std::vector<int> sweep_s{1, 5, 10, 20};
  std::vector<double> sweep_mu{1.0, 3.0, 7.0, 10.0};
  std::vector<Algorithm> sweep_algorithms{Algorithm::cda, Algorithm::dda};
  // Nudging strengths used when a preset runs both algorithms.
  double mu_cda = 3.0;
  double mu_dda = 7.0;
  // Temperature-relevance preset.
  std::vector<double> relevance_sigma{0.05, 0.1, 0.15};
  int relevance_r = 11;
  int relevance_s = 15;
  // Fraction of the horizon excluded before plateau averages.
  double plateau_fraction = 0.75;

  double mu_for(Algorithm a) const { return a == Algorithm::cda ? mu_cda : mu_dda; }

  static ExperimentConfig desk();
  /// Full-scale setting; `algorithm` picks mu (7 / 3) and horizon (49.9 / 15).
  static ExperimentConfig paper(Algorithm algorithm = Algorithm::dda);
  static ExperimentConfig for_profile(Profile p);

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  std::int64_t steps() const;  // horizon / dt
  std::int64_t spinup_steps() const;
  int effective_snapshot_stride() const { return snapshot_stride > 0 ? snapshot_stride : s; }

  StaggeredGrid grid() const { return StaggeredGrid(nx, ny, lx); }
  PhysicsParams physics() const { return {ra, pr}; }
  NudgingConfig nudging() const { return {algorithm, mu_u, mu_theta, s}; }
  NoiseSpec noise() const { return {sigma_theta, sigma_u, seed_noise}; }

  /// Applies one `key=value` assignment.
  void set(std::string_view key, std::string_view value);
  /// Canonical text form, one key per line in a fixed order.
  std::string serialize() const;
  /// FNV-1a 64 hash of serialize().
  std::uint64_t hash() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses config text on top of `base`. Unknown keys and malformed values
/// raise ConfigError with the line number.
ExperimentConfig parse_config(std::string_view text, const std::string& source,
                              ExperimentConfig base = ExperimentConfig::desk());
ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base = ExperimentConfig::desk());

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t x);

}  // namespace rbda

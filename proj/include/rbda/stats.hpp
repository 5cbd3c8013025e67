#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "rbda/grid.hpp"
#include "rbda/metrics.hpp"

namespace rbda {

/// How the KS p-value is obtained once the sample is standardized.
enum class KSMethod {
  /// Null distribution of D with estimated mean and variance, tabulated by
  /// seeded Monte Carlo per sample size (Lilliefors test).
  lilliefors,
  /// Kolmogorov limiting series for a fully specified null. Conservative
  /// after standardization.
  asymptotic,
};

std::string_view to_string(KSMethod m);
KSMethod parse_ks_method(std::string_view text);

struct KSResult {
  int x = -1;            // x index, -1 when not tied to a location
  int row = -1;          // cell-center row
  double plane = 0.0;    // requested plane height
  std::size_t n = 0;
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject = false;   // p_value < ks_alpha
  bool degenerate = false;
};

inline constexpr double ks_alpha = 0.05;
inline constexpr std::size_t ks_min_samples = 20;

/// Standard normal CDF.
double normal_cdf(double x);

/// sup |F_n - Phi| of samples already standardized. Sorts a copy.
double ks_statistic(std::span<const double> standardized);

/// Kolmogorov tail probability P(K > lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_tail(double lambda);

/// Asymptotic p-value with the small-sample correction of Stephens.
double ks_asymptotic_p(double d, std::size_t n);

/// Monte Carlo Lilliefors p-value, (1 + #{D0 >= d}) / (M + 1) for a cached
/// table of M null statistics at this n.
double ks_lilliefors_p(double d, std::size_t n);

/// Gaussianity test of one sample. Throws ConfigError below 20 samples and
/// DegenerateSample for zero variance.
KSResult ks_gaussianity(std::span<const double> samples, KSMethod method = KSMethod::lilliefors);

struct PlaneSnap {
  double plane;    // requested height
  int row;         // nearest cell-center row
  double offset;   // y(row) - plane
};

struct KSScan {
  std::vector<PlaneSnap> planes;
  std::vector<KSResult> results;  // plane-major, x fastest
  std::size_t tested = 0;         // non-degenerate locations
  std::size_t rejected = 0;
  std::size_t degenerate = 0;
};

/// Heights 0.25, 0.5 and 0.75.
std::span<const double> default_planes();

/// One test per (x, plane) across the members' cell-center fields. Planes
/// are snapped to the nearest cell-center row. Degenerate locations are
/// flagged and excluded from the counts. Needs at least 20 members.
KSScan ks_profile_scan(std::span<const ScalarField> members,
                       std::span<const double> planes = default_planes(),
                       KSMethod method = KSMethod::lilliefors);


struct KdeCurve {
  double bandwidth = 0.0;
  std::vector<double> x;
  std::vector<double> density;

  /// Trapezoid integral of the density over the abscissae.
  double integral() const;
};

/// Gaussian-kernel KDE with Silverman's bandwidth
/// 0.9 min(sd, IQR/1.34) n^(-1/5), evaluated on `points` abscissae covering
/// [min - 5h, max + 5h]. Identical samples fall back to a narrow kernel.
KdeCurve gaussian_kde(std::span<const double> samples, std::size_t points = 512);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  double q25 = 0.0;
  double q75 = 0.0;
};

/// Linear-interpolated quantile (type 7) of unsorted data.
double quantile(std::span<const double> data, double q);
Summary summarize(std::span<const double> data);

struct BootstrapResult {
  std::size_t subset_size = 0;
  std::size_t resamples = 0;
  std::vector<double> estimates;
  Summary summary;
  KdeCurve kde;
};

/// Draws a random subset of `subset_size` values without replacement, then
/// `resamples` times resamples it with replacement and records the mean.
BootstrapResult bootstrap_skill(std::span<const double> values, std::size_t subset_size,
                                std::size_t resamples, std::uint64_t seed);

/// RRMSE of the pointwise mean of the first k members against truth, for
/// each k in `subset_sizes` (increasing). The series abscissa is k.
SkillSeries mean_solution_skill(std::span<const ScalarField> members, const ScalarField& truth,
                                std::span<const std::size_t> subset_sizes, Variable variable);

void write_ks_csv(std::ostream& os, const KSScan& scan);
void write_bootstrap_csv(std::ostream& os, std::span<const BootstrapResult> results);
void write_kde_csv(std::ostream& os, std::span<const BootstrapResult> results);

}  // namespace rbda

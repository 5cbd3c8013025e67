#include "rbda/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "rbda/error.hpp"
#include "rbda/rng.hpp"

namespace rbda {

std::string_view to_string(KSMethod m) {
  return m == KSMethod::lilliefors ? "lilliefors" : "asymptotic";
}

KSMethod parse_ks_method(std::string_view text) {
  if (text == "lilliefors") return KSMethod::lilliefors;
  if (text == "asymptotic") return KSMethod::asymptotic;
  throw ConfigError("unknown KS method '" + std::string(text) +
                    "' (expected lilliefors or asymptotic)");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic(std::span<const double> standardized) {
  std::vector<double> xs(standardized.begin(), standardized.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  // The alternating series converges slowly for small lambda; use the dual
  // theta-function form there.
  if (lambda < 1.18) {
    const double y = std::exp(-M_PI * M_PI / (8.0 * lambda * lambda));
    double cdf = 0.0;
    for (int k = 1; k < 40; k += 2) cdf += std::pow(y, k * k);
    cdf *= std::sqrt(2.0 * M_PI) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_asymptotic_p(double d, std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  return kolmogorov_tail((rn + 0.12 + 0.11 / rn) * d);
}

namespace {

constexpr std::size_t lilliefors_table_size = 20000;
constexpr std::uint64_t lilliefors_seed = 0x4c696c6c6965666fULL;

// Sorting first makes the moments, and so the statistic, independent of the
// sample order. A spread at rounding level of the mean counts as zero.
std::vector<double>& standardize_in_place(std::vector<double>& xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(mean);
  if (xs.front() == xs.back() || !(sd > floor) || !std::isfinite(sd)) {
    throw DegenerateSample("sample of size " + std::to_string(xs.size()) +
                           " has zero variance");
  }
  for (double& x : xs) x = (x - mean) / sd;
  return xs;
}

std::shared_ptr<const std::vector<double>> lilliefors_table(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const std::vector<double>>> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }
  auto table = std::make_shared<std::vector<double>>();
  table->reserve(lilliefors_table_size);
  Rng rng(derive_seed(lilliefors_seed, {n}));
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> xs(n);
  for (std::size_t m = 0; m < lilliefors_table_size; ++m) {
    for (double& x : xs) x = z(rng);
    table->push_back(ks_statistic(standardize_in_place(xs)));
  }
  std::sort(table->begin(), table->end());
  std::lock_guard lock(mutex);
  // Another thread may have built the same table; both are identical.
  return cache.emplace(n, std::move(table)).first->second;
}

}  // namespace

double ks_lilliefors_p(double d, std::size_t n) {
  if (n < 4) throw ConfigError("Lilliefors p-value needs at least 4 samples");
  const auto table = lilliefors_table(n);
  const auto below = std::lower_bound(table->begin(), table->end(), d);
  const auto at_or_above = static_cast<double>(table->end() - below);
  return (1.0 + at_or_above) / (static_cast<double>(table->size()) + 1.0);
}

KSResult ks_gaussianity(std::span<const double> samples, KSMethod method) {
  if (samples.size() < ks_min_samples) {
    throw ConfigError("KS test needs at least " + std::to_string(ks_min_samples) +
                      " samples, got " + std::to_string(samples.size()));
  }
  std::vector<double> xs(samples.begin(), samples.end());
  standardize_in_place(xs);
  KSResult r;
  r.n = xs.size();
  r.statistic = ks_statistic(xs);
  r.p_value = method == KSMethod::lilliefors ? ks_lilliefors_p(r.statistic, r.n)
                                             : ks_asymptotic_p(r.statistic, r.n);
  r.reject = r.p_value < ks_alpha;
  return r;
}

std::span<const double> default_planes() {
  static constexpr std::array<double, 3> planes{0.25, 0.5, 0.75};
  return planes;
}

KSScan ks_profile_scan(std::span<const ScalarField> members, std::span<const double> planes,
                       KSMethod method) {
  if (members.size() < ks_min_samples) {
    throw ConfigError("profile scan needs at least " + std::to_string(ks_min_samples) +
                      " members, got " + std::to_string(members.size()));
  }
  const ScalarField& first = members.front();
  if (first.location() != Location::cell_center) {
    throw ConfigError("profile scan expects cell-center fields");
  }
  for (const ScalarField& m : members) first.require_compatible(m, "profile scan");
  const StaggeredGrid& g = first.grid();
  const double y0 = g.y(Location::cell_center, 0);
  KSScan scan;
  std::vector<double> column(members.size());
  for (double plane : planes) {
    // Nearest cell-center row, the lower one on ties.
    int row = std::clamp(static_cast<int>(std::floor((plane - y0) / g.hy())), 0, g.ny() - 1);
    if (row + 1 < g.ny() &&
        std::abs(g.y(Location::cell_center, row + 1) - plane) <
            std::abs(g.y(Location::cell_center, row) - plane)) {
      ++row;
    }
    scan.planes.push_back({plane, row, g.y(Location::cell_center, row) - plane});
    for (int i = 0; i < g.nx(); ++i) {
      for (std::size_t k = 0; k < members.size(); ++k) column[k] = members[k].at(i, row);
      KSResult r;
      try {
        r = ks_gaussianity(column, method);
        ++scan.tested;
        if (r.reject) ++scan.rejected;
      } catch (const DegenerateSample&) {
        r.n = column.size();
        r.degenerate = true;
        ++scan.degenerate;
      }
      r.x = i;
      r.row = row;
      r.plane = plane;
      scan.results.push_back(r);
    }
  }
  return scan;
}

double KdeCurve::integral() const {
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    acc += 0.5 * (density[i] + density[i - 1]) * (x[i] - x[i - 1]);
  }
  return acc;
}

double quantile(std::span<const double> data, double q) {
  if (data.empty()) throw ConfigError("quantile of an empty sample");
  std::vector<double> xs(data.begin(), data.end());
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

Summary summarize(std::span<const double> data) {
  if (data.empty()) throw ConfigError("summary of an empty sample");
  Summary s;
  const double n = static_cast<double>(data.size());
  s.mean = std::accumulate(data.begin(), data.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : data) ss += (x - s.mean) * (x - s.mean);
  s.std = data.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.q25 = quantile(data, 0.25);
  s.q75 = quantile(data, 0.75);
  return s;
}

KdeCurve gaussian_kde(std::span<const double> samples, std::size_t points) {
  if (samples.empty()) throw ConfigError("KDE of an empty sample");
  if (points < 2) throw ConfigError("KDE needs at least two abscissae");
  const Summary s = summarize(samples);
  const double iqr = (s.q75 - s.q25) / 1.34;
  double spread = std::min(s.std, iqr);
  if (!(spread > 0.0)) spread = std::max(s.std, iqr);
  const double n = static_cast<double>(samples.size());
  KdeCurve kde;
  kde.bandwidth = 0.9 * spread * std::pow(n, -0.2);
  if (!(kde.bandwidth > 0.0)) {
    // All samples identical: a narrow kernel keeps the curve a density.
    kde.bandwidth = 1e-6 * std::max(1.0, std::abs(s.mean));
  }
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it - 5.0 * kde.bandwidth;
  const double hi = *hi_it + 5.0 * kde.bandwidth;
  const double norm = 1.0 / (n * kde.bandwidth * std::sqrt(2.0 * M_PI));
  kde.x.resize(points);
  kde.density.resize(points);
  for (std::size_t p = 0; p < points; ++p) {
    const double x = lo + (hi - lo) * static_cast<double>(p) / static_cast<double>(points - 1);
    double acc = 0.0;
    for (double xi : samples) {
      const double z = (x - xi) / kde.bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    kde.x[p] = x;
    kde.density[p] = acc * norm;
  }
  return kde;
}

BootstrapResult bootstrap_skill(std::span<const double> values, std::size_t subset_size,
                                std::size_t resamples, std::uint64_t seed) {
  if (values.empty()) throw ConfigError("bootstrap of an empty population");
  if (subset_size < 1 || subset_size > values.size()) {
    throw ConfigError("bootstrap subset size " + std::to_string(subset_size) +
                      " outside [1, " + std::to_string(values.size()) + "]");
  }
  if (resamples < 1) throw ConfigError("bootstrap needs at least one resample");
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::bootstrap), subset_size}));

  // Partial Fisher-Yates for the subset drawn without replacement.
  std::vector<double> pool(values.begin(), values.end());
  for (std::size_t i = 0; i < subset_size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(subset_size);

  BootstrapResult r;
  r.subset_size = subset_size;
  r.resamples = resamples;
  r.estimates.reserve(resamples);
  std::uniform_int_distribution<std::size_t> pick(0, subset_size - 1);
  for (std::size_t b = 0; b < resamples; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < subset_size; ++i) acc += pool[pick(rng)];
    r.estimates.push_back(acc / static_cast<double>(subset_size));
  }
  r.summary = summarize(r.estimates);
  r.kde = gaussian_kde(r.estimates);
  return r;
}

SkillSeries mean_solution_skill(std::span<const ScalarField> members, const ScalarField& truth,
                                std::span<const std::size_t> subset_sizes, Variable variable) {
  if (members.empty()) throw ConfigError("mean-solution skill needs at least one member");
  SkillSeries series{Score::rrmse, variable, "ensemble-mean", {}, {}};
  for (std::size_t k : subset_sizes) {
    if (k < 1 || k > members.size()) {
      throw ConfigError("subset size " + std::to_string(k) + " outside [1, " +
                        std::to_string(members.size()) + "]");
    }
    series.append(static_cast<double>(k), rrmse(ensemble_mean(members.first(k)), truth));
  }
  return series;
}

void write_ks_csv(std::ostream& os, const KSScan& scan) {
  os << "x,plane,row,n,statistic,p,reject,degenerate\n";
  for (const KSResult& r : scan.results) {
    os << r.x << ',' << format_real(r.plane) << ',' << r.row << ',' << r.n << ','
       << format_real(r.statistic) << ',' << format_real(r.p_value) << ',' << (r.reject ? 1 : 0)
       << ',' << (r.degenerate ? 1 : 0) << '\n';
  }
}

void write_bootstrap_csv(std::ostream& os, std::span<const BootstrapResult> results) {
  os << "subset,resamples,mean,std,q25,q75,bandwidth\n";
  for (const BootstrapResult& r : results) {
    os << r.subset_size << ',' << r.resamples << ',' << format_real(r.summary.mean) << ','
       << format_real(r.summary.std) << ',' << format_real(r.summary.q25) << ','
       << format_real(r.summary.q75) << ',' << format_real(r.kde.bandwidth) << '\n';
  }
}

void write_kde_csv(std::ostream& os, std::span<const BootstrapResult> results) {
  os << "subset,x,density\n";
  for (const BootstrapResult& r : results) {
    for (std::size_t i = 0; i < r.kde.x.size(); ++i) {
      os << r.subset_size << ',' << format_real(r.kde.x[i]) << ','
         << format_real(r.kde.density[i]) << '\n';
    }
  }
}

}  // namespace rbda

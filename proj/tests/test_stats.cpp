#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "checks.hpp"
#include "rbda/experiment.hpp"
#include "rbda/rng.hpp"
#include "rbda/stats.hpp"

using namespace rbda;

namespace {

std::vector<double> normal_sample(std::size_t n, double mu, double sd, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z(mu, sd);
  std::vector<double> xs(n);
  for (double& x : xs) x = z(rng);
  return xs;
}

std::vector<ScalarField> noisy_members(const ScalarField& truth, int n, double sigma,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, sigma);
  std::vector<ScalarField> out;
  for (int m = 0; m < n; ++m) {
    ScalarField f = truth;
    for (double& x : f.values()) x += z(rng);
    out.push_back(std::move(f));
  }
  return out;
}

ScalarField smooth_truth(const StaggeredGrid& g) {
  ScalarField t(g, Location::cell_center);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      t.at(i, j) = 1.0 + 0.5 * std::sin(g.x(Location::cell_center, i)) *
                             std::sin(3.0 * g.y(Location::cell_center, j));
    }
  }
  return t;
}

}  // namespace

TEST(Distributions, ReferenceValues) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.96), 0.9750021048517795, 1e-12);
  EXPECT_NEAR(kolmogorov_tail(1.36), 0.0494946, 1e-5);
  EXPECT_NEAR(kolmogorov_tail(1.0), 0.2699996, 1e-5);
  EXPECT_NEAR(kolmogorov_tail(0.5), 0.9639452, 1e-5);
}

TEST(KsGaussianity, RejectIffPBelowAlpha) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> xs(60);
    for (double& x : xs) x = e(rng);
    for (KSMethod m : {KSMethod::lilliefors, KSMethod::asymptotic}) {
      const KSResult r = ks_gaussianity(xs, m);
      EXPECT_EQ(r.reject, r.p_value < ks_alpha);
      EXPECT_GE(r.p_value, 0.0);
      EXPECT_LE(r.p_value, 1.0);
      EXPECT_EQ(r.n, 60u);
    }
  }
}

TEST(KsGaussianity, ConstantSampleIsDegenerate) {
  EXPECT_THROW(ks_gaussianity(std::vector<double>(40, 2.5)), DegenerateSample);
}

TEST(KsGaussianity, NeedsTwentySamples) {
  EXPECT_THROW(ks_gaussianity(normal_sample(19, 0, 1, 1)), ConfigError);
  EXPECT_NO_THROW(ks_gaussianity(normal_sample(20, 0, 1, 1)));
}

TEST(KsGaussianity, PermutationInvariant) {
  std::vector<double> xs = normal_sample(100, 1.0, 2.0, 3);
  const KSResult a = ks_gaussianity(xs);
  std::reverse(xs.begin(), xs.end());
  std::rotate(xs.begin(), xs.begin() + 37, xs.end());
  const KSResult b = ks_gaussianity(xs);
  EXPECT_EQ(a.statistic, b.statistic);
  EXPECT_EQ(a.p_value, b.p_value);
}

TEST(KsGaussianity, PValueDecreasesWithStatistic) {
  for (KSMethod m : {KSMethod::lilliefors, KSMethod::asymptotic}) {
    double prev = 2.0;
    for (double d = 0.01; d < 0.3; d += 0.005) {
      const double p = m == KSMethod::lilliefors ? ks_lilliefors_p(d, 200) : ks_asymptotic_p(d, 200);
      EXPECT_LE(p, prev) << to_string(m) << " d=" << d;
      prev = p;
    }
  }
}

TEST(KsGaussianity, SizeOnGaussianSamples) {
  const checks::KsCalibration c = checks::ks_calibration(1000, 200, 2024);
  EXPECT_GE(c.gauss_pass, 930);
}

TEST(KsProfileScan, IdenticalMembersAreDegenerateNotRejected) {
  const StaggeredGrid g(16, 16, 1.0);
  const std::vector<ScalarField> members(25, smooth_truth(g));
  const KSScan scan = ks_profile_scan(members);
  EXPECT_EQ(scan.results.size(), 3u * 16u);
  EXPECT_EQ(scan.degenerate, scan.results.size());
  EXPECT_EQ(scan.rejected, 0u);
  EXPECT_EQ(scan.tested, 0u);
  for (const KSResult& r : scan.results) EXPECT_FALSE(r.reject);
}

TEST(KsProfileScan, GaussianMembersRejectAtTestSize) {
  const StaggeredGrid g(128, 16, 2.0);
  const KSScan scan = ks_profile_scan(noisy_members(smooth_truth(g), 50, 0.1, 4));
  ASSERT_EQ(scan.tested, 3u * 128u);
  const double rate = static_cast<double>(scan.rejected) / static_cast<double>(scan.tested);
  EXPECT_GT(rate, 0.02);
  EXPECT_LT(rate, 0.09);
}

TEST(KsProfileScan, PlanesSnapToNearestRow) {
  const StaggeredGrid g(16, 10, 1.0);
  const KSScan scan = ks_profile_scan(noisy_members(smooth_truth(g), 20, 0.1, 5));
  ASSERT_EQ(scan.planes.size(), 3u);
  const int expected_rows[] = {2, 4, 7};  // y = 0.25, 0.45, 0.75 are the nearest centers
  for (std::size_t p = 0; p < 3; ++p) {
    EXPECT_LE(std::abs(scan.planes[p].offset), 0.5 * g.hy() + 1e-15);
    EXPECT_EQ(scan.planes[p].row, expected_rows[p]);
  }
}

TEST(KsProfileScan, PreconditionsChecked) {
  const StaggeredGrid g(16, 8, 1.0);
  EXPECT_THROW(ks_profile_scan(noisy_members(smooth_truth(g), 19, 0.1, 6)), ConfigError);
  const std::vector<ScalarField> faces(25, ScalarField(g, Location::x_face));
  EXPECT_THROW(ks_profile_scan(faces), ConfigError);
}

TEST(Quantile, TypeSevenInterpolation) {
  const std::vector<double> xs{4.0, 1.0, 3.0, 2.0};
  EXPECT_DOUBLE_EQ(quantile(xs, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(xs, 1.0), 4.0);
  const Summary s = summarize(xs);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(5.0 / 3.0));
}

TEST(Bootstrap, IdenticalPopulationGivesPointMass) {
  const BootstrapResult r = bootstrap_skill(std::vector<double>(30, 0.125), 10, 500, 1);
  EXPECT_EQ(r.estimates.size(), 500u);
  for (double x : r.estimates) EXPECT_EQ(x, 0.125);
  EXPECT_EQ(r.summary.std, 0.0);
  EXPECT_NEAR(r.kde.integral(), 1.0, 1e-3);
}

TEST(Bootstrap, TwoPointEnumerationOracle) {
  const checks::BootstrapCheck c = checks::bootstrap_check(7);
  EXPECT_LT(c.max_freq_z, 4.0) << c.freq[0] << " " << c.freq[1] << " " << c.freq[2];
}

TEST(Bootstrap, StdShrinksBySqrtTwoFromTenToTwenty) {
  const checks::BootstrapCheck c = checks::bootstrap_check(7);
  EXPECT_NEAR(c.ratio / std::sqrt(2.0), 1.0, 0.3);
}

TEST(Bootstrap, MeanWithinThreeStandardErrors) {
  const std::vector<double> pop = normal_sample(100, 0.2, 0.05, 8);
  double mu = 0.0;
  for (double x : pop) mu += x;
  mu /= 100.0;
  const BootstrapResult r = bootstrap_skill(pop, 100, 500, 9);
  EXPECT_LT(std::abs(r.summary.mean - mu), 3.0 * r.summary.std / std::sqrt(500.0));
}

TEST(Bootstrap, DeterministicAndValidated) {
  const std::vector<double> pop = normal_sample(40, 0.0, 1.0, 10);
  const BootstrapResult a = bootstrap_skill(pop, 20, 100, 11);
  const BootstrapResult b = bootstrap_skill(pop, 20, 100, 11);
  EXPECT_EQ(a.estimates, b.estimates);
  EXPECT_THROW(bootstrap_skill(pop, 41, 100, 1), ConfigError);
  EXPECT_THROW(bootstrap_skill(std::vector<double>{}, 1, 100, 1), ConfigError);
}

TEST(Kde, NormalizedAndNonNegative) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const KdeCurve k = gaussian_kde(normal_sample(500, 3.0, 0.2, 20 + s));
    EXPECT_NEAR(k.integral(), 1.0, 1e-3);
    for (double d : k.density) EXPECT_GE(d, 0.0);
    EXPECT_GT(k.bandwidth, 0.0);
  }
  const checks::BootstrapCheck c = checks::bootstrap_check(7);
  EXPECT_NEAR(c.kde_integral, 1.0, 1e-3);
}

TEST(MeanSolution, SingleMemberEqualsItsRrmse) {
  const StaggeredGrid g(16, 8, 2.0);
  const ScalarField t = smooth_truth(g);
  const auto members = noisy_members(t, 1, 0.1, 30);
  const std::size_t sizes[] = {1};
  const SkillSeries s = mean_solution_skill(members, t, sizes, Variable::theta);
  ASSERT_EQ(s.values.size(), 1u);
  EXPECT_EQ(s.values[0], rrmse(members[0], t));
}

TEST(MeanSolution, DecaysAsInverseSqrtSubset) {
  const StaggeredGrid g(32, 16, 2.0);
  const ScalarField t = smooth_truth(g);
  const auto members = noisy_members(t, 160, 0.1, 31);
  const std::size_t sizes[] = {10, 20, 40, 80, 160};
  const SkillSeries s = mean_solution_skill(members, t, sizes, Variable::theta);
  EXPECT_NEAR(fit_loglog(s.times, s.values).slope, -0.5, 0.1);
  const SkillSeries again = mean_solution_skill(members, t, sizes, Variable::theta);
  EXPECT_EQ(s, again);
}

TEST(StatsCsv, Headers) {
  const StaggeredGrid g(16, 8, 1.0);
  std::stringstream ks;
  write_ks_csv(ks, ks_profile_scan(noisy_members(smooth_truth(g), 20, 0.1, 40)));
  EXPECT_EQ(ks.str().substr(0, ks.str().find('\n')), "x,plane,row,n,statistic,p,reject,degenerate");
  const std::vector<BootstrapResult> b{bootstrap_skill(normal_sample(20, 0, 1, 41), 10, 50, 1)};
  std::stringstream bs, kd;
  write_bootstrap_csv(bs, b);
  write_kde_csv(kd, b);
  EXPECT_EQ(bs.str().substr(0, bs.str().find('\n')), "subset,resamples,mean,std,q25,q75,bandwidth");
  EXPECT_EQ(kd.str().substr(0, kd.str().find('\n')), "subset,x,density");
}

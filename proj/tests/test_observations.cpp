#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "rbda/assimilation.hpp"
#include "rbda/experiment.hpp"
#include "rbda/observations.hpp"
#include "rbda/stats.hpp"

using namespace rbda;

namespace {

std::vector<FieldSet> snapshots(const StaggeredGrid& g, int count, double cadence,
                                std::uint64_t seed) {
  std::vector<FieldSet> out;
  for (int i = 0; i < count; ++i) {
    FieldSet fs = random_initial_state(g, seed + static_cast<std::uint64_t>(i));
    fs.time = i * cadence;
    out.push_back(std::move(fs));
  }
  return out;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

ObservationFrame zero_frame(std::size_t n) {
  ObservationFrame f;
  f.u.assign(n, 0.0);
  f.v.assign(n, 0.0);
  f.theta.assign(n, 0.0);
  return f;
}

}  // namespace

TEST(Subsample, UnitFactorReproducesNativeValues) {
  const StaggeredGrid g(12, 8, 1.5);
  const ObservationGrid og(g, 1);
  const FieldSet fs = random_initial_state(g, 1);
  const ObservationFrame f = subsample(fs, og, fs.time);
  ASSERT_EQ(f.theta.size(), fs.theta.size());
  for (std::size_t k = 0; k < f.theta.size(); ++k) {
    EXPECT_EQ(f.theta[k], fs.theta.data()[k]);
    EXPECT_EQ(f.u[k], fs.u.data()[k]);
    EXPECT_EQ(f.v[k], fs.v.data()[k]);
  }
}

TEST(Subsample, ConstantFieldGivesConstantFrame) {
  const StaggeredGrid g(20, 12, 2.0);
  const ObservationGrid og(g, 3);
  FieldSet fs(g);
  fs.theta.fill(0.75);
  fs.u.fill(-0.5);
  const ObservationFrame f = subsample(fs, og, 0.0);
  EXPECT_EQ(f.theta.size(), og.size());
  for (double x : f.theta) EXPECT_EQ(x, 0.75);
  for (double x : f.u) EXPECT_EQ(x, -0.5);
}

TEST(Subsample, LinearRampSampledAtCellCenters) {
  const StaggeredGrid g(16, 16, 1.0);
  const ObservationGrid og(g, 4);
  FieldSet fs(g);
  for (int j = 0; j < 16; ++j) {
    for (int i = 0; i < 16; ++i) fs.theta.at(i, j) = g.x(Location::cell_center, i);
  }
  const ObservationFrame f = subsample(fs, og, 0.0);
  for (std::size_t k = 0; k < og.size(); ++k) {
    EXPECT_DOUBLE_EQ(f.theta[k], (4.0 * static_cast<double>(k % 4) + 1.5) * g.hx());
  }
}

TEST(Subsample, TimeMismatchIsConfigError) {
  const StaggeredGrid g(8, 8, 1.0);
  const ObservationGrid og(g, 2);
  FieldSet fs(g, 1.0);
  EXPECT_THROW(subsample(fs, og, 1.5), ConfigError);
}

TEST(Perturb, ZeroNoiseIsBitExact) {
  const StaggeredGrid g(24, 12, 2.0);
  const ObservationGrid og(g, 4);
  const FieldSet fs = random_initial_state(g, 2);
  const ObservationFrame clean = subsample(fs, og, fs.time);
  ObservationFrame out = perturb(clean, NoiseSpec{0.0, 0.0, 99});
  EXPECT_EQ(out, clean);
}

TEST(Perturb, NominalNoiseMomentsMatch) {
  const std::size_t n = 100000;
  const ObservationFrame f = perturb(zero_frame(n), NoiseSpec{0.1, 0.05, 1234});
  const double mean = std::accumulate(f.theta.begin(), f.theta.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : f.theta) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1));
  EXPECT_LT(std::abs(mean), 3.0 * 0.1 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(sd, 0.1, 0.02 * 0.1);
  EXPECT_EQ(f.sigma_theta, 0.1);
  EXPECT_EQ(f.sigma_u, 0.05);
}

TEST(Perturb, DeterministicGivenSeed) {
  const ObservationFrame a = perturb(zero_frame(500), NoiseSpec{0.1, 0.05, 7});
  const ObservationFrame b = perturb(zero_frame(500), NoiseSpec{0.1, 0.05, 7});
  const ObservationFrame c = perturb(zero_frame(500), NoiseSpec{0.1, 0.05, 8});
  EXPECT_EQ(a, b);
  EXPECT_NE(a.theta, c.theta);
}

TEST(Perturb, DoublingSigmaDoublesNoiseExactly) {
  const ObservationFrame a = perturb(zero_frame(1000), NoiseSpec{0.1, 0.05, 3});
  const ObservationFrame b = perturb(zero_frame(1000), NoiseSpec{0.2, 0.1, 3});
  for (std::size_t k = 0; k < 1000; ++k) {
    EXPECT_EQ(b.theta[k], 2.0 * a.theta[k]);
    EXPECT_EQ(b.u[k], 2.0 * a.u[k]);
    EXPECT_EQ(b.v[k], 2.0 * a.v[k]);
  }
}

TEST(Perturb, NegativeSigmaIsConfigError) {
  EXPECT_THROW(perturb(zero_frame(4), NoiseSpec{-0.1, 0.05, 1}), ConfigError);
  EXPECT_THROW(perturb(zero_frame(4), NoiseSpec{0.1, std::nan(""), 1}), ConfigError);
}

TEST(Noise, VariablesAreUncorrelated) {
  const StaggeredGrid g(64, 32, 2.0);
  const ObservationGrid og(g, 2);
  std::vector<FieldSet> snaps;
  for (int i = 0; i < 20; ++i) snaps.emplace_back(g, i * 0.01);
  const auto streams = generate_ensemble(snaps, og, 10, 1e-3, NoiseSpec{0.1, 0.05, 77}, 5);
  std::vector<double> u, v, t;
  for (const auto& s : streams) {
    for (const auto& f : s) {
      u.insert(u.end(), f.u.begin(), f.u.end());
      v.insert(v.end(), f.v.begin(), f.v.end());
      t.insert(t.end(), f.theta.begin(), f.theta.end());
    }
  }
  ASSERT_GE(u.size(), 10000u);
  EXPECT_LT(std::abs(correlation(u, t)), 0.02);
  EXPECT_LT(std::abs(correlation(v, t)), 0.02);
  EXPECT_LT(std::abs(correlation(u, v)), 0.02);
}

TEST(GenerateEnsemble, NoiseFreeSingleMemberEqualsSubsampledTruth) {
  const StaggeredGrid g(24, 12, 2.0);
  const ObservationGrid og(g, 4);
  const auto snaps = snapshots(g, 5, 0.01, 3);
  const auto streams = generate_ensemble(snaps, og, 10, 1e-3, NoiseSpec{0.0, 0.0, 1}, 1);
  ASSERT_EQ(streams.size(), 1u);
  ASSERT_EQ(streams[0].size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    ObservationFrame expect = subsample(snaps[i], og, snaps[i].time, 10);
    EXPECT_EQ(streams[0][i].theta, expect.theta);
    EXPECT_EQ(streams[0][i].u, expect.u);
    EXPECT_EQ(streams[0][i].v, expect.v);
  }
}

TEST(GenerateEnsemble, MembersDifferAndRerunsReproduce) {
  const StaggeredGrid g(24, 12, 2.0);
  const ObservationGrid og(g, 4);
  const auto snaps = snapshots(g, 4, 0.01, 4);
  const NoiseSpec ns{0.1, 0.05, 2024};
  const auto a = generate_ensemble(snaps, og, 10, 1e-3, ns, 50);
  const auto b = generate_ensemble(snaps, og, 10, 1e-3, ns, 50);
  EXPECT_EQ(a, b);
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t m = 0; m < 50; ++m) {
      EXPECT_EQ(a[m][f].realization, m);
      for (std::size_t n = m + 1; n < 50; ++n) ASSERT_NE(a[m][f].theta, a[n][f].theta);
    }
  }
}

TEST(GenerateEnsemble, MemberStreamIndependentOfEnsembleSize) {
  const StaggeredGrid g(24, 12, 2.0);
  const ObservationGrid og(g, 4);
  const auto snaps = snapshots(g, 3, 0.01, 5);
  const NoiseSpec ns{0.1, 0.05, 5};
  const auto small = generate_ensemble(snaps, og, 10, 1e-3, ns, 3);
  const auto large = generate_ensemble(snaps, og, 10, 1e-3, ns, 10);
  for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(small[m], large[m]);
}

TEST(GenerateEnsemble, MeanConvergesAsInverseSqrtMembers) {
  const StaggeredGrid g(32, 16, 2.0);
  const ObservationGrid og(g, 2);
  const auto snaps = snapshots(g, 1, 0.01, 6);
  const ObservationFrame truth = subsample(snaps[0], og, 0.0, 10);
  const auto streams = generate_ensemble(snaps, og, 10, 1e-3, NoiseSpec{0.1, 0.05, 6}, 640);
  std::vector<double> ms, errs;
  for (std::size_t m : {10u, 40u, 160u, 640u}) {
    double ss = 0.0;
    for (std::size_t k = 0; k < og.size(); ++k) {
      double mean = 0.0;
      for (std::size_t r = 0; r < m; ++r) mean += streams[r][0].theta[k];
      mean /= static_cast<double>(m);
      ss += (mean - truth.theta[k]) * (mean - truth.theta[k]);
    }
    ms.push_back(static_cast<double>(m));
    errs.push_back(std::sqrt(ss / og.size()));
  }
  const LogLogFit fit = fit_loglog(ms, errs);
  EXPECT_NEAR(fit.slope, -0.5, 0.1);
}

TEST(GenerateEnsemble, GapInSnapshotsIsMissingInput) {
  const StaggeredGrid g(16, 8, 2.0);
  const ObservationGrid og(g, 4);
  auto snaps = snapshots(g, 5, 0.01, 7);
  snaps.erase(snaps.begin() + 2);
  try {
    generate_ensemble(snaps, og, 10, 1e-3, NoiseSpec{}, 2);
    FAIL() << "expected MissingInput";
  } catch (const MissingInput& e) {
    EXPECT_NE(std::string(e.what()).find("t=0.02"), std::string::npos) << e.what();
  }
  EXPECT_THROW(generate_ensemble({}, og, 10, 1e-3, NoiseSpec{}, 2), MissingInput);
  EXPECT_THROW(generate_ensemble(snapshots(g, 2, 0.01, 8), og, 10, 1e-3, NoiseSpec{}, 0),
               ConfigError);
}

TEST(ObservationStream, Rbobs01RoundTrip) {
  const StaggeredGrid g(24, 12, 2.0);
  const ObservationGrid og(g, 4);
  const auto snaps = snapshots(g, 3, 0.01, 9);
  ObservationStream s;
  s.nx = 24;
  s.ny = 12;
  s.lx = 2.0;
  s.r = 4;
  s.s = 10;
  s.seed = 424242;
  s.frames = generate_ensemble(snaps, og, 10, 1e-3, NoiseSpec{0.1, 0.05, 9}, 2)[1];
  std::stringstream ss;
  write_observation_stream(ss, s);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 8), std::string("RBOBS01\0", 8));
  const ObservationStream back = read_observation_stream(ss, "mem");
  EXPECT_EQ(back, s);

  std::string bad = bytes;
  bad[3] = 'X';
  std::stringstream b1(bad);
  EXPECT_THROW(read_observation_stream(b1, "bad"), ConfigError);
  std::stringstream b2(bytes.substr(0, bytes.size() - 8));
  EXPECT_THROW(read_observation_stream(b2, "short"), MissingInput);
  EXPECT_THROW(load_observation_stream("/nonexistent/x.rbobs"), MissingInput);
}

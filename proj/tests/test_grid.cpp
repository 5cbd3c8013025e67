#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "checks.hpp"
#include "rbda/experiment.hpp"
#include "rbda/grid.hpp"
#include "rbda/poisson.hpp"
#include "rbda/rng.hpp"
#include "rbda/snapshot.hpp"
#include "rbda/solver.hpp"

using namespace rbda;

namespace {

ScalarField random_field(const StaggeredGrid& g, Location loc, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScalarField f(g, loc);
  for (double& x : f.values()) x = u(rng);
  return f;
}

}  // namespace

TEST(StaggeredGrid, SpacingFollowsAspectRatio) {
  const StaggeredGrid g(192, 64, 3.0);
  EXPECT_DOUBLE_EQ(g.hx(), 3.0 / 192);
  EXPECT_DOUBLE_EQ(g.hy(), 1.0 / 64);
  EXPECT_TRUE(g.uniform());
  EXPECT_FALSE(StaggeredGrid(10, 8, 3.0).uniform());
  EXPECT_DOUBLE_EQ(g.area(), 3.0);
}

TEST(StaggeredGrid, RejectsTinyOrDegenerateGrids) {
  EXPECT_THROW(StaggeredGrid(3, 8, 1.0), ConfigError);
  EXPECT_THROW(StaggeredGrid(8, 3, 1.0), ConfigError);
  EXPECT_THROW(StaggeredGrid(8, 8, 0.0), ConfigError);
  EXPECT_THROW(StaggeredGrid(8, 8, std::nan("")), ConfigError);
}

TEST(ScalarField, SizedPerLocation) {
  const StaggeredGrid g(8, 6, 1.0);
  EXPECT_EQ(ScalarField(g, Location::cell_center).size(), 48u);
  EXPECT_EQ(ScalarField(g, Location::x_face).size(), 48u);
  EXPECT_EQ(ScalarField(g, Location::y_face).size(), 56u);
  EXPECT_THROW(ScalarField(g, Location::y_face, std::vector<double>(48)), ConfigError);
}

TEST(ScalarField, HealthCheckSeesNonFinite) {
  const StaggeredGrid g(4, 4, 1.0);
  ScalarField f(g, Location::cell_center, 1.0);
  EXPECT_TRUE(f.all_finite());
  f.at(2, 3) = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(f.all_finite());
}

TEST(ScalarField, ArithmeticChecksCompatibility) {
  const StaggeredGrid g(4, 4, 1.0);
  ScalarField a(g, Location::cell_center, 1.0);
  const ScalarField b(g, Location::x_face, 1.0);
  EXPECT_THROW(a += b, ConfigError);
  const ScalarField c(StaggeredGrid(8, 4, 1.0), Location::cell_center, 1.0);
  EXPECT_THROW(a -= c, ConfigError);
}

TEST(Divergence, ConstantVelocityIsDivergenceFree) {
  const StaggeredGrid g(16, 8, 2.0);
  FieldSet fs(g);
  fs.u.fill(1.0);
  EXPECT_EQ(divergence(fs).max_abs(), 0.0);
}

TEST(Divergence, MatchesBruteForceStencil) {
  const StaggeredGrid g(8, 8, 1.0);
  const double k = 2.0 * std::numbers::pi / g.width();
  ScalarField u(g, Location::x_face);
  for (int j = 0; j < 8; ++j) {
    for (int i = 0; i < 8; ++i) u.at(i, j) = std::sin(k * g.x(Location::x_face, i));
  }
  ScalarField v = random_field(g, Location::y_face, 5);
  for (double& x : v.row(0)) x = 0.0;
  for (double& x : v.row(8)) x = 0.0;
  const ScalarField d = divergence(u, v);
  for (int j = 0; j < 8; ++j) {
    for (int i = 0; i < 8; ++i) {
      const double expect = (u.at((i + 1) % 8, j) - u.at(i, j)) / g.hx() +
                            (v.at(i, j + 1) - v.at(i, j)) / g.hy();
      EXPECT_NEAR(d.at(i, j), expect, 1e-12) << i << "," << j;
    }
  }
}

TEST(Divergence, GridMismatchIsConfigError) {
  const ScalarField u(StaggeredGrid(8, 8, 1.0), Location::x_face);
  const ScalarField v(StaggeredGrid(16, 8, 1.0), Location::y_face);
  EXPECT_THROW(divergence(u, v), ConfigError);
}

TEST(AdvectScalar, ZeroForConstantScalarInSolenoidalFlow) {
  const StaggeredGrid g(32, 16, 2.0);
  PoissonSolver solver(g);
  const FieldSet fs = project(random_initial_state(g, 4), 1.0, solver);
  const ScalarField s(g, Location::cell_center, 3.5);
  EXPECT_LT(advect_scalar(fs, s).max_abs(), 1e-9);
}

TEST(AdvectScalar, CheckerboardAtRestGivesZero) {
  const StaggeredGrid g(4, 4, 1.0);
  const FieldSet fs(g);
  ScalarField s(g, Location::cell_center);
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) s.at(i, j) = (i + j) % 2 ? 1.0 : -1.0;
  }
  EXPECT_EQ(advect_scalar(fs, s).max_abs(), 0.0);
}

TEST(AdvectScalar, WrongLocationIsConfigError) {
  const StaggeredGrid g(8, 8, 1.0);
  const FieldSet fs(g);
  EXPECT_THROW(advect_scalar(fs, fs.u), ConfigError);
}

TEST(AdvectScalar, ConservesDomainIntegral) {
  const StaggeredGrid g(32, 16, 2.0);
  PoissonSolver solver(g);
  const FieldSet fs = project(random_initial_state(g, 8), 1.0, solver);
  const ScalarField s = random_field(g, Location::cell_center, 9);
  const ScalarField t = advect_scalar(fs, s);
  EXPECT_LT(std::abs(t.sum()) * g.cell_area(), 1e-12 * t.max_abs() * g.area() + 1e-13);
}

TEST(Diffuse, AffineInYHasZeroInteriorLaplacian) {
  const StaggeredGrid g(8, 8, 1.0);
  ScalarField s(g, Location::cell_center);
  for (int j = 0; j < 8; ++j) {
    for (int i = 0; i < 8; ++i) s.at(i, j) = 0.25 + 2.0 * g.y(Location::cell_center, j);
  }
  const ScalarField l = diffuse(s, 1.0);
  for (int j = 1; j < 7; ++j) {
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(l.at(i, j), 0.0, 1e-10);
  }
}

TEST(Diffuse, ZeroCoefficientGivesZeroAndNegativeThrows) {
  const StaggeredGrid g(8, 8, 1.0);
  const ScalarField s = random_field(g, Location::x_face, 2);
  EXPECT_EQ(diffuse(s, 0.0).max_abs(), 0.0);
  EXPECT_THROW(diffuse(s, -1.0), ConfigError);
}

TEST(Diffuse, YFaceWallRowsAreZero) {
  const StaggeredGrid g(8, 8, 1.0);
  const ScalarField l = diffuse(random_field(g, Location::y_face, 3), 1.0);
  for (double x : l.row(0)) EXPECT_EQ(x, 0.0);
  for (double x : l.row(8)) EXPECT_EQ(x, 0.0);
}

TEST(BoundaryConditions, NoPenetrationAndGhostReflection) {
  const StaggeredGrid g(8, 6, 1.0);
  FieldSet fs(g);
  fs.u = random_field(g, Location::x_face, 1);
  fs.v = random_field(g, Location::y_face, 2);
  fs.theta = random_field(g, Location::cell_center, 3);
  fs = apply_boundary_conditions(std::move(fs));
  for (double x : fs.v.row(0)) EXPECT_EQ(x, 0.0);
  for (double x : fs.v.row(6)) EXPECT_EQ(x, 0.0);
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(0.5 * (wall_ghost(fs.u, i, 0) + fs.u.at(i, 0)), 0.0);
    EXPECT_EQ(0.5 * (wall_ghost(fs.u, i, 1) + fs.u.at(i, 5)), 0.0);
    EXPECT_EQ(0.5 * (wall_ghost(fs.theta, i, 0) + fs.theta.at(i, 0)), 0.0);
    EXPECT_EQ(0.5 * (wall_ghost(fs.theta, i, 1) + fs.theta.at(i, 5)), 0.0);
  }
  for (int j = 0; j < 6; ++j) {
    EXPECT_EQ(fs.u.wrapped(8, j), fs.u.at(0, j));
    EXPECT_EQ(fs.theta.wrapped(-1, j), fs.theta.at(7, j));
  }
}

TEST(GradientDivergence, AreNegativeAdjoints) {
  const StaggeredGrid g(12, 8, 1.5);
  const ScalarField p = random_field(g, Location::cell_center, 4);
  ScalarField u = random_field(g, Location::x_face, 5);
  ScalarField v = random_field(g, Location::y_face, 6);
  for (double& x : v.row(0)) x = 0.0;
  for (double& x : v.row(8)) x = 0.0;
  const auto [gx, gy] = gradient(p);
  const ScalarField d = divergence(u, v);
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) lhs += p.data()[k] * d.data()[k];
  for (std::size_t k = 0; k < u.size(); ++k) rhs -= u.data()[k] * gx.data()[k];
  for (std::size_t k = 0; k < v.size(); ++k) rhs -= v.data()[k] * gy.data()[k];
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
}

class SpatialOrder : public ::testing::TestWithParam<checks::SpatialCase> {};

TEST_P(SpatialOrder, IsSecondOrder) {
  const checks::OrderStudy s = checks::spatial_order_study(GetParam());
  EXPECT_NEAR(s.order, 2.0, 0.2) << "errors " << s.error.front() << " .. " << s.error.back();
}

INSTANTIATE_TEST_SUITE_P(Operators, SpatialOrder,
                         ::testing::Values(checks::SpatialCase::advect_theta,
                                           checks::SpatialCase::advect_momentum,
                                           checks::SpatialCase::diffuse_fields,
                                           checks::SpatialCase::uniform_strip),
                         [](const auto& info) { return checks::to_string(info.param); });

TEST(Snapshot, RoundTripIsBitExact) {
  const StaggeredGrid g(12, 8, 3.0);
  FieldSet fs = random_initial_state(g, 21);
  fs.pressure = random_field(g, Location::cell_center, 22);
  fs.time = 1.2345678901234567;
  std::stringstream ss;
  write_snapshot(ss, fs);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 8), std::string("RBSNAP01", 8));
  const std::size_t expected = 8 + 4 + 4 + 3 * 8 + 4 * 8 + 8 * (3 * 96 + 108);
  EXPECT_EQ(bytes.size(), expected);
  const FieldSet back = read_snapshot(ss);
  EXPECT_EQ(back, fs);
}

TEST(Snapshot, BadMagicAndTruncationAreReported) {
  const StaggeredGrid g(4, 4, 1.0);
  std::stringstream ss;
  write_snapshot(ss, FieldSet(g));
  std::string bytes = ss.str();
  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream b1(bad);
  EXPECT_THROW(read_snapshot(b1), ConfigError);
  std::stringstream b2(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_snapshot(b2), MissingInput);
  EXPECT_THROW(load_snapshot("/nonexistent/snap.rbsnap"), MissingInput);
}

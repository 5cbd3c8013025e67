#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "rbda/config.hpp"

using namespace rbda;

TEST(ExperimentConfig, DeskDefaults) {
  const ExperimentConfig c = ExperimentConfig::desk();
  EXPECT_EQ(c.ra, 1e6);
  EXPECT_EQ(c.nx, 192);
  EXPECT_EQ(c.ny, 64);
  EXPECT_EQ(c.dt, 1e-3);
  EXPECT_EQ(c.horizon, 20.0);
  EXPECT_EQ(c.members, 20);
  EXPECT_EQ(c.steps(), 20000);
  EXPECT_NO_THROW(c.validate());
}

TEST(ExperimentConfig, PaperNominalIsExpressibleVerbatim) {
  const ExperimentConfig d = ExperimentConfig::paper(Algorithm::dda);
  EXPECT_EQ(d.ra, 2e8);
  EXPECT_EQ(d.pr, 0.7);
  EXPECT_EQ(d.nx, 1200);
  EXPECT_EQ(d.ny, 400);
  EXPECT_EQ(d.lx, 3.0);
  EXPECT_EQ(d.dt, 5e-4);
  EXPECT_EQ(d.r, 5);
  EXPECT_EQ(d.s, 10);
  EXPECT_EQ(d.sigma_theta, 0.1);
  EXPECT_EQ(d.sigma_u, 0.05);
  EXPECT_EQ(d.mu_u, 7.0);
  EXPECT_EQ(d.mu_theta, 7.0);
  EXPECT_EQ(d.horizon, 49.9);
  EXPECT_EQ(d.steps(), 99800);
  EXPECT_NO_THROW(d.validate());
  const ExperimentConfig c = ExperimentConfig::paper(Algorithm::cda);
  EXPECT_EQ(c.algorithm, Algorithm::cda);
  EXPECT_EQ(c.mu_u, 3.0);
  EXPECT_EQ(c.horizon, 15.0);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(ExperimentConfig::for_profile(parse_profile("paper")), d);
  EXPECT_THROW(parse_profile("laptop"), ConfigError);
}

TEST(ExperimentConfig, SerializeRoundTrip) {
  for (ExperimentConfig c : {ExperimentConfig::desk(), ExperimentConfig::paper(Algorithm::cda)}) {
    c.seed_noise = 0xfedcba9876543210ULL;
    c.sigma_theta = 0.1 + 1e-17;
    c.sweep_sigma = {0.01, 0.3};
    c.sweep_algorithms = {Algorithm::dda};
    c.preset = "noise_sweep";
    c.out_dir = "results/run 1";
    const ExperimentConfig back = parse_config(c.serialize(), "mem");
    EXPECT_EQ(back, c);
    EXPECT_EQ(back.serialize(), c.serialize());
    EXPECT_EQ(back.hash(), c.hash());
  }
}

TEST(ExperimentConfig, HashTracksEveryChange) {
  const ExperimentConfig base = ExperimentConfig::desk();
  EXPECT_EQ(base.hash(), ExperimentConfig::desk().hash());
  ExperimentConfig c = base;
  c.seed_initial += 1;
  EXPECT_NE(c.hash(), base.hash());
  c = base;
  c.sweep_r.push_back(32);
  EXPECT_NE(c.hash(), base.hash());
  c = base;
  c.mu_theta = 0.0;
  EXPECT_NE(c.hash(), base.hash());
  EXPECT_EQ(hex64(0x1), "0000000000000001");
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(ParseConfig, CommentsBlankLinesAndOverrides) {
  const ExperimentConfig c = parse_config(
      "# desk variant\n"
      "\n"
      "physics.ra = 1e4   # weaker forcing\n"
      "grid.nx=32\n"
      "grid.ny=16\n"
      "nudging.algorithm=cda\n"
      "sweep.sigma=0.05, 0.1\n"
      "stats.ks_method=asymptotic\n",
      "mem");
  EXPECT_EQ(c.ra, 1e4);
  EXPECT_EQ(c.nx, 32);
  EXPECT_EQ(c.algorithm, Algorithm::cda);
  EXPECT_EQ(c.sweep_sigma, (std::vector<double>{0.05, 0.1}));
  EXPECT_EQ(c.ks_method, KSMethod::asymptotic);
  EXPECT_EQ(c.pr, 0.7);
}

TEST(ParseConfig, ErrorsNameTheLine) {
  try {
    parse_config("grid.nx=32\nnot a pair\n", "cfg.txt");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.txt:2"), std::string::npos) << e.what();
  }
  try {
    parse_config("grid.nx=32\n\nphysics.rayleigh=3\n", "cfg.txt");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.txt:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config("grid.nx=thirty\n", "m"), ConfigError);
  EXPECT_THROW(parse_config("physics.ra=1e6x\n", "m"), ConfigError);
  EXPECT_THROW(parse_config("nudging.algorithm=enkf\n", "m"), ConfigError);
}

TEST(Validate, StepCountsMustBeIntegral) {
  ExperimentConfig c = ExperimentConfig::desk();
  c.horizon = 20.0005;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::desk();
  c.spinup = 0.00025;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::desk();
  c.metric_stride = 300;  // 20000 steps is not a whole number of strides
  c.field_stride = 900;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::desk();
  c.field_stride = 150;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Validate, RejectsOutOfRangeParameters) {
  auto bad = [](auto mutate) {
    ExperimentConfig c = ExperimentConfig::desk();
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  bad([](ExperimentConfig& c) { c.ra = -1.0; });
  bad([](ExperimentConfig& c) { c.nx = 2; });
  bad([](ExperimentConfig& c) { c.dt = 0.0; });
  bad([](ExperimentConfig& c) { c.s = 0; });
  bad([](ExperimentConfig& c) { c.r = 0; });
  bad([](ExperimentConfig& c) { c.r = 100; });
  bad([](ExperimentConfig& c) { c.mu_u = -1.0; });
  bad([](ExperimentConfig& c) { c.sigma_theta = -0.1; });
  bad([](ExperimentConfig& c) { c.members = 0; });
  bad([](ExperimentConfig& c) { c.plateau_fraction = 1.0; });
  bad([](ExperimentConfig& c) { c.sweep_r = {2, 0}; });
}

TEST(LoadConfig, MissingFileIsMissingInput) {
  EXPECT_THROW(load_config("/nonexistent/run.cfg"), MissingInput);
  const auto path = std::filesystem::temp_directory_path() / "rbda_test_config.cfg";
  {
    std::ofstream os(path);
    os << "obs.members=5\nseeds.noise=77\n";
  }
  const ExperimentConfig c = load_config(path);
  EXPECT_EQ(c.members, 5);
  EXPECT_EQ(c.seed_noise, 77u);
  std::filesystem::remove(path);
}

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rbda/config.hpp"
#include "rbda/experiment.hpp"
#include "rbda/metrics.hpp"
#include "rbda/stats.hpp"

namespace rbda {

struct MemberSummary {
  std::string member;
  Variable variable = Variable::theta;
  double rrmse_final = 0.0;
  double rrmse_plateau = 0.0;
  double plateau_onset = 0.0;
};

struct PointAnalysis {
  ExperimentConfig cfg;
  std::vector<SkillSeries> ensemble;  // Lambda, AES read back
  std::array<double, 3> lambda_final{};
  std::array<double, 3> lambda_plateau{};
  std::vector<MemberSummary> members;
  std::optional<KSScan> ks;  // needs >= 20 final states
  std::vector<BootstrapResult> bootstrap;
  std::vector<SkillSeries> mean_solution;  // per variable, over subset size
  std::vector<std::string> notes;
};

/// Post-processes a point directory written by run_point (config.cfg,
/// metrics.csv, ensemble.csv, truth_final.rbsnap, final/member_*.rbsnap)
/// without re-simulating, and writes the results below dir / "analysis".
PointAnalysis analyze_point(const std::filesystem::path& dir, std::uint64_t seed,
                            const LogSink& log = {});

/// Subset sizes used for bootstrap summaries: 10, 20, ... up to n, or {n}
/// when n < 10.
std::vector<std::size_t> bootstrap_subsets(std::size_t n);

}  // namespace rbda

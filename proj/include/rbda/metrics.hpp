#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rbda/grid.hpp"

namespace rbda {

// Scores are evaluated over the prognostic points of a field: every stored
// value, except the two wall rows of a y-face field where v = 0 by
// construction.

/// sqrt(mean((d - t)^2)).
double rmse(const ScalarField& downscaled, const ScalarField& truth);

/// ||d - t||_2 / ||t||_2. Throws UndefinedMetric when truth is zero.
double rrmse(const ScalarField& downscaled, const ScalarField& truth);

/// mean(|d - t|).
double abs_error(const ScalarField& downscaled, const ScalarField& truth);

/// Average ensemble spread, sqrt(sum_k sum_i (Z_k(x_i) - mean(x_i))^2 / (N - 1)).
/// Note the sum over points: the value grows with the number of points and
/// does not shrink with N. Throws ConfigError for fewer than two members.
double aes(std::span<const ScalarField> members);

/// Spread of the ensemble-mean estimator, aes / sqrt(N). Decays as 1/sqrt(N)
/// for independent members.
double mean_estimator_spread(std::span<const ScalarField> members);

/// Ensemble average of the midpoint-rule integral sum_i (Z_d - Z_t)^2 hx hy.
double lambda(std::span<const ScalarField> members, const ScalarField& truth);

/// Pointwise mean of the members.
ScalarField ensemble_mean(std::span<const ScalarField> members);

enum class Score { ae, rmse, rrmse, aes, lambda };
enum class Variable { u, v, theta };

std::string_view to_string(Score s);
std::string_view to_string(Variable v);
Score parse_score(std::string_view text);
Variable parse_variable(std::string_view text);

/// Field of `fs` holding the given variable.
const ScalarField& field_of(const FieldSet& fs, Variable v);

inline constexpr std::string_view ensemble_member = "ensemble";

/// Time series of one score for one variable and one member (or "ensemble").
struct SkillSeries {
  Score score = Score::rrmse;
  Variable variable = Variable::theta;
  std::string member = std::string(ensemble_member);
  std::vector<double> times;
  std::vector<double> values;

  /// Appends a sample; throws ConfigError if time does not increase or the
  /// value is negative or not finite.
  void append(double time, double value);
  /// Checks the series invariants, including that AES and Lambda series
  /// belong to the ensemble.
  void validate() const;
  bool empty() const noexcept { return values.empty(); }
  double last() const;

  friend bool operator==(const SkillSeries&, const SkillSeries&) = default;
};

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_real(double x);

inline constexpr std::string_view skill_csv_header = "time,value,score,variable,member,run_id";

/// One row per sample: time,value,score,variable,member,run_id.
void write_skill_csv(std::ostream& os, std::span<const SkillSeries> series,
                     std::string_view run_id);

struct SkillCsv {
  std::string run_id;
  std::vector<SkillSeries> series;
};

/// Parses files produced by write_skill_csv; rows are grouped back into
/// series keyed by (score, variable, member) in order of first appearance.
SkillCsv read_skill_csv(std::istream& is, const std::string& source);

}  // namespace rbda

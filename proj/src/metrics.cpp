#include "rbda/metrics.hpp"

#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <tuple>
#include <vector>

#include "rbda/error.hpp"

namespace rbda {

namespace {

// Rows of `s` that carry prognostic values.
std::pair<int, int> prognostic_rows(const ScalarField& s) {
  if (s.location() == Location::y_face) return {1, s.rows() - 1};
  return {0, s.rows()};
}

std::size_t prognostic_count(const ScalarField& s) {
  const auto [j0, j1] = prognostic_rows(s);
  return static_cast<std::size_t>(j1 - j0) * static_cast<std::size_t>(s.nx());
}

template <class F>
void for_each_pair(const ScalarField& a, const ScalarField& b, F&& f) {
  a.require_compatible(b, "score");
  const auto [j0, j1] = prognostic_rows(a);
  for (int j = j0; j < j1; ++j) {
    const auto ra = a.row(j);
    const auto rb = b.row(j);
    for (std::size_t i = 0; i < ra.size(); ++i) f(ra[i], rb[i]);
  }
}

void require_members(std::span<const ScalarField> members, std::size_t minimum,
                     std::string_view what) {
  if (members.size() < minimum) {
    throw ConfigError(std::string(what) + " needs at least " + std::to_string(minimum) +
                      " members, got " + std::to_string(members.size()));
  }
  for (const ScalarField& m : members) members.front().require_compatible(m, what);
}

}  // namespace

double rmse(const ScalarField& downscaled, const ScalarField& truth) {
  double acc = 0.0;
  for_each_pair(downscaled, truth, [&](double d, double t) { acc += (d - t) * (d - t); });
  return std::sqrt(acc / static_cast<double>(prognostic_count(truth)));
}

double rrmse(const ScalarField& downscaled, const ScalarField& truth) {
  double num = 0.0;
  double den = 0.0;
  for_each_pair(downscaled, truth, [&](double d, double t) {
    num += (d - t) * (d - t);
    den += t * t;
  });
  if (den == 0.0) throw UndefinedMetric("RRMSE is undefined for an identically zero truth");
  return std::sqrt(num / den);
}

double abs_error(const ScalarField& downscaled, const ScalarField& truth) {
  double acc = 0.0;
  for_each_pair(downscaled, truth, [&](double d, double t) { acc += std::abs(d - t); });
  return acc / static_cast<double>(prognostic_count(truth));
}

ScalarField ensemble_mean(std::span<const ScalarField> members) {
  require_members(members, 1, "ensemble mean");
  ScalarField mean(members.front().grid(), members.front().location());
  for (const ScalarField& m : members) mean += m;
  mean *= 1.0 / static_cast<double>(members.size());
  return mean;
}

double aes(std::span<const ScalarField> members) {
  require_members(members, 2, "AES");
  // Deviations are shift invariant; deviating from the first member keeps
  // identical members at exactly zero spread.
  const ScalarField& origin = members.front();
  std::vector<ScalarField> shifted;
  shifted.reserve(members.size());
  for (const ScalarField& m : members) shifted.push_back(m - origin);
  const ScalarField mean = ensemble_mean(shifted);
  double acc = 0.0;
  for (const ScalarField& m : shifted) {
    for_each_pair(m, mean, [&](double z, double zbar) { acc += (z - zbar) * (z - zbar); });
  }
  return std::sqrt(acc / static_cast<double>(members.size() - 1));
}

double mean_estimator_spread(std::span<const ScalarField> members) {
  return aes(members) / std::sqrt(static_cast<double>(members.size()));
}

double lambda(std::span<const ScalarField> members, const ScalarField& truth) {
  require_members(members, 1, "Lambda");
  const double cell = truth.grid().cell_area();
  double acc = 0.0;
  for (const ScalarField& m : members) {
    double integral = 0.0;
    for_each_pair(m, truth, [&](double d, double t) { integral += (d - t) * (d - t); });
    acc += integral * cell;
  }
  return acc / static_cast<double>(members.size());
}

std::string_view to_string(Score s) {
  switch (s) {
    case Score::ae: return "AE";
    case Score::rmse: return "RMSE";
    case Score::rrmse: return "RRMSE";
    case Score::aes: return "AES";
    case Score::lambda: return "Lambda";
  }
  return "?";
}

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::u: return "u";
    case Variable::v: return "v";
    case Variable::theta: return "theta";
  }
  return "?";
}

Score parse_score(std::string_view text) {
  for (Score s : {Score::ae, Score::rmse, Score::rrmse, Score::aes, Score::lambda}) {
    if (text == to_string(s)) return s;
  }
  throw ConfigError("unknown score '" + std::string(text) + "'");
}

Variable parse_variable(std::string_view text) {
  for (Variable v : {Variable::u, Variable::v, Variable::theta}) {
    if (text == to_string(v)) return v;
  }
  throw ConfigError("unknown variable '" + std::string(text) + "'");
}

const ScalarField& field_of(const FieldSet& fs, Variable v) {
  switch (v) {
    case Variable::u: return fs.u;
    case Variable::v: return fs.v;
    case Variable::theta: return fs.theta;
  }
  return fs.theta;
}

void SkillSeries::append(double time, double value) {
  if (!times.empty() && !(time > times.back())) {
    throw ConfigError("skill series times must increase strictly");
  }
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ConfigError("skill score must be finite and non-negative, got " + format_real(value));
  }
  times.push_back(time);
  values.push_back(value);
}

void SkillSeries::validate() const {
  if (times.size() != values.size()) throw ConfigError("skill series length mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw ConfigError("skill series times must increase strictly");
    }
    if (!(values[i] >= 0.0)) throw ConfigError("skill score must be non-negative");
  }
  if ((score == Score::aes || score == Score::lambda) && member != ensemble_member) {
    throw ConfigError(std::string(to_string(score)) + " series must belong to the ensemble");
  }
}

double SkillSeries::last() const {
  if (values.empty()) throw UndefinedMetric("empty skill series");
  return values.back();
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_skill_csv(std::ostream& os, std::span<const SkillSeries> series,
                     std::string_view run_id) {
  os << skill_csv_header << '\n';
  for (const SkillSeries& s : series) {
    s.validate();
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      os << format_real(s.times[i]) << ',' << format_real(s.values[i]) << ','
         << to_string(s.score) << ',' << to_string(s.variable) << ',' << s.member << ','
         << run_id << '\n';
    }
  }
}

namespace {

double parse_real(std::string_view text, const std::string& where) {
  // strtod handles the full %.17g output, including inf/nan spellings.
  std::string buf(text);
  char* end = nullptr;
  const double x = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size()) {
    throw ConfigError(where + ": not a number '" + buf + "'");
  }
  return x;
}

}  // namespace

SkillCsv read_skill_csv(std::istream& is, const std::string& source) {
  std::string line;
  if (!std::getline(is, line)) throw MissingInput(source + ": empty skill CSV");
  if (line != skill_csv_header) throw ConfigError(source + ": unexpected CSV header");
  SkillCsv out;
  std::map<std::tuple<Score, Variable, std::string>, std::size_t> index;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      cols.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 6) throw ConfigError(where + ": expected 6 columns");
    const Score score = parse_score(cols[2]);
    const Variable var = parse_variable(cols[3]);
    std::string member(cols[4]);
    if (out.series.empty()) out.run_id = std::string(cols[5]);
    auto key = std::make_tuple(score, var, member);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.series.size()).first;
      out.series.push_back(SkillSeries{score, var, member, {}, {}});
    }
    out.series[it->second].append(parse_real(cols[0], where), parse_real(cols[1], where));
  }
  return out;
}

}  // namespace rbda

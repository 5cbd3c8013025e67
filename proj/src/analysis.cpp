#include "rbda/analysis.hpp"

#include <algorithm>
#include <fstream>

#include "rbda/error.hpp"
#include "rbda/snapshot.hpp"

namespace rbda {

namespace fs = std::filesystem;

namespace {

SkillCsv read_csv_file(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw MissingInput("missing " + p.string());
  return read_skill_csv(is, p.string());
}

template <class F>
void write_file(const fs::path& path, F&& fn) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  fn(os);
  if (!os) throw Error("failed writing " + path.string());
}

}  // namespace

std::vector<std::size_t> bootstrap_subsets(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t k = 10; k <= n; k += 10) out.push_back(k);
  if (out.empty() && n > 0) out.push_back(n);
  return out;
}

PointAnalysis analyze_point(const fs::path& dir, std::uint64_t seed, const LogSink& log) {
  PointAnalysis a;
  auto note = [&](std::string s) {
    if (log) log("note: " + s);
    a.notes.push_back(std::move(s));
  };
  a.cfg = load_config(dir / "config.cfg");
  const SkillCsv metrics = read_csv_file(dir / "metrics.csv");
  if (fs::exists(dir / "ensemble.csv")) a.ensemble = read_csv_file(dir / "ensemble.csv").series;

  const double t_end = a.cfg.horizon;
  const double t_plateau = a.cfg.plateau_fraction * t_end;
  for (const SkillSeries& s : a.ensemble) {
    if (s.score != Score::lambda) continue;
    const auto vi = static_cast<std::size_t>(s.variable);
    a.lambda_final[vi] = s.last();
    a.lambda_plateau[vi] = window_mean(s.times, s.values, t_plateau);
  }
  for (const SkillSeries& s : metrics.series) {
    if (s.score != Score::rrmse) continue;
    a.members.push_back({s.member, s.variable, s.last(), window_mean(s.times, s.values, t_plateau),
                         plateau_onset(s, 0.2 * t_end)});
  }

  // Final states for distribution tests and mean-solution skill.
  const FieldSet truth = load_snapshot(dir / "truth_final.rbsnap");
  std::vector<fs::path> finals;
  if (fs::exists(dir / "final")) {
    for (const auto& e : fs::directory_iterator(dir / "final")) {
      if (e.path().extension() == ".rbsnap") finals.push_back(e.path());
    }
  }
  std::sort(finals.begin(), finals.end());
  std::vector<FieldSet> states;
  for (const fs::path& p : finals) states.push_back(load_snapshot(p));

  if (!states.empty()) {
    for (Variable v : {Variable::u, Variable::v, Variable::theta}) {
      std::vector<ScalarField> fields;
      for (const FieldSet& s : states) fields.push_back(field_of(s, v));
      std::vector<std::size_t> sizes(fields.size());
      for (std::size_t k = 0; k < sizes.size(); ++k) sizes[k] = k + 1;
      a.mean_solution.push_back(mean_solution_skill(fields, field_of(truth, v), sizes, v));
    }
  }
  if (states.size() >= ks_min_samples) {
    std::vector<ScalarField> thetas;
    for (const FieldSet& s : states) thetas.push_back(s.theta);
    a.ks = ks_profile_scan(thetas, default_planes(), a.cfg.ks_method);
    for (const PlaneSnap& p : a.ks->planes) {
      if (p.offset != 0.0) {
        note("plane y=" + format_real(p.plane) + " snapped to row " + std::to_string(p.row) +
             " (offset " + format_real(p.offset) + ")");
      }
    }
  } else {
    note("KS profile scan skipped: " + std::to_string(states.size()) +
         " final states, at least 20 are needed");
  }

  std::vector<double> finals_theta;
  for (const MemberSummary& m : a.members) {
    if (m.variable == Variable::theta) finals_theta.push_back(m.rrmse_final);
  }
  for (std::size_t k : bootstrap_subsets(finals_theta.size())) {
    a.bootstrap.push_back(bootstrap_skill(finals_theta, k,
                                          static_cast<std::size_t>(a.cfg.bootstrap_resamples),
                                          seed));
  }

  const fs::path out = dir / "analysis";
  fs::create_directories(out);
  write_file(out / "lambda.csv", [&](std::ostream& os) {
    os << "variable,lambda_final,lambda_plateau,plateau_start\n";
    for (Variable v : {Variable::u, Variable::v, Variable::theta}) {
      const auto vi = static_cast<std::size_t>(v);
      os << to_string(v) << ',' << format_real(a.lambda_final[vi]) << ','
         << format_real(a.lambda_plateau[vi]) << ',' << format_real(t_plateau) << '\n';
    }
  });
  write_file(out / "boxplot.csv", [&](std::ostream& os) {
    os << "member,variable,rrmse_final,rrmse_plateau,plateau_onset\n";
    for (const MemberSummary& m : a.members) {
      os << m.member << ',' << to_string(m.variable) << ',' << format_real(m.rrmse_final) << ','
         << format_real(m.rrmse_plateau) << ',' << format_real(m.plateau_onset) << '\n';
    }
  });
  if (!a.mean_solution.empty()) {
    write_file(out / "mean_solution.csv", [&](std::ostream& os) {
      os << "subset,variable,rrmse\n";
      for (const SkillSeries& s : a.mean_solution) {
        for (std::size_t i = 0; i < s.values.size(); ++i) {
          os << static_cast<std::size_t>(s.times[i]) << ',' << to_string(s.variable) << ','
             << format_real(s.values[i]) << '\n';
        }
      }
    });
  }
  if (a.ks) write_file(out / "ks.csv", [&](std::ostream& os) { write_ks_csv(os, *a.ks); });
  if (!a.bootstrap.empty()) {
    write_file(out / "bootstrap.csv",
               [&](std::ostream& os) { write_bootstrap_csv(os, a.bootstrap); });
    write_file(out / "kde.csv", [&](std::ostream& os) { write_kde_csv(os, a.bootstrap); });
  }
  return a;
}

}  // namespace rbda

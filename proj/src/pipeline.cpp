#include "rbda/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "rbda/error.hpp"
#include "rbda/rng.hpp"
#include "rbda/snapshot.hpp"
#include "rbda/stats.hpp"

namespace rbda {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw Error("failed writing " + path.string());
}

template <class F>
void write_stream(const fs::path& path, F&& fn) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  fn(os);
  if (!os) throw Error("failed writing " + path.string());
}

std::string short_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

json spec_json(const MemberSpec& m) {
  return json{{"index", m.index},
              {"algorithm", std::string(to_string(m.algorithm))},
              {"r", m.key.r},
              {"s", m.key.s},
              {"sigma_theta", m.sigma_theta},
              {"sigma_u", m.sigma_u},
              {"mu_u", m.mu_u},
              {"mu_theta", m.mu_theta},
              {"noise_seed", m.noise_seed},
              {"initial_seed", m.initial_seed}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

ManifestWriter::ManifestWriter(fs::path dir, const ExperimentConfig& cfg, std::string command)
    : dir_(std::move(dir)),
      command_(std::move(command)),
      config_text_(cfg.serialize()),
      config_hash_(cfg.hash()) {
  fs::create_directories(dir_);
}

void ManifestWriter::add_file(const fs::path& path, std::string kind) {
  std::lock_guard lock(mutex_);
  files_.push_back({fs::relative(path, dir_).generic_string(), std::move(kind)});
}

void ManifestWriter::add_point(const std::string& id, const ExperimentConfig& point_cfg) {
  std::lock_guard lock(mutex_);
  points_.emplace_back(id, hex64(point_cfg.hash()));
}

void ManifestWriter::record_member(MemberRecord record) {
  std::lock_guard lock(mutex_);
  members_.push_back(std::move(record));
  write_locked();
}

void ManifestWriter::add_timing(const std::string& name, double seconds) {
  std::lock_guard lock(mutex_);
  timings_.emplace_back(name, seconds);
}

void ManifestWriter::set_status(std::string status, std::string error) {
  std::lock_guard lock(mutex_);
  status_ = std::move(status);
  error_ = std::move(error);
}

void ManifestWriter::flush() {
  std::lock_guard lock(mutex_);
  write_locked();
}

void ManifestWriter::write_locked() {
  json doc;
  doc["format"] = "rbda-manifest-1";
  doc["command"] = command_;
  doc["status"] = status_;
  if (!error_.empty()) doc["error"] = error_;
  doc["config_hash"] = hex64(config_hash_);
  doc["config"] = config_text_;
  json points = json::array();
  for (const auto& [id, hash] : points_) points.push_back({{"id", id}, {"config_hash", hash}});
  doc["points"] = points;
  // Members complete in any order; list them by point, then index.
  std::vector<const MemberRecord*> sorted;
  for (const MemberRecord& m : members_) sorted.push_back(&m);
  std::sort(sorted.begin(), sorted.end(), [](const MemberRecord* a, const MemberRecord* b) {
    return std::tie(a->point, a->spec.index) < std::tie(b->point, b->spec.index);
  });
  json members = json::array();
  for (const MemberRecord* m : sorted) {
    json j = spec_json(m->spec);
    j["point"] = m->point;
    j["status"] = m->status;
    if (!m->error.empty()) j["error"] = m->error;
    j["wall_seconds"] = m->wall_seconds;
    members.push_back(j);
  }
  doc["members"] = members;
  json files = json::array();
  for (const FileRecord& f : files_) files.push_back({{"path", f.path}, {"kind", f.kind}});
  doc["files"] = files;
  json timings = json::object();
  for (const auto& [name, s] : timings_) timings[name] = s;
  doc["timings"] = timings;

  const fs::path tmp = dir_ / "manifest.json.tmp";
  write_text(tmp, doc.dump(2) + "\n");
  fs::rename(tmp, path());
}

ManifestCheck verify_manifest(const fs::path& manifest_path) {
  ManifestCheck check;
  auto problem = [&](std::string what) {
    check.ok = false;
    check.problems.push_back(std::move(what));
  };
  std::ifstream is(manifest_path);
  if (!is) throw MissingInput("manifest not found: " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(manifest_path.string() + ": " + e.what());
  }
  const fs::path dir = manifest_path.parent_path();
  const ExperimentConfig cfg =
      parse_config(doc.at("config").get<std::string>(), manifest_path.string() + ":config");
  if (hex64(cfg.hash()) != doc.at("config_hash").get<std::string>()) {
    problem("config hash does not match the recorded config");
  }
  for (const json& f : doc.at("files")) {
    const fs::path p = dir / f.at("path").get<std::string>();
    const std::string kind = f.at("kind").get<std::string>();
    if (!fs::exists(p)) {
      problem("missing file " + p.string());
      continue;
    }
    try {
      if (kind == "snapshot") {
        (void)load_snapshot(p);
      } else if (kind == "observations") {
        (void)load_observation_stream(p);
      } else if (kind == "metrics") {
        std::ifstream in(p);
        (void)read_skill_csv(in, p.string());
      } else if (kind == "config") {
        (void)load_config(p);
      } else {
        std::ifstream in(p);
        std::string header;
        if (!std::getline(in, header) || header.empty()) problem("empty file " + p.string());
      }
    } catch (const Error& e) {
      problem(p.string() + ": " + e.what());
    }
  }
  return check;
}

// ---------------------------------------------------------------------------
// Points

std::vector<FileRecord> write_point_outputs(const fs::path& dir, const PointResult& point,
                                            const FieldSet& truth_final) {
  fs::create_directories(dir / "final");
  std::vector<FileRecord> files;
  auto add = [&](const fs::path& p, std::string kind) { files.push_back({p.string(), kind}); };

  write_text(dir / "config.cfg", point.cfg.serialize());
  add(dir / "config.cfg", "config");

  write_stream(dir / "metrics.csv", [&](std::ostream& os) {
    std::vector<SkillSeries> all;
    for (const MemberResult& m : point.members) {
      if (m.ok) all.insert(all.end(), m.series.begin(), m.series.end());
    }
    write_skill_csv(os, all, point.id);
  });
  add(dir / "metrics.csv", "metrics");

  if (point.stats) {
    write_stream(dir / "ensemble.csv", [&](std::ostream& os) {
      std::vector<SkillSeries> nonempty;
      for (const SkillSeries& s : point.stats->series) {
        if (!s.empty()) nonempty.push_back(s);
      }
      write_skill_csv(os, nonempty, point.id);
    });
    add(dir / "ensemble.csv", "metrics");
  }

  save_snapshot(dir / "truth_final.rbsnap", truth_final);
  add(dir / "truth_final.rbsnap", "snapshot");
  for (const MemberResult& m : point.members) {
    if (!m.ok) continue;
    char name[32];
    std::snprintf(name, sizeof name, "member_%03d.rbsnap", m.spec.index);
    save_snapshot(dir / "final" / name, m.final_state());
    add(dir / "final" / name, "snapshot");
  }
  return files;
}

PointResult run_point(const std::string& id, const ExperimentConfig& cfg,
                      std::span<const FieldSet> truth, std::span<const ObservationFrame> clean,
                      int workers, const LogSink& log, ManifestWriter* manifest) {
  cfg.validate();
  PointResult point;
  point.id = id;
  point.cfg = cfg;
  point.members.resize(static_cast<std::size_t>(cfg.members));
  if (manifest) manifest->add_point(id, cfg);
  parallel_for(point.members.size(), workers, [&](std::size_t k) {
    MemberResult r = run_member(cfg, truth, clean, member_spec(cfg, static_cast<int>(k)), log);
    if (manifest) {
      manifest->record_member(
          {id, r.spec, r.ok ? "ok" : "failed", r.error, r.wall_seconds});
    }
    point.members[k] = std::move(r);
  });
  const bool any_ok = std::any_of(point.members.begin(), point.members.end(),
                                  [](const MemberResult& m) { return m.ok; });
  if (any_ok) point.stats = ensemble_stats(point.members, truth, cfg.plateau_fraction);
  if (manifest) {
    for (const FileRecord& f : write_point_outputs(manifest->dir() / id, point, truth[static_cast<std::size_t>(cfg.steps() / cfg.metric_stride)])) {
      manifest->add_file(f.path, f.kind);
    }
    manifest->flush();
  }
  return point;
}

PointResult run_point(const std::string& id, const ExperimentConfig& cfg,
                      const ReferenceRun& ref, int workers, const LogSink& log,
                      ManifestWriter* manifest) {
  return run_point(id, cfg, ref.truth, ref.frames({cfg.r, cfg.s}), workers, log, manifest);
}

// ---------------------------------------------------------------------------
// CSV reports

void write_sweep_csv(std::ostream& os, std::span<const PointResult> points) {
  os << "point,algorithm,r,s,sigma_theta,sigma_u,mu_u,mu_theta,members_ok,members_failed,"
        "lambda_u,lambda_v,lambda_theta,lambda_theta_final,rrmse_theta_final_mean,"
        "rrmse_theta_final_median,rrmse_theta_final_var,rrmse_theta_plateau_mean,"
        "mean_solution_rrmse_theta,aes_theta_final\n";
  for (const PointResult& p : points) {
    const ExperimentConfig& c = p.cfg;
    os << p.id << ',' << to_string(c.algorithm) << ',' << c.r << ',' << c.s << ','
       << format_real(c.sigma_theta) << ',' << format_real(c.sigma_u) << ','
       << format_real(c.mu_u) << ',' << format_real(c.mu_theta) << ',';
    if (!p.stats) {
      os << 0 << ',' << p.members.size() << ",,,,,,,,,,\n";
      continue;
    }
    const EnsembleStats& st = *p.stats;
    const auto th = static_cast<std::size_t>(Variable::theta);
    const std::vector<double>& fin = st.member_rrmse_final[th];
    const Summary sum = summarize(fin);
    os << st.members_ok << ',' << st.members_failed << ','
       << format_real(st.lambda_plateau[static_cast<std::size_t>(Variable::u)]) << ','
       << format_real(st.lambda_plateau[static_cast<std::size_t>(Variable::v)]) << ','
       << format_real(st.lambda_plateau[th]) << ',' << format_real(st.lambda_final[th]) << ','
       << format_real(sum.mean) << ',' << format_real(quantile(fin, 0.5)) << ','
       << format_real(sum.std * sum.std) << ','
       << format_real(summarize(st.member_rrmse_plateau[th]).mean) << ','
       << format_real(st.mean_solution_rrmse[th]) << ',' << format_real(st.aes_final[th])
       << '\n';
  }
}

void write_fits_csv(std::ostream& os, std::span<const FitRecord> fits) {
  os << "label,algorithm,slope,intercept,r2,points\n";
  for (const FitRecord& f : fits) {
    os << f.label << ',' << to_string(f.algorithm) << ',' << format_real(f.fit.slope) << ','
       << format_real(f.fit.intercept) << ',' << format_real(f.fit.r2) << ',' << f.fit.points
       << '\n';
  }
}

void write_findings_csv(std::ostream& os,
                        std::span<const std::pair<std::string, double>> findings) {
  os << "finding,value\n";
  for (const auto& [k, v] : findings) os << k << ',' << format_real(v) << '\n';
}

double PresetReport::finding(const std::string& key) const {
  for (const auto& [k, v] : findings) {
    if (k == key) return v;
  }
  throw MissingInput("preset " + name + " has no finding '" + key + "'");
}

// ---------------------------------------------------------------------------
// Presets

ExperimentConfig with_algorithm(ExperimentConfig base, Algorithm a) {
  base.algorithm = a;
  base.mu_u = base.mu_theta = base.mu_for(a);
  return base;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "noise_sweep", "S_sweep", "R_sweep", "mu_sweep", "double_noise", "temperature_relevance"};
  return names;
}

std::vector<ObservationFrame> downscaled_reference_frames(const ExperimentConfig& cfg,
                                                          std::span<const ObservationFrame> clean,
                                                          const MemberSpec& spec) {
  const StaggeredGrid grid = cfg.grid();
  const ObservationGrid og(grid, spec.key.r);
  const std::vector<ObservationFrame> stream =
      perturb_stream(clean, {spec.sigma_theta, spec.sigma_u, spec.noise_seed},
                     static_cast<std::uint64_t>(spec.index));
  FieldSet initial = random_initial_state(grid, spec.initial_seed);
  initial.time = clean.front().time;
  TimeStepper stepper(cfg.dt, cfg.cfl_limit);
  std::vector<ObservationFrame> frames;
  run_downscaling(initial, stream, og, {spec.algorithm, spec.mu_u, spec.mu_theta, spec.key.s},
                  cfg.physics(), stepper, cfg.steps(),
                  [&](const FieldSet& fs, std::int64_t n) {
                    if (n % spec.key.s == 0) frames.push_back(subsample(fs, og, fs.time, spec.key.s));
                  });
  return frames;
}

namespace {

struct PresetContext {
  const ExperimentConfig& cfg;
  int workers;
  const fs::path& out;
  const LogSink& log;
  ManifestWriter& manifest;
  PresetReport& report;

  void note(std::string text) {
    if (log) log("note: " + text);
    report.notes.push_back(std::move(text));
  }
  void finding(std::string key, double value) { report.findings.emplace_back(std::move(key), value); }
};

void require_points(std::size_t n, std::string_view what) {
  if (n < 3) {
    throw ConfigError("fit refused: " + std::string(what) + " has " + std::to_string(n) +
                      " points, at least 3 are required");
  }
}

ReferenceRun reference_for(PresetContext& ctx, const std::vector<ExperimentConfig>& points) {
  std::set<ObservationKey> keys;
  for (const ExperimentConfig& p : points) keys.insert({p.r, p.s});
  const std::vector<ObservationKey> list(keys.begin(), keys.end());
  const auto t0 = Clock::now();
  ReferenceRun ref = run_reference(ctx.cfg, list, ctx.log);
  ctx.manifest.add_timing("reference", seconds_since(t0));
  return ref;
}

void run_points(PresetContext& ctx, const ReferenceRun& ref,
                const std::vector<std::pair<std::string, ExperimentConfig>>& points) {
  for (const auto& [id, pcfg] : points) {
    const auto t0 = Clock::now();
    ctx.report.points.push_back(run_point(id, pcfg, ref, ctx.workers, ctx.log, &ctx.manifest));
    ctx.manifest.add_timing(id, seconds_since(t0));
  }
}

const EnsembleStats& stats_of(const PointResult& p) {
  if (!p.stats) throw UndefinedMetric("every member of point " + p.id + " failed");
  return *p.stats;
}

constexpr auto theta_index = static_cast<std::size_t>(Variable::theta);

void fit_sweep(PresetContext& ctx, std::string_view param, Algorithm a,
               const std::vector<double>& xs, const std::vector<const PointResult*>& pts) {
  for (Variable v : {Variable::u, Variable::v, Variable::theta}) {
    std::vector<double> ys;
    for (const PointResult* p : pts) ys.push_back(stats_of(*p).lambda_plateau[static_cast<std::size_t>(v)]);
    const LogLogFit f = fit_loglog(xs, ys);
    const std::string label =
        "lambda_" + std::string(to_string(v)) + "_vs_" + std::string(param);
    ctx.report.fits.push_back({label, a, f});
    ctx.finding(label + "_slope_" + std::string(to_string(a)), f.slope);
  }
}

double sigma_u_ratio(const ExperimentConfig& cfg) {
  return cfg.sigma_theta > 0.0 ? cfg.sigma_u / cfg.sigma_theta : 0.5;
}

void preset_noise_sweep(PresetContext& ctx) {
  std::vector<double> sigmas;
  for (double s : ctx.cfg.sweep_sigma) {
    if (s > 0.0) sigmas.push_back(s);
  }
  require_points(sigmas.size(), "noise sweep");
  std::vector<std::pair<std::string, ExperimentConfig>> points;
  for (Algorithm a : ctx.cfg.sweep_algorithms) {
    for (double s : sigmas) {
      ExperimentConfig p = with_algorithm(ctx.cfg, a);
      p.sigma_theta = s;
      p.sigma_u = s * sigma_u_ratio(ctx.cfg);
      points.emplace_back(std::string(to_string(a)) + "_sigma" + short_real(s), p);
    }
  }
  std::vector<ExperimentConfig> cfgs;
  for (const auto& pt : points) cfgs.push_back(pt.second);
  const ReferenceRun ref = reference_for(ctx, cfgs);
  run_points(ctx, ref, points);
  std::size_t k = 0;
  for (Algorithm a : ctx.cfg.sweep_algorithms) {
    std::vector<const PointResult*> pts;
    for (std::size_t i = 0; i < sigmas.size(); ++i) pts.push_back(&ctx.report.points[k++]);
    fit_sweep(ctx, "sigma", a, sigmas, pts);
  }
}

void preset_r_sweep(PresetContext& ctx) {
  require_points(ctx.cfg.sweep_r.size(), "R sweep");
  std::vector<std::pair<std::string, ExperimentConfig>> points;
  for (Algorithm a : ctx.cfg.sweep_algorithms) {
    for (int r : ctx.cfg.sweep_r) {
      ExperimentConfig p = with_algorithm(ctx.cfg, a);
      p.r = r;
      points.emplace_back(std::string(to_string(a)) + "_R" + std::to_string(r), p);
    }
  }
  std::vector<ExperimentConfig> cfgs;
  for (const auto& pt : points) cfgs.push_back(pt.second);
  const ReferenceRun ref = reference_for(ctx, cfgs);
  run_points(ctx, ref, points);
  std::vector<double> xs(ctx.cfg.sweep_r.begin(), ctx.cfg.sweep_r.end());
  std::size_t k = 0;
  for (Algorithm a : ctx.cfg.sweep_algorithms) {
    std::vector<const PointResult*> pts;
    for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back(&ctx.report.points[k++]);
    fit_sweep(ctx, "R", a, xs, pts);
  }
}

void preset_s_sweep(PresetContext& ctx) {
  require_points(ctx.cfg.sweep_s.size(), "S sweep");
  std::vector<std::pair<std::string, ExperimentConfig>> points;
  for (Algorithm a : ctx.cfg.sweep_algorithms) {
    for (int s : ctx.cfg.sweep_s) {
      ExperimentConfig p = with_algorithm(ctx.cfg, a);
      p.s = s;
      points.emplace_back(std::string(to_string(a)) + "_S" + std::to_string(s), p);
    }
  }
  std::vector<ExperimentConfig> cfgs;
  for (const auto& pt : points) cfgs.push_back(pt.second);
  const ReferenceRun ref = reference_for(ctx, cfgs);
  run_points(ctx, ref, points);
  std::size_t k = 0;
  for (Algorithm a : ctx.cfg.sweep_algorithms) {
    double best = 0.0;
    int best_s = 0;
    for (int s : ctx.cfg.sweep_s) {
      const double lam = stats_of(ctx.report.points[k++]).lambda_plateau[theta_index];
      if (best_s == 0 || lam < best) {
        best = lam;
        best_s = s;
      }
    }
    ctx.finding("argmin_S_lambda_theta_" + std::string(to_string(a)), best_s);
  }
}

void preset_mu_sweep(PresetContext& ctx) {
  if (ctx.cfg.sweep_mu.empty()) throw ConfigError("mu sweep needs at least one value");
  std::vector<std::pair<std::string, ExperimentConfig>> points;
  for (Algorithm a : ctx.cfg.sweep_algorithms) {
    for (double mu : ctx.cfg.sweep_mu) {
      ExperimentConfig p = ctx.cfg;
      p.algorithm = a;
      p.mu_u = p.mu_theta = mu;
      points.emplace_back(std::string(to_string(a)) + "_mu" + short_real(mu), p);
    }
  }
  std::vector<ExperimentConfig> cfgs;
  for (const auto& pt : points) cfgs.push_back(pt.second);
  const ReferenceRun ref = reference_for(ctx, cfgs);
  run_points(ctx, ref, points);
  std::size_t k = 0;
  for (Algorithm a : ctx.cfg.sweep_algorithms) {
    double best = 0.0;
    double best_mu = -1.0;
    for (double mu : ctx.cfg.sweep_mu) {
      const PointResult& p = ctx.report.points[k++];
      if (!p.stats) continue;
      const double rr = summarize(p.stats->member_rrmse_final[theta_index]).mean;
      if (best_mu < 0.0 || rr < best) {
        best = rr;
        best_mu = mu;
      }
    }
    if (best_mu < 0.0) throw UndefinedMetric("every mu sweep point failed");
    ctx.finding("best_mu_" + std::string(to_string(a)), best_mu);
    ctx.finding("best_mu_rrmse_theta_" + std::string(to_string(a)), best);
  }
}

bool below_every(double x, const std::vector<double>& xs) {
  return std::all_of(xs.begin(), xs.end(), [x](double y) { return x < y; });
}

void preset_double_noise(PresetContext& ctx) {
  const ExperimentConfig& c1 = ctx.cfg;
  const ReferenceRun ref = reference_for(ctx, {c1});
  run_points(ctx, ref, {{"stage1", c1}});
  const PointResult& stage1 = ctx.report.points.front();
  const auto first_ok = std::find_if(stage1.members.begin(), stage1.members.end(),
                                     [](const MemberResult& m) { return m.ok; });
  if (first_ok == stage1.members.end()) throw MissingInput("stage-1 run has no completed member");
  ctx.note("stage-2 source is the trajectory of stage-1 member " +
           std::to_string(first_ok->spec.index));
  const auto t0 = Clock::now();
  const std::vector<ObservationFrame> source =
      downscaled_reference_frames(c1, ref.frames({c1.r, c1.s}), first_ok->spec);
  ctx.manifest.add_timing("stage2_source", seconds_since(t0));

  ExperimentConfig c2 = c1;
  c2.seed_noise = derive_seed(c1.seed_noise, {2});
  c2.seed_initial = derive_seed(c1.seed_initial, {2});
  const auto t1 = Clock::now();
  ctx.report.points.push_back(
      run_point("stage2", c2, ref.truth, source, ctx.workers, ctx.log, &ctx.manifest));
  ctx.manifest.add_timing("stage2", seconds_since(t1));

  const EnsembleStats& s1 = stats_of(ctx.report.points[0]);
  const EnsembleStats& s2 = stats_of(ctx.report.points[1]);
  const double med1 = quantile(s1.member_rrmse_final[theta_index], 0.5);
  const double med2 = quantile(s2.member_rrmse_final[theta_index], 0.5);
  ctx.finding("stage1_median_rrmse_theta", med1);
  ctx.finding("stage2_median_rrmse_theta", med2);
  ctx.finding("median_ratio", med2 / med1);
  ctx.finding("stage1_mean_solution_rrmse_theta", s1.mean_solution_rrmse[theta_index]);
  ctx.finding("stage2_mean_solution_rrmse_theta", s2.mean_solution_rrmse[theta_index]);
  ctx.finding("mean_solution_ratio",
              s2.mean_solution_rrmse[theta_index] / s1.mean_solution_rrmse[theta_index]);
  ctx.finding("stage2_median_above_stage1", med2 > med1 ? 1.0 : 0.0);
  ctx.finding("stage2_mean_solution_above_stage1",
              s2.mean_solution_rrmse[theta_index] > s1.mean_solution_rrmse[theta_index] ? 1.0
                                                                                       : 0.0);
  ctx.finding("stage2_mean_solution_below_every_member",
              below_every(s2.mean_solution_rrmse[theta_index], s2.member_rrmse_final[theta_index])
                  ? 1.0
                  : 0.0);
}

void preset_temperature_relevance(PresetContext& ctx) {
  std::vector<std::pair<std::string, ExperimentConfig>> points;
  ExperimentConfig base = ctx.cfg;
  base.r = ctx.cfg.relevance_r;
  base.s = ctx.cfg.relevance_s;
  for (double s : ctx.cfg.relevance_sigma) {
    ExperimentConfig p = base;
    p.sigma_theta = s;
    points.emplace_back("sigmaT" + short_real(s), p);
  }
  ExperimentConfig none = base;
  none.mu_theta = 0.0;
  points.emplace_back("no_temperature", none);
  std::vector<ExperimentConfig> cfgs;
  for (const auto& pt : points) cfgs.push_back(pt.second);
  const ReferenceRun ref = reference_for(ctx, cfgs);
  run_points(ctx, ref, points);

  const PointResult& no_temp = ctx.report.points.back();
  const Summary none_sum = summarize(stats_of(no_temp).member_rrmse_final[theta_index]);
  bool largest = true;
  for (std::size_t i = 0; i + 1 < ctx.report.points.size(); ++i) {
    const PointResult& p = ctx.report.points[i];
    const Summary s = summarize(stats_of(p).member_rrmse_final[theta_index]);
    ctx.finding(p.id + "_rrmse_theta_var", s.std * s.std);
    ctx.finding(p.id + "_rrmse_theta_median",
                quantile(stats_of(p).member_rrmse_final[theta_index], 0.5));
    if (s.std >= none_sum.std) largest = false;
  }
  ctx.finding("no_temperature_rrmse_theta_var", none_sum.std * none_sum.std);
  ctx.finding("no_temperature_rrmse_theta_median",
              quantile(stats_of(no_temp).member_rrmse_final[theta_index], 0.5));
  ctx.finding("no_temperature_largest_variance", largest ? 1.0 : 0.0);
  const PointResult& low = ctx.report.points.front();
  ctx.finding("low_sigma_below_no_temperature",
              quantile(stats_of(low).member_rrmse_final[theta_index], 0.5) <
                      quantile(stats_of(no_temp).member_rrmse_final[theta_index], 0.5)
                  ? 1.0
                  : 0.0);
  double max_theta_forcing = 0.0;
  for (const MemberResult& m : no_temp.members) {
    max_theta_forcing = std::max(max_theta_forcing, m.max_forcing_theta);
  }
  ctx.finding("no_temperature_max_theta_forcing", max_theta_forcing);
}

}  // namespace

PresetReport run_preset(const std::string& name, const ExperimentConfig& cfg, int workers,
                        const fs::path& out, const LogSink& log) {
  cfg.validate();
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string all;
    for (const auto& n : names) all += (all.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (available: " + all + ")");
  }
  ExperimentConfig named = cfg;
  named.preset = name;
  PresetReport report;
  report.name = name;
  ManifestWriter manifest(out, named, "preset " + name);
  PresetContext ctx{named, workers, out, log, manifest, report};
  const auto t0 = Clock::now();
  try {
    if (name == "noise_sweep") preset_noise_sweep(ctx);
    if (name == "R_sweep") preset_r_sweep(ctx);
    if (name == "S_sweep") preset_s_sweep(ctx);
    if (name == "mu_sweep") preset_mu_sweep(ctx);
    if (name == "double_noise") preset_double_noise(ctx);
    if (name == "temperature_relevance") preset_temperature_relevance(ctx);
  } catch (const Error& e) {
    manifest.set_status("failed", e.what());
    manifest.flush();
    throw;
  }
  write_stream(out / "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, report.points); });
  manifest.add_file(out / "sweep.csv", "report");
  write_stream(out / "fits.csv", [&](std::ostream& os) { write_fits_csv(os, report.fits); });
  manifest.add_file(out / "fits.csv", "report");
  write_stream(out / "findings.csv",
               [&](std::ostream& os) { write_findings_csv(os, report.findings); });
  manifest.add_file(out / "findings.csv", "report");
  manifest.add_timing("total", seconds_since(t0));
  manifest.set_status("complete");
  manifest.flush();
  return report;
}

}  // namespace rbda

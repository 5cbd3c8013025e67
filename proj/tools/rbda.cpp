// Command-line driver: reference runs, observation streams, single-member
// and ensemble downscaling, post-processing and named experiment presets.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>

#include "rbda/analysis.hpp"
#include "rbda/config.hpp"
#include "rbda/error.hpp"
#include "rbda/experiment.hpp"
#include "rbda/observations.hpp"
#include "rbda/pipeline.hpp"
#include "rbda/rng.hpp"
#include "rbda/snapshot.hpp"

namespace fs = std::filesystem;
using namespace rbda;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::string out;
  std::string profile = "desk";
};

LogSink stderr_log() {
  static std::mutex mutex;
  return [](const std::string& line) {
    std::lock_guard lock(mutex);
    std::fprintf(stderr, "%s\n", line.c_str());
  };
}

ExperimentConfig resolve_config(const GlobalOptions& g) {
  ExperimentConfig cfg = ExperimentConfig::for_profile(parse_profile(g.profile));
  if (!g.config.empty()) cfg = load_config(g.config, cfg);
  if (g.seed) {
    cfg.seed_reference = *g.seed;
    cfg.seed_noise = derive_seed(*g.seed, {1});
    cfg.seed_initial = derive_seed(*g.seed, {2});
  }
  if (!g.out.empty()) cfg.out_dir = g.out;
  cfg.validate();
  return cfg;
}

int workers_of(const GlobalOptions& g) { return g.workers > 0 ? g.workers : default_workers(); }

std::string snapshot_name(std::int64_t step) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "snap_%09lld.rbsnap", static_cast<long long>(step));
  return buf;
}

/// Reference snapshots at the given step stride, from t = 0 through the horizon.
std::vector<FieldSet> load_snapshots(const fs::path& dir, const ExperimentConfig& cfg, int stride) {
  const int stored = cfg.effective_snapshot_stride();
  if (stride % stored != 0) {
    throw ConfigError("snapshot stride " + std::to_string(stored) + " does not divide " +
                      std::to_string(stride) + " steps");
  }
  std::vector<FieldSet> out;
  for (std::int64_t n = 0; n <= cfg.steps(); n += stride) {
    const fs::path p = dir / snapshot_name(n);
    if (!fs::exists(p)) {
      throw MissingInput("reference snapshot missing at step " + std::to_string(n) + " (" +
                         p.string() + ")");
    }
    out.push_back(load_snapshot(p));
  }
  return out;
}

int cmd_simulate(const GlobalOptions& g) {
  const ExperimentConfig cfg = resolve_config(g);
  const fs::path out = cfg.out_dir;
  const fs::path snaps = out / "snapshots";
  fs::create_directories(snaps);
  ManifestWriter manifest(out, cfg, "simulate");
  manifest.add_file(out / "config.cfg", "config");
  {
    std::ofstream os(out / "config.cfg");
    os << cfg.serialize();
  }
  try {
    const ReferenceRun ref = run_reference(cfg, {}, stderr_log(),
                                           [&](const FieldSet& state, std::int64_t n) {
                                             const fs::path p = snaps / snapshot_name(n);
                                             save_snapshot(p, state);
                                             manifest.add_file(p, "snapshot");
                                           });
    manifest.add_timing("reference", ref.wall_seconds);
    std::fprintf(stderr, "reference complete: max courant %.4f, max kinetic energy %.6e\n",
                 ref.max_courant, ref.max_kinetic_energy);
    manifest.set_status("complete");
  } catch (const Error& e) {
    manifest.set_status("failed", e.what());
    manifest.flush();
    throw;
  }
  manifest.flush();
  return 0;
}

int cmd_observe(const GlobalOptions& g, const std::string& snapshots_dir) {
  const ExperimentConfig cfg = resolve_config(g);
  const fs::path out = cfg.out_dir;
  fs::create_directories(out / "obs");
  const std::vector<FieldSet> snaps = load_snapshots(snapshots_dir, cfg, cfg.s);
  const ObservationGrid og(cfg.grid(), cfg.r);
  const auto clean = subsample_stream(snaps, og, cfg.s, cfg.dt);
  ManifestWriter manifest(out, cfg, "observe");
  for (int k = 0; k < cfg.members; ++k) {
    const MemberSpec spec = member_spec(cfg, k);
    ObservationStream stream;
    stream.nx = cfg.nx;
    stream.ny = cfg.ny;
    stream.lx = cfg.lx;
    stream.ly = 1.0;
    stream.r = cfg.r;
    stream.s = cfg.s;
    stream.seed = cfg.seed_noise;
    stream.frames = perturb_stream(clean, cfg.noise(), static_cast<std::uint64_t>(k));
    char name[32];
    std::snprintf(name, sizeof name, "member_%03d.rbobs", k);
    save_observation_stream(out / "obs" / name, stream);
    manifest.add_file(out / "obs" / name, "observations");
    manifest.record_member({"observe", spec, "ok", {}, 0.0});
  }
  manifest.set_status("complete");
  manifest.flush();
  return 0;
}

int cmd_downscale(const GlobalOptions& g, const std::string& snapshots_dir,
                  const std::string& obs_file, int member) {
  const ExperimentConfig cfg = resolve_config(g);
  if (member < 0 || member >= cfg.members) {
    throw ConfigError("member index " + std::to_string(member) + " outside [0, " +
                      std::to_string(cfg.members) + ")");
  }
  const fs::path out = cfg.out_dir;
  std::vector<FieldSet> truth = load_snapshots(snapshots_dir, cfg, cfg.metric_stride);
  MemberSpec spec = member_spec(cfg, member);
  std::vector<ObservationFrame> clean;
  if (!obs_file.empty()) {
    // The stream already carries its noise.
    ObservationStream stream = load_observation_stream(obs_file);
    if (stream.r != cfg.r || stream.s != cfg.s || stream.nx != cfg.nx || stream.ny != cfg.ny) {
      throw ConfigError(obs_file + ": stream was generated for another grid or R/S");
    }
    clean = std::move(stream.frames);
    spec.sigma_theta = spec.sigma_u = 0.0;
  } else {
    const ObservationGrid og(cfg.grid(), cfg.r);
    clean = subsample_stream(load_snapshots(snapshots_dir, cfg, cfg.s), og, cfg.s, cfg.dt);
  }
  ManifestWriter manifest(out, cfg, "downscale --member " + std::to_string(member));
  PointResult point;
  point.id = "downscale";
  point.cfg = cfg;
  point.members.push_back(run_member(cfg, truth, clean, spec, stderr_log()));
  const MemberResult& r = point.members.front();
  manifest.record_member({point.id, r.spec, r.ok ? "ok" : "failed", r.error, r.wall_seconds});
  if (r.ok) point.stats = ensemble_stats(point.members, truth);
  for (const FileRecord& f : write_point_outputs(out / point.id, point, truth.back())) {
    manifest.add_file(f.path, f.kind);
  }
  manifest.set_status(r.ok ? "complete" : "failed", r.error);
  manifest.flush();
  if (!r.ok) return r.exit_code;
  std::fprintf(stderr, "member %d final RRMSE theta %.6e\n", member,
               r.find(Score::rrmse, Variable::theta).last());
  return 0;
}

int cmd_ensemble(const GlobalOptions& g) {
  const ExperimentConfig cfg = resolve_config(g);
  const fs::path out = cfg.out_dir;
  ManifestWriter manifest(out, cfg, "ensemble");
  try {
    const std::vector<ObservationKey> keys{{cfg.r, cfg.s}};
    const ReferenceRun ref = run_reference(cfg, keys, stderr_log());
    manifest.add_timing("reference", ref.wall_seconds);
    const PointResult point =
        run_point("ensemble", cfg, ref, workers_of(g), stderr_log(), &manifest);
    const std::size_t failed = point.stats ? point.stats->members_failed : point.members.size();
    manifest.set_status(failed == 0 ? "complete" : "partial",
                        failed == 0 ? "" : std::to_string(failed) + " members failed");
    manifest.flush();
    if (point.stats) {
      const auto th = static_cast<std::size_t>(Variable::theta);
      std::fprintf(stderr, "ensemble: %zu ok, %zu failed, Lambda_theta plateau %.6e\n",
                   point.stats->members_ok, point.stats->members_failed,
                   point.stats->lambda_plateau[th]);
    }
    return point.stats ? 0 : static_cast<int>(ExitCode::numerical_blowup);
  } catch (const Error& e) {
    manifest.set_status("failed", e.what());
    manifest.flush();
    throw;
  }
}

int cmd_analyze(const GlobalOptions& g, const std::string& in_dir) {
  const fs::path in = in_dir;
  if (!fs::exists(in)) throw MissingInput("analysis input not found: " + in.string());
  const std::uint64_t seed = g.seed.value_or(0);
  std::vector<fs::path> dirs;
  if (fs::exists(in / "metrics.csv")) {
    dirs.push_back(in);
  } else {
    for (const auto& e : fs::directory_iterator(in)) {
      if (e.is_directory() && fs::exists(e.path() / "metrics.csv")) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
  }
  if (dirs.empty()) throw MissingInput("no point directories with metrics.csv below " + in.string());
  for (const fs::path& d : dirs) {
    const PointAnalysis a = analyze_point(d, seed, stderr_log());
    const auto th = static_cast<std::size_t>(Variable::theta);
    std::printf("%s: Lambda_theta final %.6e plateau %.6e", d.filename().c_str(),
                a.lambda_final[th], a.lambda_plateau[th]);
    if (a.ks) std::printf(", KS rejected %zu of %zu", a.ks->rejected, a.ks->tested);
    std::printf("\n");
  }
  return 0;
}

int cmd_preset(const GlobalOptions& g, const std::string& name) {
  const ExperimentConfig cfg = resolve_config(g);
  const PresetReport report =
      run_preset(name, cfg, workers_of(g), fs::path(cfg.out_dir), stderr_log());
  for (const auto& [k, v] : report.findings) std::printf("%s = %.17g\n", k.c_str(), v);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rayleigh-Benard downscaling experiments with continuous and discrete nudging"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "flat key=value config file")->option_text("PATH");
  app.add_option("--seed", g.seed, "base seed for reference, noise and initial fields");
  app.add_option("--workers", g.workers, "parallel members (default: available cores)");
  app.add_option("--out", g.out, "output directory (overrides output.dir)");
  app.add_option("--profile", g.profile, "base profile")
      ->check(CLI::IsMember({"desk", "paper"}));

  auto* simulate = app.add_subcommand("simulate", "reference run, snapshots at snapshot stride");
  auto* observe = app.add_subcommand("observe", "noisy observation streams from snapshots");
  std::string snapshots_dir;
  observe->add_option("--snapshots", snapshots_dir, "reference snapshot directory")->required();
  auto* downscale = app.add_subcommand("downscale", "one downscaled member");
  std::string obs_file;
  int member = 0;
  downscale->add_option("--snapshots", snapshots_dir, "reference snapshot directory")
      ->required();
  downscale->add_option("--obs", obs_file, "RBOBS01 stream (default: generate from snapshots)");
  downscale->add_option("--member", member, "member index");
  auto* ensemble = app.add_subcommand("ensemble", "reference plus full ensemble downscaling");
  auto* analyze = app.add_subcommand("analyze", "metrics, statistics and fits from CSV outputs");
  std::string in_dir;
  analyze->add_option("--in", in_dir, "point or preset output directory")->required();
  auto* preset = app.add_subcommand("preset", "named experiment family");
  std::string preset_name;
  preset->add_option("name", preset_name, "preset name")
      ->required()
      ->check(CLI::IsMember(preset_names()));

  // Global flags may appear after the subcommand too.
  for (CLI::App* sub : {simulate, observe, downscale, ensemble, analyze, preset}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::config_error);
  }

  try {
    if (*simulate) return cmd_simulate(g);
    if (*observe) return cmd_observe(g, snapshots_dir);
    if (*downscale) return cmd_downscale(g, snapshots_dir, obs_file, member);
    if (*ensemble) return cmd_ensemble(g);
    if (*analyze) return cmd_analyze(g, in_dir);
    if (*preset) return cmd_preset(g, preset_name);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ExitCode::failure);
  }
  return static_cast<int>(ExitCode::failure);
}

#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rbda/config.hpp"
#include "rbda/experiment.hpp"

namespace rbda {

/// Per-member line of a manifest: enough to re-run that member alone with
/// `downscale --config <point config> --member <index>`.
struct MemberRecord {
  std::string point;
  MemberSpec spec;
  std::string status;  // "ok" or "failed"
  std::string error;
  double wall_seconds = 0.0;
};

struct FileRecord {
  std::string path;  // relative to the manifest directory
  std::string kind;  // snapshot, observations, metrics, config, report
};

/// Run bookkeeping written as manifest.json. All mutation goes through one
/// mutex, so workers may record concurrently; every call rewrites the file
/// atomically (temporary file + rename).
class ManifestWriter {
 public:
  ManifestWriter(std::filesystem::path dir, const ExperimentConfig& cfg, std::string command);

  void add_file(const std::filesystem::path& path, std::string kind);
  void add_point(const std::string& id, const ExperimentConfig& point_cfg);
  void record_member(MemberRecord record);
  void add_timing(const std::string& name, double seconds);
  void set_status(std::string status, std::string error = {});
  void flush();

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path path() const { return dir_ / "manifest.json"; }

 private:
  void write_locked();

  std::mutex mutex_;
  std::filesystem::path dir_;
  std::string command_;
  std::string config_text_;
  std::uint64_t config_hash_;
  std::string status_ = "running";
  std::string error_;
  std::vector<FileRecord> files_;
  std::vector<std::pair<std::string, std::string>> points_;  // id, config hash
  std::vector<MemberRecord> members_;
  std::vector<std::pair<std::string, double>> timings_;
};

struct ManifestCheck {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Confirms the config hash and that every listed file exists and parses.
ManifestCheck verify_manifest(const std::filesystem::path& manifest_path);

/// One ensemble: a configuration point, its members and their statistics.
struct PointResult {
  std::string id;
  ExperimentConfig cfg;
  std::vector<MemberResult> members;
  std::optional<EnsembleStats> stats;  // empty when every member failed
};

/// Runs cfg.members members of `cfg` against `ref` on `workers` threads.
/// When `manifest` is given the point's CSVs, final member snapshots and
/// config are written below manifest->dir() / id.
PointResult run_point(const std::string& id, const ExperimentConfig& cfg,
                      const ReferenceRun& ref, int workers, const LogSink& log,
                      ManifestWriter* manifest);

/// Same, with explicit truth (metric stride) and noise-free frames.
PointResult run_point(const std::string& id, const ExperimentConfig& cfg,
                      std::span<const FieldSet> truth, std::span<const ObservationFrame> clean,
                      int workers, const LogSink& log, ManifestWriter* manifest);

/// Writes member series (metrics.csv), ensemble series (ensemble.csv),
/// final member states, the final truth and the point config into `dir`;
/// returns the paths.
std::vector<FileRecord> write_point_outputs(const std::filesystem::path& dir,
                                            const PointResult& point,
                                            const FieldSet& truth_final);

struct FitRecord {
  std::string label;  // e.g. "lambda_theta_vs_sigma"
  Algorithm algorithm = Algorithm::dda;
  LogLogFit fit;
};

struct PresetReport {
  std::string name;
  std::vector<PointResult> points;
  std::vector<FitRecord> fits;
  /// Named scalar findings (e.g. predicate outcomes as 0/1) in insertion order.
  std::vector<std::pair<std::string, double>> findings;
  std::vector<std::string> notes;

  double finding(const std::string& key) const;
};

/// Names accepted by run_preset.
const std::vector<std::string>& preset_names();

/// Runs a named experiment family. Writes sweep.csv, fits.csv,
/// findings.csv, per-point outputs and manifest.json into `out`.
PresetReport run_preset(const std::string& name, const ExperimentConfig& cfg, int workers,
                        const std::filesystem::path& out, const LogSink& log = {});

/// `base` switched to algorithm `a` with its preset nudging strength.
ExperimentConfig with_algorithm(ExperimentConfig base, Algorithm a);

void write_sweep_csv(std::ostream& os, std::span<const PointResult> points);
void write_fits_csv(std::ostream& os, std::span<const FitRecord> fits);
void write_findings_csv(std::ostream& os,
                        std::span<const std::pair<std::string, double>> findings);

/// Noise-free frames (cadence S) taken from a downscaled trajectory, used
/// as the source of the second stage of the double-noise experiment.
std::vector<ObservationFrame> downscaled_reference_frames(const ExperimentConfig& cfg,
                                                          std::span<const ObservationFrame> clean,
                                                          const MemberSpec& spec);

}  // namespace rbda

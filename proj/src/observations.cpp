#include "rbda/observations.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "rbda/assimilation.hpp"
#include "rbda/binary_io.hpp"
#include "rbda/rng.hpp"

namespace rbda {

void NoiseSpec::validate() const {
  if (!(sigma_theta >= 0.0) || !(sigma_u >= 0.0) || !std::isfinite(sigma_theta) ||
      !std::isfinite(sigma_u)) {
    throw ConfigError("noise levels must be finite and non-negative");
  }
}

std::uint64_t frame_noise_seed(std::uint64_t base, std::uint64_t member, std::uint64_t frame) {
  return derive_seed(base, {member, frame});
}

ObservationFrame subsample(const FieldSet& reference, const ObservationGrid& og, double time,
                           int s) {
  if (std::abs(reference.time - time) > 1e-9 * std::max(1.0, std::abs(time))) {
    throw ConfigError("reference snapshot at t=" + std::to_string(reference.time) +
                      " cannot be sampled at t=" + std::to_string(time));
  }
  ObservationFrame f;
  f.time = time;
  f.r = og.factor();
  f.s = s;
  f.u = sample_coarse(reference.u, og);
  f.v = sample_coarse(reference.v, og);
  f.theta = sample_coarse(reference.theta, og);
  return f;
}

namespace {

void add_noise(std::vector<double>& xs, double sigma, std::uint64_t seed) {
  if (sigma == 0.0) return;
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  for (double& x : xs) x += sigma * z(rng);
}

}  // namespace

ObservationFrame perturb(const ObservationFrame& frame, const NoiseSpec& ns) {
  ns.validate();
  ObservationFrame out = frame;
  add_noise(out.u, ns.sigma_u, derive_seed(ns.seed, {static_cast<std::uint64_t>(StreamTag::u)}));
  add_noise(out.v, ns.sigma_u, derive_seed(ns.seed, {static_cast<std::uint64_t>(StreamTag::v)}));
  add_noise(out.theta, ns.sigma_theta,
            derive_seed(ns.seed, {static_cast<std::uint64_t>(StreamTag::theta)}));
  out.sigma_theta = ns.sigma_theta;
  out.sigma_u = ns.sigma_u;
  return out;
}

std::vector<ObservationFrame> perturb_stream(std::span<const ObservationFrame> clean,
                                             const NoiseSpec& base, std::uint64_t member) {
  std::vector<ObservationFrame> out;
  out.reserve(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    NoiseSpec ns = base;
    ns.seed = frame_noise_seed(base.seed, member, i);
    out.push_back(perturb(clean[i], ns));
    out.back().realization = member;
  }
  return out;
}

std::vector<ObservationFrame> subsample_stream(std::span<const FieldSet> snapshots,
                                               const ObservationGrid& og, int s, double dt) {
  if (snapshots.empty()) throw MissingInput("no reference snapshots given");
  const double cadence = s * dt;
  const double t0 = snapshots.front().time;
  std::vector<ObservationFrame> frames;
  frames.reserve(snapshots.size());
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const double expected = t0 + static_cast<double>(i) * cadence;
    if (std::abs(snapshots[i].time - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
      throw MissingInput("reference snapshot missing at t=" + std::to_string(expected) +
                         " (next available t=" + std::to_string(snapshots[i].time) + ")");
    }
    frames.push_back(subsample(snapshots[i], og, snapshots[i].time, s));
  }
  return frames;
}

std::vector<std::vector<ObservationFrame>> generate_ensemble(
    std::span<const FieldSet> snapshots, const ObservationGrid& og, int s, double dt,
    const NoiseSpec& base, int members) {
  if (members < 1) throw ConfigError("ensemble needs at least one member");
  const std::vector<ObservationFrame> clean = subsample_stream(snapshots, og, s, dt);
  std::vector<std::vector<ObservationFrame>> streams;
  streams.reserve(static_cast<std::size_t>(members));
  for (int m = 0; m < members; ++m) {
    streams.push_back(perturb_stream(clean, base, static_cast<std::uint64_t>(m)));
  }
  return streams;
}

// ---------------------------------------------------------------------------

void write_observation_stream(std::ostream& os, const ObservationStream& stream) {
  io::LeWriter w(os);
  const std::size_t n = stream.frames.empty() ? 0 : stream.frames.front().theta.size();
  w.bytes(observation_magic, sizeof observation_magic);
  w.u32(static_cast<std::uint32_t>(stream.nx));
  w.u32(static_cast<std::uint32_t>(stream.ny));
  w.f64(stream.lx);
  w.f64(stream.ly);
  w.u32(static_cast<std::uint32_t>(stream.r));
  w.u32(static_cast<std::uint32_t>(stream.s));
  w.u64(n);
  w.u64(n);
  w.u64(n);
  const ObservationFrame* first = stream.frames.empty() ? nullptr : &stream.frames.front();
  w.f64(first ? first->sigma_theta : 0.0);
  w.f64(first ? first->sigma_u : 0.0);
  w.u64(stream.seed);
  w.u64(first ? first->realization : 0);
  w.u64(stream.frames.size());
  for (const ObservationFrame& f : stream.frames) {
    if (f.u.size() != n || f.v.size() != n || f.theta.size() != n) {
      throw ConfigError("observation frames in one stream must share their sizes");
    }
    w.f64(f.time);
    for (double x : f.u) w.f64(x);
    for (double x : f.v) w.f64(x);
    for (double x : f.theta) w.f64(x);
  }
}

ObservationStream read_observation_stream(std::istream& is, const std::string& source) {
  io::LeReader r(is, source);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, observation_magic, sizeof magic) != 0) {
    throw ConfigError(source + ": not an RBOBS01 file");
  }
  ObservationStream s;
  s.nx = static_cast<int>(r.u32());
  s.ny = static_cast<int>(r.u32());
  s.lx = r.f64();
  s.ly = r.f64();
  s.r = static_cast<int>(r.u32());
  s.s = static_cast<int>(r.u32());
  const std::uint64_t nu = r.u64();
  const std::uint64_t nv = r.u64();
  const std::uint64_t nt = r.u64();
  const double sigma_theta = r.f64();
  const double sigma_u = r.f64();
  s.seed = r.u64();
  const std::uint64_t realization = r.u64();
  const std::uint64_t count = r.u64();
  s.frames.resize(count);
  for (ObservationFrame& f : s.frames) {
    f.time = r.f64();
    f.r = s.r;
    f.s = s.s;
    f.realization = realization;
    f.sigma_theta = sigma_theta;
    f.sigma_u = sigma_u;
    f.u.resize(nu);
    f.v.resize(nv);
    f.theta.resize(nt);
    for (double& x : f.u) x = r.f64();
    for (double& x : f.v) x = r.f64();
    for (double& x : f.theta) x = r.f64();
  }
  return s;
}

void save_observation_stream(const std::filesystem::path& path, const ObservationStream& stream) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_observation_stream(os, stream);
  if (!os) throw Error("failed writing " + path.string());
}

ObservationStream load_observation_stream(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingInput("observation stream not found: " + path.string());
  return read_observation_stream(is, path.string());
}

}  // namespace rbda

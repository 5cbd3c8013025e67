#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rbda/grid.hpp"

namespace rbda {

class ObservationGrid;

/// Coarse values of (u, v, theta) at one observation instant.
struct ObservationFrame {
  double time = 0.0;
  int r = 1;
  int s = 1;
  std::uint64_t realization = 0;
  double sigma_theta = 0.0;
  double sigma_u = 0.0;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> theta;

  friend bool operator==(const ObservationFrame&, const ObservationFrame&) = default;
};

/// Zero-mean iid Gaussian observation noise.
struct NoiseSpec {
  double sigma_theta = 0.1;
  double sigma_u = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Seed of the noise draw for one (member, frame) pair.
std::uint64_t frame_noise_seed(std::uint64_t base, std::uint64_t member, std::uint64_t frame);

/// Noise-free frame read at the observation points of `og`. Throws
/// ConfigError when reference.time differs from `time`.
ObservationFrame subsample(const FieldSet& reference, const ObservationGrid& og, double time,
                           int s = 1);

/// Adds sigma * N(0, 1) draws to every coarse value; u and v share sigma_u.
/// The draws are a pure function of ns.seed, so scaling sigma scales the
/// added noise exactly.
ObservationFrame perturb(const ObservationFrame& frame, const NoiseSpec& ns);

/// Perturb a noise-free stream for one ensemble member.
std::vector<ObservationFrame> perturb_stream(std::span<const ObservationFrame> clean,
                                             const NoiseSpec& base, std::uint64_t member);

/// Noise-free frames from reference snapshots spaced s * dt apart. Throws
/// MissingInput naming the first gap.
std::vector<ObservationFrame> subsample_stream(std::span<const FieldSet> snapshots,
                                               const ObservationGrid& og, int s, double dt);

/// `members` independent noisy streams built from the same snapshots.
std::vector<std::vector<ObservationFrame>> generate_ensemble(
    std::span<const FieldSet> snapshots, const ObservationGrid& og, int s, double dt,
    const NoiseSpec& base, int members);

// ---------------------------------------------------------------------------
// RBOBS01 stream files (little-endian):
//   "RBOBS01\0" | nx u32 | ny u32 | lx f64 | ly f64 | R u32 | S u32 |
//   n_u u64 | n_v u64 | n_theta u64 | sigma_theta f64 | sigma_u f64 |
//   seed u64 | realization u64 | frame count u64 |
//   per frame: time f64, u[n_u], v[n_v], theta[n_theta] (f64)

inline constexpr char observation_magic[8] = {'R', 'B', 'O', 'B', 'S', '0', '1', '\0'};

struct ObservationStream {
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 1.0;
  int r = 1;
  int s = 1;
  std::uint64_t seed = 0;
  std::vector<ObservationFrame> frames;

  friend bool operator==(const ObservationStream&, const ObservationStream&) = default;
};

void write_observation_stream(std::ostream& os, const ObservationStream& stream);
ObservationStream read_observation_stream(std::istream& is, const std::string& source);
void save_observation_stream(const std::filesystem::path& path, const ObservationStream& stream);
ObservationStream load_observation_stream(const std::filesystem::path& path);

}  // namespace rbda

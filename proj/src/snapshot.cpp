#include "rbda/snapshot.hpp"

#include <fstream>

#include "rbda/binary_io.hpp"

namespace rbda {

void write_snapshot(std::ostream& os, const FieldSet& fs) {
  io::LeWriter w(os);
  const StaggeredGrid& g = fs.grid();
  w.bytes(snapshot_magic, sizeof snapshot_magic);
  w.u32(static_cast<std::uint32_t>(g.nx()));
  w.u32(static_cast<std::uint32_t>(g.ny()));
  w.f64(g.lx());
  w.f64(g.ly());
  w.f64(fs.time);
  w.f64_array(fs.u.values());
  w.f64_array(fs.v.values());
  w.f64_array(fs.theta.values());
  w.f64_array(fs.pressure.values());
}

FieldSet read_snapshot(std::istream& is, const std::string& source) {
  io::LeReader r(is, source);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, snapshot_magic, sizeof magic) != 0) {
    throw ConfigError(source + ": not an RBSNAP01 file");
  }
  const int nx = static_cast<int>(r.u32());
  const int ny = static_cast<int>(r.u32());
  const double lx = r.f64();
  const double ly = r.f64();
  const double time = r.f64();
  const StaggeredGrid g(nx, ny, lx, ly);
  ScalarField u(g, Location::x_face, r.f64_array(g.size(Location::x_face)));
  ScalarField v(g, Location::y_face, r.f64_array(g.size(Location::y_face)));
  ScalarField theta(g, Location::cell_center, r.f64_array(g.size(Location::cell_center)));
  ScalarField p(g, Location::cell_center, r.f64_array(g.size(Location::cell_center)));
  return FieldSet(std::move(u), std::move(v), std::move(theta), std::move(p), time);
}

void save_snapshot(const std::filesystem::path& path, const FieldSet& fs) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_snapshot(os, fs);
  if (!os) throw Error("failed writing " + path.string());
}

FieldSet load_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingInput("snapshot not found: " + path.string());
  return read_snapshot(is, path.string());
}

}  // namespace rbda

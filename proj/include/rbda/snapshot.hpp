#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "rbda/grid.hpp"

namespace rbda {

/// RBSNAP01 layout (little-endian):
///   "RBSNAP01" | nx u32 | ny u32 | lx f64 | ly f64 | time f64 |
///   u, v, theta, pressure as (length u64, f64 values...)
inline constexpr char snapshot_magic[8] = {'R', 'B', 'S', 'N', 'A', 'P', '0', '1'};

void write_snapshot(std::ostream& os, const FieldSet& fs);
FieldSet read_snapshot(std::istream& is, const std::string& source = "<stream>");

void save_snapshot(const std::filesystem::path& path, const FieldSet& fs);
FieldSet load_snapshot(const std::filesystem::path& path);

}  // namespace rbda

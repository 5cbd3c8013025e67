#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rbda/error.hpp"

namespace rbda {

/// Where on the MAC cell a field's samples live.
enum class Location { cell_center, x_face, y_face };

std::string_view to_string(Location loc);

/// Uniform MAC-staggered mesh on [0, lx/ly] x [0, 1], periodic in x and
/// bounded by walls at y = 0 and y = 1.
class StaggeredGrid {
 public:
  StaggeredGrid(int nx, int ny, double lx, double ly = 1.0);

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double lx() const noexcept { return lx_; }
  double ly() const noexcept { return ly_; }
  double hx() const noexcept { return hx_; }
  double hy() const noexcept { return hy_; }
  double width() const noexcept { return lx_ / ly_; }
  double area() const noexcept { return width(); }
  double cell_area() const noexcept { return hx_ * hy_; }
  bool uniform() const noexcept { return hx_ == hy_; }

  /// Number of rows (y-index extent) of a field stored at `loc`.
  int rows(Location loc) const noexcept { return loc == Location::y_face ? ny_ + 1 : ny_; }
  std::size_t size(Location loc) const noexcept {
    return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(rows(loc));
  }

  /// Physical coordinates of sample (i, j) at `loc`.
  double x(Location loc, int i) const noexcept {
    return loc == Location::x_face ? i * hx_ : (i + 0.5) * hx_;
  }
  double y(Location loc, int j) const noexcept {
    return loc == Location::y_face ? j * hy_ : (j + 0.5) * hy_;
  }

  friend bool operator==(const StaggeredGrid&, const StaggeredGrid&) = default;

 private:
  int nx_;
  int ny_;
  double lx_;
  double ly_;
  double hx_;
  double hy_;
};

/// Real samples of one quantity at one staggered location.
///
/// Storage is row-major in (y, x) with x fastest. The x index wraps
/// periodically through `wrapped`; `at` expects 0 <= i < nx.
class ScalarField {
 public:
  ScalarField(const StaggeredGrid& grid, Location loc, double value = 0.0);
  ScalarField(const StaggeredGrid& grid, Location loc, std::vector<double> values);

  const StaggeredGrid& grid() const noexcept { return grid_; }
  Location location() const noexcept { return loc_; }
  int nx() const noexcept { return grid_.nx(); }
  int rows() const noexcept { return grid_.rows(loc_); }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(int i, int j) noexcept { return data_[index(i, j)]; }
  double at(int i, int j) const noexcept { return data_[index(i, j)]; }
  double wrapped(int i, int j) const noexcept { return at(wrap(i), j); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  /// Row j as a contiguous span of nx values.
  std::span<double> row(int j) noexcept {
    return {data_.data() + static_cast<std::size_t>(j) * nx(), static_cast<std::size_t>(nx())};
  }
  std::span<const double> row(int j) const noexcept {
    return {data_.data() + static_cast<std::size_t>(j) * nx(), static_cast<std::size_t>(nx())};
  }

  void fill(double value) noexcept;
  bool all_finite() const noexcept;
  double max_abs() const noexcept;
  double sum() const noexcept;
  double sum_squares() const noexcept;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double factor) noexcept;
  /// this += factor * other
  ScalarField& add_scaled(double factor, const ScalarField& other);

  /// Throws ConfigError unless `other` shares grid and location.
  void require_compatible(const ScalarField& other, std::string_view context) const;

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(grid_.nx()) +
           static_cast<std::size_t>(i);
  }
  int wrap(int i) const noexcept {
    const int n = grid_.nx();
    i %= n;
    return i < 0 ? i + n : i;
  }

  StaggeredGrid grid_;
  Location loc_;
  std::vector<double> data_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double factor, ScalarField a);

/// One time level of the Boussinesq state.
struct FieldSet {
  ScalarField u;         // x-faces
  ScalarField v;         // y-faces, wall rows held at zero
  ScalarField theta;     // cell centers
  ScalarField pressure;  // cell centers
  double time = 0.0;

  explicit FieldSet(const StaggeredGrid& grid, double t = 0.0);
  FieldSet(ScalarField u, ScalarField v, ScalarField theta, ScalarField pressure, double t);

  const StaggeredGrid& grid() const noexcept { return theta.grid(); }
  bool all_finite() const noexcept;

  friend bool operator==(const FieldSet&, const FieldSet&) = default;
};

// ---------------------------------------------------------------------------
// Discrete operators. All are second-order central, periodic in x. Walls use
// ghost reflection ghost = 2 * wall_value - interior with zero wall values for
// u and theta; v lives on the walls and is zero there.

/// Ghost value mirrored across the bottom (side = 0) or top (side = 1) wall
/// for a field with homogeneous Dirichlet wall value.
double wall_ghost(const ScalarField& s, int i, int side);

/// Cell-centered discrete divergence of (u, v).
ScalarField divergence(const ScalarField& u, const ScalarField& v);
ScalarField divergence(const FieldSet& fs);

/// Conservative advective tendency -div(u s) of a cell-centered scalar.
ScalarField advect_scalar(const FieldSet& fs, const ScalarField& s);

/// Conservative momentum advection tendencies -div(u u) at x-faces and
/// -div(u v) at y-faces (zero on wall rows).
std::pair<ScalarField, ScalarField> advect_momentum(const FieldSet& fs);

/// coeff * 5-point Laplacian at the location of `s`. For y-face fields the
/// wall rows are returned as zero.
ScalarField diffuse(const ScalarField& s, double coeff);

/// Enforce no-penetration (v = 0 on walls). No-slip and isothermal walls are
/// realised through `wall_ghost` inside the stencils.
FieldSet apply_boundary_conditions(FieldSet fs);

/// Gradient of a cell-centered field: x-component at x-faces, y-component at
/// y-faces with zero normal gradient on the walls.
std::pair<ScalarField, ScalarField> gradient(const ScalarField& p);

/// Average of the two cell centers adjacent to each interior y-face.
ScalarField centers_to_yfaces(const ScalarField& c);
/// Average of the two y-faces bounding each cell.
ScalarField yfaces_to_centers(const ScalarField& v);

/// Cell-centered Neumann Laplacian (adjoint pair of `gradient` and
/// `divergence`).
ScalarField neumann_laplacian(const ScalarField& p);

}  // namespace rbda

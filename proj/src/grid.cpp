#include "rbda/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rbda {

std::string_view to_string(Location loc) {
  switch (loc) {
    case Location::cell_center: return "cell-center";
    case Location::x_face: return "x-face";
    case Location::y_face: return "y-face";
  }
  return "unknown";
}

StaggeredGrid::StaggeredGrid(int nx, int ny, double lx, double ly)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly), hx_(0.0), hy_(0.0) {
  if (nx < 4 || ny < 4) {
    throw ConfigError("grid needs at least 4x4 cells, got " + std::to_string(nx) + "x" +
                      std::to_string(ny));
  }
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw ConfigError("grid extents must be positive and finite");
  }
  hx_ = (lx_ / ly_) / nx_;
  hy_ = 1.0 / ny_;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(const StaggeredGrid& grid, Location loc, double value)
    : grid_(grid), loc_(loc), data_(grid.size(loc), value) {}

ScalarField::ScalarField(const StaggeredGrid& grid, Location loc, std::vector<double> values)
    : grid_(grid), loc_(loc), data_(std::move(values)) {
  if (data_.size() != grid_.size(loc_)) {
    throw ConfigError("field of " + std::string(to_string(loc_)) + " needs " +
                      std::to_string(grid_.size(loc_)) + " values, got " +
                      std::to_string(data_.size()));
  }
}

void ScalarField::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

bool ScalarField::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double ScalarField::max_abs() const noexcept {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double ScalarField::sum() const noexcept {
  double s = 0.0;
  for (double x : data_) s += x;
  return s;
}

double ScalarField::sum_squares() const noexcept {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return s;
}

void ScalarField::require_compatible(const ScalarField& other, std::string_view context) const {
  if (!(grid_ == other.grid_)) {
    throw ConfigError(std::string(context) + ": fields live on different grids");
  }
  if (loc_ != other.loc_) {
    throw ConfigError(std::string(context) + ": location mismatch (" +
                      std::string(to_string(loc_)) + " vs " +
                      std::string(to_string(other.loc_)) + ")");
  }
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  require_compatible(other, "field addition");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  require_compatible(other, "field subtraction");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double factor) noexcept {
  for (double& x : data_) x *= factor;
  return *this;
}

ScalarField& ScalarField::add_scaled(double factor, const ScalarField& other) {
  require_compatible(other, "scaled field addition");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += factor * other.data_[k];
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double factor, ScalarField a) { return a *= factor; }

// ---------------------------------------------------------------------------

FieldSet::FieldSet(const StaggeredGrid& grid, double t)
    : u(grid, Location::x_face),
      v(grid, Location::y_face),
      theta(grid, Location::cell_center),
      pressure(grid, Location::cell_center),
      time(t) {}

FieldSet::FieldSet(ScalarField u_, ScalarField v_, ScalarField theta_, ScalarField pressure_,
                   double t)
    : u(std::move(u_)),
      v(std::move(v_)),
      theta(std::move(theta_)),
      pressure(std::move(pressure_)),
      time(t) {
  if (u.location() != Location::x_face || v.location() != Location::y_face ||
      theta.location() != Location::cell_center ||
      pressure.location() != Location::cell_center) {
    throw ConfigError("field set expects u at x-faces, v at y-faces, theta/p at centers");
  }
  if (!(u.grid() == theta.grid()) || !(v.grid() == theta.grid()) ||
      !(pressure.grid() == theta.grid())) {
    throw ConfigError("field set members must share one grid");
  }
}

bool FieldSet::all_finite() const noexcept {
  return u.all_finite() && v.all_finite() && theta.all_finite() && pressure.all_finite();
}

// ---------------------------------------------------------------------------

namespace {

void require_location(const ScalarField& s, Location loc, std::string_view context) {
  if (s.location() != loc) {
    throw ConfigError(std::string(context) + " expects a " + std::string(to_string(loc)) +
                      " field, got " + std::string(to_string(s.location())));
  }
}

void require_same_grid(const StaggeredGrid& a, const StaggeredGrid& b, std::string_view context) {
  if (!(a == b)) throw ConfigError(std::string(context) + ": grid mismatch");
}

inline int prev(int i, int n) { return i == 0 ? n - 1 : i - 1; }
inline int next(int i, int n) { return i == n - 1 ? 0 : i + 1; }

}  // namespace

double wall_ghost(const ScalarField& s, int i, int side) {
  const int j = side == 0 ? 0 : s.rows() - 1;
  return -s.at(i, j);
}

ScalarField divergence(const ScalarField& u, const ScalarField& v) {
  require_location(u, Location::x_face, "divergence");
  require_location(v, Location::y_face, "divergence");
  require_same_grid(u.grid(), v.grid(), "divergence");
  const StaggeredGrid& g = u.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const double rhx = 1.0 / g.hx();
  const double rhy = 1.0 / g.hy();
  ScalarField div(g, Location::cell_center);
  for (int j = 0; j < ny; ++j) {
    const double* ur = u.data() + static_cast<std::size_t>(j) * nx;
    const double* vb = v.data() + static_cast<std::size_t>(j) * nx;
    const double* vt = vb + nx;
    double* d = div.data() + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      d[i] = (ur[next(i, nx)] - ur[i]) * rhx + (vt[i] - vb[i]) * rhy;
    }
  }
  return div;
}

ScalarField divergence(const FieldSet& fs) { return divergence(fs.u, fs.v); }

ScalarField advect_scalar(const FieldSet& fs, const ScalarField& s) {
  require_location(s, Location::cell_center, "advect_scalar");
  require_same_grid(fs.grid(), s.grid(), "advect_scalar");
  const StaggeredGrid& g = s.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const double rhx = 1.0 / g.hx();
  const double rhy = 1.0 / g.hy();
  ScalarField out(g, Location::cell_center);
  // Vertical fluxes through y-faces; wall faces carry v = 0.
  std::vector<double> below(static_cast<std::size_t>(nx), 0.0);
  std::vector<double> above(static_cast<std::size_t>(nx), 0.0);
  for (int j = 0; j < ny; ++j) {
    const double* sr = s.data() + static_cast<std::size_t>(j) * nx;
    const double* ur = fs.u.data() + static_cast<std::size_t>(j) * nx;
    if (j + 1 < ny) {
      const double* vt = fs.v.data() + static_cast<std::size_t>(j + 1) * nx;
      const double* sa = sr + nx;
      for (int i = 0; i < nx; ++i) above[i] = vt[i] * 0.5 * (sr[i] + sa[i]);
    } else {
      std::fill(above.begin(), above.end(), 0.0);
    }
    double* o = out.data() + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      const int ip = next(i, nx);
      const int im = prev(i, nx);
      const double fe = ur[ip] * 0.5 * (sr[i] + sr[ip]);
      const double fw = ur[i] * 0.5 * (sr[im] + sr[i]);
      o[i] = -((fe - fw) * rhx + (above[i] - below[i]) * rhy);
    }
    std::swap(below, above);
  }
  return out;
}

std::pair<ScalarField, ScalarField> advect_momentum(const FieldSet& fs) {
  const StaggeredGrid& g = fs.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const double rhx = 1.0 / g.hx();
  const double rhy = 1.0 / g.hy();
  const ScalarField& u = fs.u;
  const ScalarField& v = fs.v;
  ScalarField au(g, Location::x_face);
  ScalarField av(g, Location::y_face);

  // Corner flux u*v at (x-face i, y-face j); zero on wall rows.
  std::vector<double> corner(static_cast<std::size_t>(nx) * (ny + 1), 0.0);
  for (int j = 1; j < ny; ++j) {
    const double* ub = u.data() + static_cast<std::size_t>(j - 1) * nx;
    const double* ut = ub + nx;
    const double* vr = v.data() + static_cast<std::size_t>(j) * nx;
    double* c = corner.data() + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      c[i] = 0.5 * (ub[i] + ut[i]) * 0.5 * (vr[prev(i, nx)] + vr[i]);
    }
  }

  for (int j = 0; j < ny; ++j) {
    const double* ur = u.data() + static_cast<std::size_t>(j) * nx;
    const double* cb = corner.data() + static_cast<std::size_t>(j) * nx;
    const double* ct = cb + nx;
    double* o = au.data() + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      const int ip = next(i, nx);
      const int im = prev(i, nx);
      const double ce = 0.5 * (ur[i] + ur[ip]);
      const double cw = 0.5 * (ur[im] + ur[i]);
      o[i] = -((ce * ce - cw * cw) * rhx + (ct[i] - cb[i]) * rhy);
    }
  }

  for (int j = 1; j < ny; ++j) {
    const double* vr = v.data() + static_cast<std::size_t>(j) * nx;
    const double* vb = vr - nx;
    const double* vt = vr + nx;
    const double* c = corner.data() + static_cast<std::size_t>(j) * nx;
    double* o = av.data() + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      const double cn = 0.5 * (vr[i] + vt[i]);
      const double cs = 0.5 * (vb[i] + vr[i]);
      o[i] = -((c[next(i, nx)] - c[i]) * rhx + (cn * cn - cs * cs) * rhy);
    }
  }
  return {std::move(au), std::move(av)};
}

ScalarField diffuse(const ScalarField& s, double coeff) {
  if (!(coeff >= 0.0) || !std::isfinite(coeff)) {
    throw ConfigError("diffusion coefficient must be finite and non-negative");
  }
  const StaggeredGrid& g = s.grid();
  const int nx = g.nx();
  const int rows = s.rows();
  const double cx = coeff / (g.hx() * g.hx());
  const double cy = coeff / (g.hy() * g.hy());
  ScalarField out(g, s.location());
  if (coeff == 0.0) return out;

  const bool faces_on_walls = s.location() == Location::y_face;
  const int j0 = faces_on_walls ? 1 : 0;
  const int j1 = faces_on_walls ? rows - 1 : rows;
  for (int j = j0; j < j1; ++j) {
    const double* r = s.data() + static_cast<std::size_t>(j) * nx;
    double* o = out.data() + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      // Dirichlet-zero ghosts mirror the first interior row.
      const double below = j > 0 ? r[i - nx] : -r[i];
      const double above = j + 1 < rows ? r[i + nx] : -r[i];
      o[i] = cx * (r[prev(i, nx)] - 2.0 * r[i] + r[next(i, nx)]) +
             cy * (below - 2.0 * r[i] + above);
    }
  }
  return out;
}

FieldSet apply_boundary_conditions(FieldSet fs) {
  const int ny = fs.grid().ny();
  for (double& x : fs.v.row(0)) x = 0.0;
  for (double& x : fs.v.row(ny)) x = 0.0;
  return fs;
}

std::pair<ScalarField, ScalarField> gradient(const ScalarField& p) {
  require_location(p, Location::cell_center, "gradient");
  const StaggeredGrid& g = p.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const double rhx = 1.0 / g.hx();
  const double rhy = 1.0 / g.hy();
  ScalarField gx(g, Location::x_face);
  ScalarField gy(g, Location::y_face);
  for (int j = 0; j < ny; ++j) {
    const double* r = p.data() + static_cast<std::size_t>(j) * nx;
    double* o = gx.data() + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) o[i] = (r[i] - r[prev(i, nx)]) * rhx;
  }
  for (int j = 1; j < ny; ++j) {
    const double* r = p.data() + static_cast<std::size_t>(j) * nx;
    const double* b = r - nx;
    double* o = gy.data() + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) o[i] = (r[i] - b[i]) * rhy;
  }
  return {std::move(gx), std::move(gy)};
}

ScalarField centers_to_yfaces(const ScalarField& c) {
  require_location(c, Location::cell_center, "centers_to_yfaces");
  const StaggeredGrid& g = c.grid();
  const int nx = g.nx();
  ScalarField out(g, Location::y_face);
  for (int j = 1; j < g.ny(); ++j) {
    const double* t = c.data() + static_cast<std::size_t>(j) * nx;
    const double* b = t - nx;
    double* o = out.data() + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) o[i] = 0.5 * (b[i] + t[i]);
  }
  return out;
}

ScalarField yfaces_to_centers(const ScalarField& v) {
  require_location(v, Location::y_face, "yfaces_to_centers");
  const StaggeredGrid& g = v.grid();
  const int nx = g.nx();
  ScalarField out(g, Location::cell_center);
  for (int j = 0; j < g.ny(); ++j) {
    const double* b = v.data() + static_cast<std::size_t>(j) * nx;
    const double* t = b + nx;
    double* o = out.data() + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) o[i] = 0.5 * (b[i] + t[i]);
  }
  return out;
}

ScalarField neumann_laplacian(const ScalarField& p) {
  auto [gx, gy] = gradient(p);
  return divergence(gx, gy);
}

}  // namespace rbda

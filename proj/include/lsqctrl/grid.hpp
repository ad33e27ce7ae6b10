#pragma once

// Uniform staggered (MAC) grids on the rectangle (0,Lx)x(0,Ly) and on the
// space-time cylinder Q_T = Omega x (0,T).
//
// With nx, ny interior vertices per axis the spacings are h = L/(n+1):
//   cells     (nx+1) x (ny+1)   pressure, divergence
//   x-faces    nx    x (ny+1)   first velocity component (interior faces only)
//   y-faces   (nx+1) x  ny      second velocity component
//   vertices   nx    x  ny      scalar nodal fields
// Storage is column-major, index = i + rows * j, with i along x.
//
// Time: nt intervals of length ht = T/nt. Velocity and correctors live on the
// nt+1 time nodes; pressure and control live on the nt intervals.

#include <Eigen/Core>
#include <optional>
#include <string>

#include "lsqctrl/error.hpp"

namespace lsqctrl {

using Eigen::VectorXd;

enum class Stagger { vertex, face_x, face_y, cell };

/// How a 1-D axis of a component grid meets the wall. `node`: unknowns sit on
/// interior grid lines and the wall value is an eliminated Dirichlet zero.
/// `shifted`: unknowns sit half a cell off the wall; a zero wall value is
/// imposed by odd reflection.
enum class AxisKind { node, shifted };

struct Layout {
  int rows = 0;  ///< count along x
  int cols = 0;  ///< count along y
  AxisKind kind_x = AxisKind::node;
  AxisKind kind_y = AxisKind::node;
  double hx = 0, hy = 0;

  int size() const { return rows * cols; }
  int index(int i, int j) const { return i + rows * j; }
  double x(int i) const { return kind_x == AxisKind::node ? (i + 1) * hx : (i + 0.5) * hx; }
  double y(int j) const { return kind_y == AxisKind::node ? (j + 1) * hy : (j + 0.5) * hy; }
};

class Grid2 {
 public:
  Grid2(int nx, int ny, double lx = 1.0, double ly = 1.0) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
    detail::require(nx >= 2 && ny >= 2, "Grid2: nx and ny must be >= 2");
    detail::require(lx > 0 && ly > 0, "Grid2: domain lengths must be positive");
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double hx() const { return lx_ / (nx_ + 1); }
  double hy() const { return ly_ / (ny_ + 1); }
  /// Quadrature weight of every unknown (all component grids share it).
  double cell_area() const { return hx() * hy(); }

  Layout layout(Stagger s) const {
    switch (s) {
      case Stagger::vertex:
        return {nx_, ny_, AxisKind::node, AxisKind::node, hx(), hy()};
      case Stagger::face_x:
        return {nx_, ny_ + 1, AxisKind::node, AxisKind::shifted, hx(), hy()};
      case Stagger::face_y:
        return {nx_ + 1, ny_, AxisKind::shifted, AxisKind::node, hx(), hy()};
      case Stagger::cell:
        return {nx_ + 1, ny_ + 1, AxisKind::shifted, AxisKind::shifted, hx(), hy()};
    }
    return {};
  }

  int n_u() const { return nx_ * (ny_ + 1); }
  int n_v() const { return (nx_ + 1) * ny_; }
  int n_vel() const { return n_u() + n_v(); }
  int n_cell() const { return (nx_ + 1) * (ny_ + 1); }
  int n_vertex() const { return nx_ * ny_; }

  bool operator==(const Grid2&) const = default;

 private:
  int nx_, ny_;
  double lx_, ly_;
};

class SpaceTimeGrid {
 public:
  SpaceTimeGrid(Grid2 space, int nt, double t_final) : space_(space), nt_(nt), t_(t_final) {
    detail::require(nt >= 2, "SpaceTimeGrid: nt must be >= 2");
    detail::require(t_final > 0, "SpaceTimeGrid: T must be positive");
  }
  SpaceTimeGrid(int nx, int ny, int nt, double lx = 1, double ly = 1, double t_final = 1)
      : SpaceTimeGrid(Grid2(nx, ny, lx, ly), nt, t_final) {}

  const Grid2& space() const { return space_; }
  int nt() const { return nt_; }
  double t_final() const { return t_; }
  double ht() const { return t_ / nt_; }
  double time_node(int k) const { return k * ht(); }
  double interval_mid(int k) const { return (k + 0.5) * ht(); }
  /// Trapezoidal weight of time node k.
  double node_weight(int k) const { return (k == 0 || k == nt_) ? 0.5 * ht() : ht(); }

  int n_nodes() const { return nt_ + 1; }
  /// Sizes of flattened space-time fields.
  int nodal_velocity_size() const { return (nt_ + 1) * space_.n_vel(); }
  int interval_velocity_size() const { return nt_ * space_.n_vel(); }
  int interval_cell_size() const { return nt_ * space_.n_cell(); }

  bool operator==(const SpaceTimeGrid&) const = default;

 private:
  Grid2 space_;
  int nt_;
  double t_;
};

/// Slices of flattened space-time arrays (slice k occupies [k*n, (k+1)*n)).
inline auto slice(VectorXd& v, int k, int n) { return v.segment(static_cast<Eigen::Index>(k) * n, n); }
inline auto slice(const VectorXd& v, int k, int n) {
  return v.segment(static_cast<Eigen::Index>(k) * n, n);
}

/// Views of the two velocity components of one slice.
template <class V>
auto u_part(V&& vel, const Grid2& g) { return vel.head(g.n_u()); }
template <class V>
auto v_part(V&& vel, const Grid2& g) { return vel.tail(g.n_v()); }

/// Closed rectangle [x0,x1]x[y0,y1], optionally restricted to a time window
/// [t0,t1]; realized as 0/1 weights on velocity unknowns and time intervals.
struct SupportMask {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  std::optional<std::pair<double, double>> time_window;

  static SupportMask whole(const Grid2& g) { return {0, g.lx(), 0, g.ly(), std::nullopt}; }

  void validate(const Grid2& g, std::optional<double> t_final = std::nullopt) const {
    const double tol = 1e-12 * std::max(g.lx(), g.ly());
    detail::require(x0 < x1 && y0 < y1, "SupportMask: empty interior");
    detail::require(x0 >= -tol && y0 >= -tol && x1 <= g.lx() + tol && y1 <= g.ly() + tol,
                    "SupportMask: rectangle outside the domain");
    if (time_window) {
      detail::require(time_window->first < time_window->second,
                      "SupportMask: empty time window");
      if (t_final)
        detail::require(time_window->first >= 0 && time_window->second <= *t_final + 1e-12,
                        "SupportMask: time window outside [0,T]");
    }
  }

  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool active(double t) const {
    return !time_window || (t >= time_window->first && t <= time_window->second);
  }

  /// 0/1 weights on the velocity unknowns of one slice.
  VectorXd spatial_weights(const Grid2& g) const {
    VectorXd w(g.n_vel());
    const Layout lu = g.layout(Stagger::face_x), lv = g.layout(Stagger::face_y);
    for (int j = 0; j < lu.cols; ++j)
      for (int i = 0; i < lu.rows; ++i) w(lu.index(i, j)) = contains(lu.x(i), lu.y(j)) ? 1 : 0;
    for (int j = 0; j < lv.cols; ++j)
      for (int i = 0; i < lv.rows; ++i)
        w(g.n_u() + lv.index(i, j)) = contains(lv.x(i), lv.y(j)) ? 1 : 0;
    return w;
  }

  /// 0/1 weights on interval-based velocity fields (interval k active when its
  /// midpoint lies in the time window).
  VectorXd weights(const SpaceTimeGrid& st) const {
    const VectorXd s = spatial_weights(st.space());
    const int n = st.space().n_vel();
    VectorXd w = VectorXd::Zero(st.interval_velocity_size());
    for (int k = 0; k < st.nt(); ++k)
      if (active(st.interval_mid(k))) slice(w, k, n) = s;
    return w;
  }
};

}  // namespace lsqctrl

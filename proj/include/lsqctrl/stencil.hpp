#pragma once

// Second-order MAC stencils on one time slice. Velocity slices are stored as
// [u (x-faces); v (y-faces)], pressure-like scalars on cells. Wall values of the
// normal component are zero; tangential components are reflected oddly so the
// no-slip condition holds on the wall itself.
//
// All unknowns carry the same quadrature weight m = hx*hy, so with G = -D^T the
// discrete gradient and divergence are exactly adjoint in the weighted sums.

#include <Eigen/Core>

#include "lsqctrl/grid.hpp"

namespace lsqctrl::stencil {

using CRef = const Eigen::Ref<const VectorXd>&;

namespace detail_st {

inline void check(const Grid2& g, Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    throw InputError(std::string("stencil: ") + what + " has size " + std::to_string(got) +
                     ", expected " + std::to_string(want) + " on a " +
                     std::to_string(g.nx()) + "x" + std::to_string(g.ny()) + " grid");
}

}  // namespace detail_st

/// Cell divergence of a face velocity.
inline VectorXd divergence(const Grid2& g, CRef vel) {
  detail_st::check(g, vel.size(), g.n_vel(), "velocity");
  const int nx = g.nx(), ny = g.ny();
  const double ihx = 1 / g.hx(), ihy = 1 / g.hy();
  const Layout lu = g.layout(Stagger::face_x), lv = g.layout(Stagger::face_y),
               lc = g.layout(Stagger::cell);
  const double* u = vel.data();
  const double* v = vel.data() + g.n_u();
  VectorXd out(g.n_cell());
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double ue = i < nx ? u[lu.index(i, j)] : 0.0;
      const double uw = i > 0 ? u[lu.index(i - 1, j)] : 0.0;
      const double vn = j < ny ? v[lv.index(i, j)] : 0.0;
      const double vs = j > 0 ? v[lv.index(i, j - 1)] : 0.0;
      out(lc.index(i, j)) = (ue - uw) * ihx + (vn - vs) * ihy;
    }
  return out;
}

/// Face gradient of a cell scalar; equals -D^T.
inline VectorXd gradient(const Grid2& g, CRef p) {
  detail_st::check(g, p.size(), g.n_cell(), "cell scalar");
  const int nx = g.nx(), ny = g.ny();
  const double ihx = 1 / g.hx(), ihy = 1 / g.hy();
  const Layout lu = g.layout(Stagger::face_x), lv = g.layout(Stagger::face_y),
               lc = g.layout(Stagger::cell);
  VectorXd out(g.n_vel());
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i)
      out(lu.index(i, j)) = (p(lc.index(i + 1, j)) - p(lc.index(i, j))) * ihx;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i)
      out(g.n_u() + lv.index(i, j)) = (p(lc.index(i, j + 1)) - p(lc.index(i, j))) * ihy;
  return out;
}

namespace detail_st {

// -d2/dx2 - d2/dy2 on one component grid, returned as the positive operator.
inline void negative_laplacian(const Layout& l, const double* in, double* out) {
  const double ihx2 = 1 / (l.hx * l.hx), ihy2 = 1 / (l.hy * l.hy);
  const double endx = l.kind_x == AxisKind::node ? 2.0 : 3.0;
  const double endy = l.kind_y == AxisKind::node ? 2.0 : 3.0;
  for (int j = 0; j < l.cols; ++j)
    for (int i = 0; i < l.rows; ++i) {
      const double c = in[l.index(i, j)];
      double ax = (i == 0 || i == l.rows - 1) ? endx * c : 2 * c;
      if (l.rows == 1) ax = (2 * endx - 2) * c;
      if (i > 0) ax -= in[l.index(i - 1, j)];
      if (i < l.rows - 1) ax -= in[l.index(i + 1, j)];
      double ay = (j == 0 || j == l.cols - 1) ? endy * c : 2 * c;
      if (l.cols == 1) ay = (2 * endy - 2) * c;
      if (j > 0) ay -= in[l.index(i, j - 1)];
      if (j < l.cols - 1) ay -= in[l.index(i, j + 1)];
      out[l.index(i, j)] = ax * ihx2 + ay * ihy2;
    }
}

}  // namespace detail_st

/// A_h = -Laplacian on a velocity slice (homogeneous Dirichlet).
inline VectorXd neg_laplacian(const Grid2& g, CRef vel) {
  detail_st::check(g, vel.size(), g.n_vel(), "velocity");
  VectorXd out(g.n_vel());
  detail_st::negative_laplacian(g.layout(Stagger::face_x), vel.data(), out.data());
  detail_st::negative_laplacian(g.layout(Stagger::face_y), vel.data() + g.n_u(),
                                out.data() + g.n_u());
  return out;
}

/// Laplacian on a velocity slice.
inline VectorXd laplacian(const Grid2& g, CRef vel) { return -neg_laplacian(g, vel); }

/// Five-point Dirichlet Laplacian of a vertex scalar.
inline VectorXd vertex_laplacian(const Grid2& g, CRef s) {
  detail_st::check(g, s.size(), g.n_vertex(), "vertex scalar");
  VectorXd out(g.n_vertex());
  detail_st::negative_laplacian(g.layout(Stagger::vertex), s.data(), out.data());
  return -out;
}

/// Neumann Laplacian of a cell scalar, D G, written out as its own stencil.
inline VectorXd cell_laplacian(const Grid2& g, CRef p) {
  detail_st::check(g, p.size(), g.n_cell(), "cell scalar");
  const Layout l = g.layout(Stagger::cell);
  const double ihx2 = 1 / (l.hx * l.hx), ihy2 = 1 / (l.hy * l.hy);
  VectorXd out(l.size());
  for (int j = 0; j < l.cols; ++j)
    for (int i = 0; i < l.rows; ++i) {
      const double c = p(l.index(i, j));
      double s = 0;
      if (i > 0) s += (p(l.index(i - 1, j)) - c) * ihx2;
      if (i < l.rows - 1) s += (p(l.index(i + 1, j)) - c) * ihx2;
      if (j > 0) s += (p(l.index(i, j - 1)) - c) * ihy2;
      if (j < l.cols - 1) s += (p(l.index(i, j + 1)) - c) * ihy2;
      out(l.index(i, j)) = s;
    }
  return out;
}

/// Discrete H^1_0 seminorm squared, m <A_h w, w>.
inline double stiffness(const Grid2& g, CRef vel) {
  return g.cell_area() * vel.dot(neg_laplacian(g, vel));
}

/// Weighted L^2 inner product of two slices of the same kind.
inline double inner(const Grid2& g, CRef a, CRef b) { return g.cell_area() * a.dot(b); }

// ---------------------------------------------------------------------------
// Convection div(y (x) z) in flux form. Component i of the result is
// d_x(y_i z_1) + d_y(y_i z_2). Diagonal fluxes live on cells (face averages),
// off-diagonal ones on interior vertices (averaged across the face pair);
// fluxes on wall vertices vanish because the tangential wall velocity is zero.

struct FaceAverages {
  VectorXd u_cell, v_cell;      // on cells
  VectorXd u_vertex, v_vertex;  // on interior vertices
};

inline FaceAverages face_averages(const Grid2& g, CRef vel) {
  detail_st::check(g, vel.size(), g.n_vel(), "velocity");
  const int nx = g.nx(), ny = g.ny();
  const Layout lu = g.layout(Stagger::face_x), lv = g.layout(Stagger::face_y),
               lc = g.layout(Stagger::cell), lx = g.layout(Stagger::vertex);
  const double* u = vel.data();
  const double* v = vel.data() + g.n_u();
  FaceAverages a{VectorXd(g.n_cell()), VectorXd(g.n_cell()), VectorXd(g.n_vertex()),
                 VectorXd(g.n_vertex())};
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double ue = i < nx ? u[lu.index(i, j)] : 0.0;
      const double uw = i > 0 ? u[lu.index(i - 1, j)] : 0.0;
      const double vn = j < ny ? v[lv.index(i, j)] : 0.0;
      const double vs = j > 0 ? v[lv.index(i, j - 1)] : 0.0;
      a.u_cell(lc.index(i, j)) = 0.5 * (ue + uw);
      a.v_cell(lc.index(i, j)) = 0.5 * (vn + vs);
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      a.u_vertex(lx.index(i, j)) = 0.5 * (u[lu.index(i, j)] + u[lu.index(i, j + 1)]);
      a.v_vertex(lx.index(i, j)) = 0.5 * (v[lv.index(i, j)] + v[lv.index(i + 1, j)]);
    }
  return a;
}

namespace detail_st {

// Divergence of the tensor with diagonal entries (cxx, cyy) on cells and
// off-diagonal entries (vxy: row u / column y, vyx: row v / column x) on vertices.
inline VectorXd tensor_divergence(const Grid2& g, const VectorXd& cxx, const VectorXd& cyy,
                                  const VectorXd& vxy, const VectorXd& vyx) {
  const int nx = g.nx(), ny = g.ny();
  const double ihx = 1 / g.hx(), ihy = 1 / g.hy();
  const Layout lu = g.layout(Stagger::face_x), lv = g.layout(Stagger::face_y),
               lc = g.layout(Stagger::cell), lx = g.layout(Stagger::vertex);
  VectorXd out(g.n_vel());
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double above = j < ny ? vxy(lx.index(i, j)) : 0.0;
      const double below = j > 0 ? vxy(lx.index(i, j - 1)) : 0.0;
      out(lu.index(i, j)) =
          (cxx(lc.index(i + 1, j)) - cxx(lc.index(i, j))) * ihx + (above - below) * ihy;
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double right = i < nx ? vyx(lx.index(i, j)) : 0.0;
      const double left = i > 0 ? vyx(lx.index(i - 1, j)) : 0.0;
      out(g.n_u() + lv.index(i, j)) =
          (right - left) * ihx + (cyy(lc.index(i, j + 1)) - cyy(lc.index(i, j))) * ihy;
    }
  return out;
}

}  // namespace detail_st

/// div(y (x) z): bilinear, flux form.
inline VectorXd convection(const Grid2& g, CRef y, CRef z) {
  const FaceAverages a = face_averages(g, y), b = face_averages(g, z);
  return detail_st::tensor_divergence(
      g, a.u_cell.cwiseProduct(b.u_cell), a.v_cell.cwiseProduct(b.v_cell),
      a.u_vertex.cwiseProduct(b.v_vertex), a.v_vertex.cwiseProduct(b.u_vertex));
}

/// The non-conservative side y div z + (grad y) z, evaluated with centered
/// differences at each face (odd reflection across walls for the tangential
/// component). Agrees with `convection` to second order away from walls.
inline VectorXd convection_nonconservative(const Grid2& g, CRef y, CRef z) {
  detail_st::check(g, y.size(), g.n_vel(), "velocity");
  detail_st::check(g, z.size(), g.n_vel(), "velocity");
  const int nx = g.nx(), ny = g.ny();
  const double hx = g.hx(), hy = g.hy();
  const Layout lu = g.layout(Stagger::face_x), lv = g.layout(Stagger::face_y),
               lc = g.layout(Stagger::cell);
  const VectorXd divz = divergence(g, z);
  const double *yu = y.data(), *yv = y.data() + g.n_u();
  const double *zu = z.data(), *zv = z.data() + g.n_u();
  // Reads with wall handling: normal components vanish on the wall line, tangential
  // ones are reflected oddly across it.
  auto u_at = [&](const double* f, int i, int j) {
    if (i < 0 || i >= nx) return 0.0;
    if (j < 0) return -f[lu.index(i, 0)];
    if (j > ny) return -f[lu.index(i, ny)];
    return f[lu.index(i, j)];
  };
  auto v_at = [&](const double* f, int i, int j) {
    if (j < 0 || j >= ny) return 0.0;
    if (i < 0) return -f[lv.index(0, j)];
    if (i > nx) return -f[lv.index(nx, j)];
    return f[lv.index(i, j)];
  };
  VectorXd out(g.n_vel());
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double div_face = 0.5 * (divz(lc.index(i, j)) + divz(lc.index(i + 1, j)));
      const double z2 = 0.25 * (v_at(zv, i, j) + v_at(zv, i + 1, j) + v_at(zv, i, j - 1) +
                                v_at(zv, i + 1, j - 1));
      const double dx = (u_at(yu, i + 1, j) - u_at(yu, i - 1, j)) / (2 * hx);
      const double dy = (u_at(yu, i, j + 1) - u_at(yu, i, j - 1)) / (2 * hy);
      out(lu.index(i, j)) = yu[lu.index(i, j)] * div_face + zu[lu.index(i, j)] * dx + z2 * dy;
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double div_face = 0.5 * (divz(lc.index(i, j)) + divz(lc.index(i, j + 1)));
      const double z1 = 0.25 * (u_at(zu, i, j) + u_at(zu, i - 1, j) + u_at(zu, i, j + 1) +
                                u_at(zu, i - 1, j + 1));
      const double dx = (v_at(yv, i + 1, j) - v_at(yv, i - 1, j)) / (2 * hx);
      const double dy = (v_at(yv, i, j + 1) - v_at(yv, i, j - 1)) / (2 * hy);
      out(g.n_u() + lv.index(i, j)) = yv[lv.index(i, j)] * div_face + z1 * dx + zv[lv.index(i, j)] * dy;
    }
  return out;
}

/// Components of grad p for a face velocity p, on the grids where the flux
/// form pairs them: d_x p1, d_y p2 on cells; d_y p1, d_x p2 on vertices.
struct VelocityGradient {
  VectorXd dxu_cell, dyv_cell, dyu_vertex, dxv_vertex;
};

inline VelocityGradient velocity_gradient(const Grid2& g, CRef p) {
  detail_st::check(g, p.size(), g.n_vel(), "velocity");
  const int nx = g.nx(), ny = g.ny();
  const double ihx = 1 / g.hx(), ihy = 1 / g.hy();
  const Layout lu = g.layout(Stagger::face_x), lv = g.layout(Stagger::face_y),
               lc = g.layout(Stagger::cell), lx = g.layout(Stagger::vertex);
  const double* u = p.data();
  const double* v = p.data() + g.n_u();
  VelocityGradient d{VectorXd(g.n_cell()), VectorXd(g.n_cell()), VectorXd(g.n_vertex()),
                     VectorXd(g.n_vertex())};
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double ue = i < nx ? u[lu.index(i, j)] : 0.0;
      const double uw = i > 0 ? u[lu.index(i - 1, j)] : 0.0;
      const double vn = j < ny ? v[lv.index(i, j)] : 0.0;
      const double vs = j > 0 ? v[lv.index(i, j - 1)] : 0.0;
      d.dxu_cell(lc.index(i, j)) = (ue - uw) * ihx;
      d.dyv_cell(lc.index(i, j)) = (vn - vs) * ihy;
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      d.dyu_vertex(lx.index(i, j)) = (u[lu.index(i, j + 1)] - u[lu.index(i, j)]) * ihy;
      d.dxv_vertex(lx.index(i, j)) = (v[lv.index(i + 1, j)] - v[lv.index(i, j)]) * ihx;
    }
  return d;
}

/// Quadrature of (y (x) z) : grad p. Summation by parts gives
/// inner(convection(y, z), p) = -tensor_contraction(y, z, p) exactly.
inline double tensor_contraction(const Grid2& g, CRef y, CRef z, CRef p) {
  const FaceAverages a = face_averages(g, y), b = face_averages(g, z);
  const VelocityGradient d = velocity_gradient(g, p);
  const double s = a.u_cell.cwiseProduct(b.u_cell).dot(d.dxu_cell) +
                   a.v_cell.cwiseProduct(b.v_cell).dot(d.dyv_cell) +
                   a.u_vertex.cwiseProduct(b.v_vertex).dot(d.dyu_vertex) +
                   a.v_vertex.cwiseProduct(b.u_vertex).dot(d.dxv_vertex);
  return g.cell_area() * s;
}

/// w with inner(w, Y) = inner(convection(y, Y) + convection(Y, y), p) for all Y:
/// the transpose of the linearized convection at y, applied to p.
inline VectorXd convection_adjoint(const Grid2& g, CRef y, CRef p) {
  const int nx = g.nx(), ny = g.ny();
  const Layout lu = g.layout(Stagger::face_x), lv = g.layout(Stagger::face_y),
               lc = g.layout(Stagger::cell), lx = g.layout(Stagger::vertex);
  const FaceAverages a = face_averages(g, y);
  const VelocityGradient d = velocity_gradient(g, p);
  VectorXd out = VectorXd::Zero(g.n_vel());
  double* wu = out.data();
  double* wv = out.data() + g.n_u();
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const int c = lc.index(i, j);
      const double cu = -a.u_cell(c) * d.dxu_cell(c);  // 2 * 1/2 from the average
      const double cv = -a.v_cell(c) * d.dyv_cell(c);
      if (i < nx) wu[lu.index(i, j)] += cu;
      if (i > 0) wu[lu.index(i - 1, j)] += cu;
      if (j < ny) wv[lv.index(i, j)] += cv;
      if (j > 0) wv[lv.index(i, j - 1)] += cv;
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int k = lx.index(i, j);
      const double shear = d.dyu_vertex(k) + d.dxv_vertex(k);
      const double cu = -0.5 * a.v_vertex(k) * shear;
      const double cv = -0.5 * a.u_vertex(k) * shear;
      wu[lu.index(i, j)] += cu;
      wu[lu.index(i, j + 1)] += cu;
      wv[lv.index(i, j)] += cv;
      wv[lv.index(i + 1, j)] += cv;
    }
  return out;
}

/// Velocity averaged to all (nx+2)x(ny+2) vertices, walls included; for output.
inline std::pair<VectorXd, VectorXd> vertex_velocity(const Grid2& g, CRef vel) {
  const int nx = g.nx(), ny = g.ny();
  const FaceAverages a = face_averages(g, vel);
  const Layout lx = g.layout(Stagger::vertex);
  const int rows = nx + 2;
  VectorXd u = VectorXd::Zero(rows * (ny + 2)), v = u;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      u(i + 1 + rows * (j + 1)) = a.u_vertex(lx.index(i, j));
      v(i + 1 + rows * (j + 1)) = a.v_vertex(lx.index(i, j));
    }
  return {u, v};
}

/// Sample a field given by a callable f(x, y) on a component grid.
template <class F>
VectorXd sample(const Layout& l, F&& f) {
  VectorXd out(l.size());
  for (int j = 0; j < l.cols; ++j)
    for (int i = 0; i < l.rows; ++i) out(l.index(i, j)) = f(l.x(i), l.y(j));
  return out;
}

/// Sample a velocity (fu, fv) at the face centres.
template <class FU, class FV>
VectorXd sample_velocity(const Grid2& g, FU&& fu, FV&& fv) {
  VectorXd out(g.n_vel());
  out.head(g.n_u()) = sample(g.layout(Stagger::face_x), fu);
  out.tail(g.n_v()) = sample(g.layout(Stagger::face_y), fv);
  return out;
}

/// Discretely divergence-free velocity from a stream function psi sampled at the
/// (nx+2)x(ny+2) vertices (walls included): u = d_y psi, v = -d_x psi.
template <class Psi>
VectorXd curl_of_stream(const Grid2& g, Psi&& psi) {
  const int nx = g.nx(), ny = g.ny();
  const double hx = g.hx(), hy = g.hy();
  const Layout lu = g.layout(Stagger::face_x), lv = g.layout(Stagger::face_y);
  auto at = [&](int a, int b) { return psi(a * hx, b * hy); };  // vertex (a, b), walls at 0 and n+1
  VectorXd out(g.n_vel());
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) out(lu.index(i, j)) = (at(i + 1, j + 1) - at(i + 1, j)) / hy;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i)
      out(g.n_u() + lv.index(i, j)) = -(at(i + 1, j + 1) - at(i, j + 1)) / hx;
  return out;
}

/// Subtract the cell mean.
inline void remove_mean(Eigen::Ref<VectorXd> p) { p.array() -= p.mean(); }

}  // namespace lsqctrl::stencil

#pragma once

// Quadrature on space-time fields: midpoint/nodal weight m = hx*hy in space,
// trapezoid over time nodes, midpoint over time intervals.

#include <cmath>
#include <utility>

#include "lsqctrl/grid.hpp"

namespace lsqctrl {

/// Squared L^2(Q_T) norm of a field stored at the nt+1 time nodes; `per_slice`
/// is the number of unknowns in one slice.
inline double quadrature_nodal_sq(const SpaceTimeGrid& st, const VectorXd& field, int per_slice) {
  detail::require(field.size() == static_cast<Eigen::Index>(per_slice) * st.n_nodes(),
                  "quadrature: nodal field size mismatch");
  double s = 0;
  for (int k = 0; k <= st.nt(); ++k) s += st.node_weight(k) * slice(field, k, per_slice).squaredNorm();
  return st.space().cell_area() * s;
}

/// Squared L^2(Q_T) norm of a field constant on each of the nt time intervals.
inline double quadrature_interval_sq(const SpaceTimeGrid& st, const VectorXd& field, int per_slice) {
  detail::require(field.size() == static_cast<Eigen::Index>(per_slice) * st.nt(),
                  "quadrature: interval field size mismatch");
  return st.space().cell_area() * st.ht() * field.squaredNorm();
}

/// Integral over Q_T of a field stored at time nodes (trapezoid in time).
inline double quadrature_nodal(const SpaceTimeGrid& st, const VectorXd& field, int per_slice) {
  detail::require(field.size() == static_cast<Eigen::Index>(per_slice) * st.n_nodes(),
                  "quadrature: nodal field size mismatch");
  double s = 0;
  for (int k = 0; k <= st.nt(); ++k) s += st.node_weight(k) * slice(field, k, per_slice).sum();
  return st.space().cell_area() * s;
}

/// Integral over Omega of one slice.
inline double quadrature_slice(const Grid2& g, const VectorXd& field) {
  return g.cell_area() * field.sum();
}

/// L^2(Q_T) norm of a nodal velocity field.
inline double quadrature_l2(const SpaceTimeGrid& st, const VectorXd& nodal_velocity) {
  return std::sqrt(quadrature_nodal_sq(st, nodal_velocity, st.space().n_vel()));
}

/// (|y(.,0)|, |y(.,T)|) in L^2(Omega).
inline std::pair<double, double> trace_norms(const SpaceTimeGrid& st, const VectorXd& nodal_velocity) {
  const int n = st.space().n_vel();
  detail::require(nodal_velocity.size() == st.nodal_velocity_size(), "trace_norms: size mismatch");
  const double m = st.space().cell_area();
  return {std::sqrt(m * slice(nodal_velocity, 0, n).squaredNorm()),
          std::sqrt(m * slice(nodal_velocity, st.nt(), n).squaredNorm())};
}

}  // namespace lsqctrl

#pragma once

// Field output.
//   VTK: legacy ASCII STRUCTURED_POINTS, one file per time slice. Points are the
//   (nx+2) x (ny+2) grid vertices, walls included, carrying the averaged velocity;
//   cells carry pressure (and the control's cell-averaged magnitude when given).
//   Raw: one header line
//     LSQCTRL_RAW 1 nx ny nt name:count name:count ...
//   followed by the arrays in that order as little-endian 64-bit floats.

#include <Eigen/Core>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lsqctrl/error.hpp"
#include "lsqctrl/grid.hpp"
#include "lsqctrl/stencil.hpp"

namespace lsqctrl::io {

struct RawField {
  std::string name;
  VectorXd data;
};

struct RawFile {
  int nx = 0, ny = 0, nt = 0;
  std::vector<RawField> fields;

  const VectorXd& get(const std::string& name) const {
    for (const auto& f : fields)
      if (f.name == name) return f.data;
    throw InputError("raw file has no field '" + name + "'");
  }
};

namespace detail_dump {

inline std::uint64_t to_little(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((x >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return x;
}

inline void put(std::ostream& out, const char* fmt, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, x);
  out << buf;
}

}  // namespace detail_dump

inline void write_raw(const std::string& path, const RawFile& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SolverError("cannot write '" + path + "'");
  out << "LSQCTRL_RAW 1 " << f.nx << ' ' << f.ny << ' ' << f.nt;
  for (const auto& fl : f.fields) out << ' ' << fl.name << ':' << fl.data.size();
  out << '\n';
  for (const auto& fl : f.fields)
    for (Eigen::Index i = 0; i < fl.data.size(); ++i) {
      const std::uint64_t w = detail_dump::to_little(std::bit_cast<std::uint64_t>(fl.data(i)));
      out.write(reinterpret_cast<const char*>(&w), 8);
    }
  if (!out) throw SolverError("write failed for '" + path + "'");
}

inline RawFile read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  RawFile f;
  hs >> magic >> version >> f.nx >> f.ny >> f.nt;
  if (magic != "LSQCTRL_RAW" || version != 1 || !hs) throw InputError("'" + path + "' is not a raw field file");
  std::string item;
  while (hs >> item) {
    const auto colon = item.rfind(':');
    if (colon == std::string::npos) throw InputError("bad raw header entry '" + item + "'");
    RawField fl{item.substr(0, colon), VectorXd(std::stol(item.substr(colon + 1)))};
    f.fields.push_back(std::move(fl));
  }
  for (auto& fl : f.fields)
    for (Eigen::Index i = 0; i < fl.data.size(); ++i) {
      std::uint64_t w = 0;
      in.read(reinterpret_cast<char*>(&w), 8);
      if (!in) throw InputError("'" + path + "' is truncated");
      fl.data(i) = std::bit_cast<double>(detail_dump::to_little(w));
    }
  return f;
}

/// One slice: velocity at the vertices; optional pressure and control magnitude on cells.
inline void write_vtk_slice(const std::string& path, const Grid2& g, const VectorXd& vel,
                            const VectorXd* pressure = nullptr, const VectorXd* control = nullptr) {
  std::ofstream out(path);
  if (!out) throw SolverError("cannot write '" + path + "'");
  const int px = g.nx() + 2, py = g.ny() + 2;
  out << "# vtk DataFile Version 3.0\nlsqctrl field\nASCII\nDATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << px << ' ' << py << " 1\n";
  out << "ORIGIN 0 0 0\nSPACING ";
  detail_dump::put(out, "%.17g", g.hx());
  out << ' ';
  detail_dump::put(out, "%.17g", g.hy());
  out << " 1\n";
  const auto [u, v] = stencil::vertex_velocity(g, vel);
  out << "POINT_DATA " << px * py << "\nVECTORS velocity double\n";
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    detail_dump::put(out, "%.17g", u(i));
    out << ' ';
    detail_dump::put(out, "%.17g", v(i));
    out << " 0\n";
  }
  if (pressure || control) out << "CELL_DATA " << g.n_cell() << '\n';
  if (pressure) {
    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < pressure->size(); ++i) {
      detail_dump::put(out, "%.17g", (*pressure)(i));
      out << '\n';
    }
  }
  if (control) {
    const stencil::FaceAverages a = stencil::face_averages(g, *control);
    out << "SCALARS control_magnitude double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < a.u_cell.size(); ++i) {
      detail_dump::put(out, "%.17g", std::hypot(a.u_cell(i), a.v_cell(i)));
      out << '\n';
    }
  }
  if (!out) throw SolverError("write failed for '" + path + "'");
}

}  // namespace lsqctrl::io

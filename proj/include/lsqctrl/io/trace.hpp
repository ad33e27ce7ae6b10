#pragma once

// CSV convergence traces. Doubles are written with 17 significant digits so a
// trace round-trips exactly and identical runs give identical files.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "lsqctrl/error.hpp"

namespace lsqctrl::io {

inline const char* unsteady_trace_header() { return "iter,E,grad_norm,step,kernel_ratio,div_norm,yT_norm,f_norm"; }
inline const char* steady_trace_header() { return "iter,E,grad_norm,step,residual_norm,div_norm"; }

class TraceWriter {
 public:
  TraceWriter(const std::string& path, const char* header) : out_(path) {
    if (!out_) throw SolverError("cannot write '" + path + "'");
    out_ << header << '\n';
  }

  void row(int iter, const std::vector<double>& values) {
    out_ << iter;
    char buf[40];
    for (double x : values) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      out_ << ',' << buf;
    }
    out_ << '\n';
    if (!out_) throw SolverError("trace write failed");
  }

 private:
  std::ofstream out_;
};

}  // namespace lsqctrl::io

#pragma once

#include <cmath>
#include <vector>

#include "contactlab/error.hpp"

namespace contactlab {

// Truncated Taylor jet of a scalar quantity with respect to a fixed set of
// chart variables: value, gradient and symmetric Hessian. `order` says how
// many derivative levels are actually carried (0, 1 or 2); arithmetic
// propagates the minimum order of the operands.
struct Jet {
  int nvars = 0;
  int order = 0;
  double v = 0.0;
  std::vector<double> g;  // size nvars when order >= 1
  std::vector<double> h;  // row-major nvars*nvars when order == 2

  Jet() = default;
  Jet(int n, int ord, double value) : nvars(n), order(ord), v(value) {
    if (order >= 1) g.assign(nvars, 0.0);
    if (order >= 2) h.assign(static_cast<size_t>(nvars) * nvars, 0.0);
  }

  static Jet constant(int nvars, int order, double value) {
    return Jet(nvars, order, value);
  }
  static Jet variable(int nvars, int order, int index, double value) {
    Jet j(nvars, order, value);
    if (order >= 1) j.g[index] = 1.0;
    return j;
  }

  double hess(int i, int j) const { return h[static_cast<size_t>(i) * nvars + j]; }
  double& hess(int i, int j) { return h[static_cast<size_t>(i) * nvars + j]; }
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, double s);
Jet operator*(double s, const Jet& a);
Jet operator+(const Jet& a, double s);
Jet operator-(const Jet& a, double s);

// Chain rule for a smooth f applied to jet u, given f(u), f'(u), f''(u).
Jet jet_chain(const Jet& u, double f, double df, double ddf);

Jet jet_sin(const Jet& u);
Jet jet_cos(const Jet& u);
Jet jet_tan(const Jet& u);
Jet jet_exp(const Jet& u);
Jet jet_log(const Jet& u);
Jet jet_sqrt(const Jet& u);
Jet jet_pow(const Jet& base, const Jet& expo);
Jet jet_atan2(const Jet& y, const Jet& x);
// C-infinity cutoff: 1 for t<=0, 0 for t>=1, non-increasing.
Jet jet_bump01(const Jet& t);
double bump01_value(double t);
// Non-decreasing C-infinity step: 0 for t<=a, 1 for t>=b.
Jet jet_smoothstep(const Jet& a, const Jet& b, const Jet& t);
double smoothstep_value(double a, double b, double t);

}  // namespace contactlab

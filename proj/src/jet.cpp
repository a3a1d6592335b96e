#include "contactlab/jet.hpp"

#include <algorithm>
#include <cmath>

namespace contactlab {

namespace {

int min_order(const Jet& a, const Jet& b) { return std::min(a.order, b.order); }

}  // namespace

Jet operator+(const Jet& a, const Jet& b) {
  Jet r(a.nvars, min_order(a, b), a.v + b.v);
  if (r.order >= 1)
    for (int i = 0; i < r.nvars; ++i) r.g[i] = a.g[i] + b.g[i];
  if (r.order >= 2)
    for (size_t i = 0; i < r.h.size(); ++i) r.h[i] = a.h[i] + b.h[i];
  return r;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet r(a.nvars, min_order(a, b), a.v - b.v);
  if (r.order >= 1)
    for (int i = 0; i < r.nvars; ++i) r.g[i] = a.g[i] - b.g[i];
  if (r.order >= 2)
    for (size_t i = 0; i < r.h.size(); ++i) r.h[i] = a.h[i] - b.h[i];
  return r;
}

Jet operator-(const Jet& a) {
  Jet r = a;
  r.v = -r.v;
  for (double& x : r.g) x = -x;
  for (double& x : r.h) x = -x;
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.nvars, min_order(a, b), a.v * b.v);
  if (r.order >= 1)
    for (int i = 0; i < r.nvars; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
  if (r.order >= 2) {
    for (int i = 0; i < r.nvars; ++i)
      for (int j = 0; j < r.nvars; ++j)
        r.hess(i, j) = a.hess(i, j) * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] +
                       a.v * b.hess(i, j);
  }
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  if (std::abs(b.v) < 1e-300)
    throw Error(ErrorCode::DomainError, "division by zero");
  const double inv = 1.0 / b.v;
  Jet r(a.nvars, min_order(a, b), a.v * inv);
  if (r.order >= 1)
    for (int i = 0; i < r.nvars; ++i) r.g[i] = (a.g[i] - r.v * b.g[i]) * inv;
  if (r.order >= 2) {
    for (int i = 0; i < r.nvars; ++i)
      for (int j = 0; j < r.nvars; ++j)
        r.hess(i, j) = (a.hess(i, j) - r.v * b.hess(i, j) - r.g[i] * b.g[j] -
                        r.g[j] * b.g[i]) *
                       inv;
  }
  return r;
}

Jet operator*(const Jet& a, double s) {
  Jet r = a;
  r.v *= s;
  for (double& x : r.g) x *= s;
  for (double& x : r.h) x *= s;
  return r;
}
Jet operator*(double s, const Jet& a) { return a * s; }
Jet operator+(const Jet& a, double s) {
  Jet r = a;
  r.v += s;
  return r;
}
Jet operator-(const Jet& a, double s) {
  Jet r = a;
  r.v -= s;
  return r;
}

Jet jet_chain(const Jet& u, double f, double df, double ddf) {
  Jet r(u.nvars, u.order, f);
  if (r.order >= 1)
    for (int i = 0; i < r.nvars; ++i) r.g[i] = df * u.g[i];
  if (r.order >= 2) {
    for (int i = 0; i < r.nvars; ++i)
      for (int j = 0; j < r.nvars; ++j)
        r.hess(i, j) = ddf * u.g[i] * u.g[j] + df * u.hess(i, j);
  }
  return r;
}

Jet jet_sin(const Jet& u) { return jet_chain(u, std::sin(u.v), std::cos(u.v), -std::sin(u.v)); }
Jet jet_cos(const Jet& u) { return jet_chain(u, std::cos(u.v), -std::sin(u.v), -std::cos(u.v)); }

Jet jet_tan(const Jet& u) {
  const double c = std::cos(u.v);
  if (std::abs(c) < 1e-12) throw Error(ErrorCode::DomainError, "tan near pole");
  const double t = std::tan(u.v);
  const double sec2 = 1.0 / (c * c);
  return jet_chain(u, t, sec2, 2.0 * t * sec2);
}

Jet jet_exp(const Jet& u) {
  const double e = std::exp(u.v);
  return jet_chain(u, e, e, e);
}

Jet jet_log(const Jet& u) {
  if (u.v <= 0.0) throw Error(ErrorCode::DomainError, "log of non-positive value");
  return jet_chain(u, std::log(u.v), 1.0 / u.v, -1.0 / (u.v * u.v));
}

Jet jet_sqrt(const Jet& u) {
  if (u.v < 0.0) throw Error(ErrorCode::DomainError, "sqrt of negative value");
  if (u.v == 0.0) {
    if (u.order == 0) return Jet(u.nvars, 0, 0.0);
    throw Error(ErrorCode::DomainError, "sqrt derivative at zero");
  }
  const double s = std::sqrt(u.v);
  return jet_chain(u, s, 0.5 / s, -0.25 / (s * u.v));
}

namespace {

bool near_integer(double y, long long& out) {
  const double r = std::round(y);
  if (std::abs(y - r) < 1e-9 && std::abs(r) < 1e15) {
    out = static_cast<long long>(r);
    return true;
  }
  return false;
}

double powi(double x, long long n) {
  if (n < 0) return 1.0 / powi(x, -n);
  double r = 1.0, b = x;
  while (n) {
    if (n & 1) r *= b;
    b *= b;
    n >>= 1;
  }
  return r;
}

}  // namespace

Jet jet_pow(const Jet& base, const Jet& expo) {
  long long n = 0;
  if (expo.order == 0 || expo.g.empty() ||
      std::all_of(expo.g.begin(), expo.g.end(), [](double x) { return x == 0.0; })) {
    if (near_integer(expo.v, n)) {
      if (base.v == 0.0 && n < 0)
        throw Error(ErrorCode::DomainError, "zero to a negative power");
      const double f = powi(base.v, n);
      const double df = (n == 0) ? 0.0 : n * powi(base.v, n - 1);
      const double ddf = (n == 0 || n == 1) ? 0.0 : double(n) * double(n - 1) * powi(base.v, n - 2);
      return jet_chain(base, f, df, ddf);
    }
  }
  if (base.v <= 0.0)
    throw Error(ErrorCode::DomainError,
                "power with non-positive base and non-integer exponent");
  // x^y = exp(y log x), x > 0
  return jet_exp(expo * jet_log(base));
}

Jet jet_atan2(const Jet& y, const Jet& x) {
  const double r2 = x.v * x.v + y.v * y.v;
  if (r2 < 1e-280) throw Error(ErrorCode::NonSmoothPoint, "atan2 at the origin");
  // a = atan2(y, x): da = (x dy - y dx) / r^2, computed with jet arithmetic
  Jet denom = x * x + y * y;
  Jet a(x.nvars, std::min(x.order, y.order), std::atan2(y.v, x.v));
  if (a.order == 0) return a;
  Jet num_dy = x / denom;   // coefficient of dy
  Jet num_dx = -(y / denom);  // coefficient of dx
  for (int i = 0; i < a.nvars; ++i)
    a.g[i] = num_dy.v * y.g[i] + num_dx.v * x.g[i];
  if (a.order >= 2) {
    for (int i = 0; i < a.nvars; ++i)
      for (int j = 0; j < a.nvars; ++j)
        a.hess(i, j) = num_dy.g[j] * y.g[i] + num_dy.v * y.hess(i, j) +
                       num_dx.g[j] * x.g[i] + num_dx.v * x.hess(i, j);
  }
  return a;
}

namespace {

// Below these margins the transition factors of the cutoff are flat to double
// precision (the tails are O(exp(-1/t))), so the constant branch is exact.
constexpr double kBumpLo = 1e-2;
constexpr double kBumpHi = 1.0 - 1e-2;

Jet bump_core(const Jet& t) {
  // f(s) = exp(-1/s); bump01(t) = f(1-t) / (f(t) + f(1-t)), t in (0,1).
  Jet one = Jet::constant(t.nvars, t.order, 1.0);
  Jet ft = jet_exp(-(one / t));
  Jet f1t = jet_exp(-(one / (one - t)));
  return f1t / (ft + f1t);
}

}  // namespace

double bump01_value(double t) {
  if (t <= kBumpLo) return 1.0;
  if (t >= kBumpHi) return 0.0;
  const double ft = std::exp(-1.0 / t);
  const double f1t = std::exp(-1.0 / (1.0 - t));
  return f1t / (ft + f1t);
}

Jet jet_bump01(const Jet& t) {
  if (t.v <= kBumpLo) return Jet::constant(t.nvars, t.order, 1.0);
  if (t.v >= kBumpHi) return Jet::constant(t.nvars, t.order, 0.0);
  return bump_core(t);
}

double smoothstep_value(double a, double b, double t) {
  if (b == a) throw Error(ErrorCode::DomainError, "smoothstep with empty interval");
  return 1.0 - bump01_value((t - a) / (b - a));
}

Jet jet_smoothstep(const Jet& a, const Jet& b, const Jet& t) {
  Jet w = b - a;
  if (std::abs(w.v) < 1e-300)
    throw Error(ErrorCode::DomainError, "smoothstep with empty interval");
  Jet s = (t - a) / w;
  Jet one = Jet::constant(t.nvars, t.order, 1.0);
  return one - jet_bump01(s);
}

}  // namespace contactlab

#include "contactlab/manifold.hpp"

#include <algorithm>
#include <cmath>

#include "contactlab/error.hpp"

namespace contactlab {

int Factor::ncoords() const {
  return kind == FactorKind::Box ? static_cast<int>(box.names.size())
                                 : static_cast<int>(level.names.size());
}

int Factor::dim() const {
  return kind == FactorKind::Box
             ? static_cast<int>(box.names.size())
             : static_cast<int>(level.names.size() - level.constraints.size());
}

ChartedManifold ChartedManifold::box(BoxFactor f) {
  ChartedManifold m;
  Factor fac;
  fac.kind = FactorKind::Box;
  fac.box = std::move(f);
  m.factors_.push_back(std::move(fac));
  m.rebuild_flat();
  return m;
}

ChartedManifold ChartedManifold::level_set(LevelSetFactor f) {
  ChartedManifold m;
  Factor fac;
  fac.kind = FactorKind::LevelSet;
  fac.level = std::move(f);
  m.factors_.push_back(std::move(fac));
  m.rebuild_flat();
  return m;
}

ChartedManifold ChartedManifold::product(std::vector<ChartedManifold> parts) {
  ChartedManifold m;
  for (auto& p : parts)
    for (auto& f : p.factors_) m.factors_.push_back(std::move(f));
  m.rebuild_flat();
  return m;
}

ChartedManifold ChartedManifold::torus(int d, double period) {
  BoxFactor f;
  static const char* names3[] = {"theta", "x", "y"};
  for (int i = 0; i < d; ++i) {
    f.names.push_back(d <= 3 ? names3[i] : "t" + std::to_string(i + 1));
    f.periodic.push_back(true);
    f.period.push_back(period);
    f.lo.push_back(0.0);
    f.hi.push_back(period);
  }
  return box(std::move(f));
}

ChartedManifold ChartedManifold::sphere3() {
  LevelSetFactor f;
  f.names = {"x1", "y1", "x2", "y2"};
  f.constraints = {Expr::parse("x1^2 + y1^2 + x2^2 + y2^2 - 1")};
  f.recipe = "s3_hopf";
  return level_set(std::move(f));
}

ChartedManifold ChartedManifold::disk2(double radius, const std::string& u,
                                       const std::string& v) {
  BoxFactor f;
  f.names = {u, v};
  f.periodic = {false, false};
  f.period = {0.0, 0.0};
  f.lo = {-radius, -radius};
  f.hi = {radius, radius};
  f.disk_pair = std::make_pair(0, 1);
  f.disk_radius = radius;
  return box(std::move(f));
}

void ChartedManifold::rebuild_flat() {
  coords_.clear();
  periodic_flat_.clear();
  period_flat_.clear();
  int off = 0;
  for (auto& f : factors_) {
    f.coord_offset = off;
    if (f.kind == FactorKind::Box) {
      for (size_t i = 0; i < f.box.names.size(); ++i) {
        coords_.push_back(f.box.names[i]);
        periodic_flat_.push_back(f.box.periodic[i]);
        period_flat_.push_back(f.box.periodic[i] ? f.box.period[i] : 0.0);
      }
    } else {
      for (const auto& n : f.level.names) {
        coords_.push_back(n);
        periodic_flat_.push_back(false);
        period_flat_.push_back(0.0);
      }
    }
    off += f.ncoords();
  }
}

int ChartedManifold::dim() const {
  int d = 0;
  for (const auto& f : factors_) d += f.dim();
  return d;
}

int ChartedManifold::coord_index(const std::string& name) const {
  for (size_t i = 0; i < coords_.size(); ++i)
    if (coords_[i] == name) return static_cast<int>(i);
  throw Error(ErrorCode::UnknownIdentifier, "coordinate " + name);
}

bool ChartedManifold::has_level_set() const {
  for (const auto& f : factors_)
    if (f.kind == FactorKind::LevelSet) return true;
  return false;
}

namespace {

std::vector<Jet> factor_point_jets(const Factor& f, const std::vector<double>& x,
                                   int order) {
  std::vector<Jet> vals;
  const int n = f.ncoords();
  vals.reserve(n);
  for (int i = 0; i < n; ++i)
    vals.push_back(Jet::variable(n, order, i, x[f.coord_offset + i]));
  return vals;
}

}  // namespace

double ChartedManifold::constraint_residual(const std::vector<double>& x) const {
  double worst = 0.0;
  for (const auto& f : factors_) {
    if (f.kind != FactorKind::LevelSet) continue;
    auto vals = factor_point_jets(f, x, 0);
    for (const auto& c : f.level.constraints)
      worst = std::max(worst, std::abs(c.eval(f.level.names, vals).v));
  }
  return worst;
}

void ChartedManifold::check_on_manifold(const std::vector<double>& x,
                                        const Tolerances& tol) const {
  if (static_cast<int>(x.size()) != ncoords())
    throw Error(ErrorCode::DimensionMismatch, "point has wrong coordinate count");
  const double r = constraint_residual(x);
  if (r > tol.level)
    throw Error(ErrorCode::OffManifoldPoint,
                "constraint residual " + std::to_string(r));
}

void ChartedManifold::project(std::vector<double>& x, const Tolerances& tol) const {
  for (const auto& f : factors_) {
    if (f.kind != FactorKind::LevelSet) continue;
    const int n = f.ncoords();
    const int m = static_cast<int>(f.level.constraints.size());
    for (int iter = 0; iter < 8; ++iter) {
      auto vals = factor_point_jets(f, x, 1);
      std::vector<double> c(m);
      std::vector<std::vector<double>> J(m, std::vector<double>(n));
      double res = 0.0;
      for (int i = 0; i < m; ++i) {
        Jet j = f.level.constraints[i].eval(f.level.names, vals);
        c[i] = j.v;
        J[i] = j.g;
        res = std::max(res, std::abs(j.v));
      }
      if (res <= tol.level) break;
      // solve (J J^T) d = c, x -= J^T d
      std::vector<std::vector<double>> G(m, std::vector<double>(m + 1, 0.0));
      for (int i = 0; i < m; ++i) {
        for (int k = 0; k < m; ++k)
          for (int l = 0; l < n; ++l) G[i][k] += J[i][l] * J[k][l];
        G[i][m] = c[i];
      }
      for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r2 = col + 1; r2 < m; ++r2)
          if (std::abs(G[r2][col]) > std::abs(G[piv][col])) piv = r2;
        std::swap(G[col], G[piv]);
        if (std::abs(G[col][col]) < 1e-14)
          throw Error(ErrorCode::RankDeficient, "projection Jacobian singular");
        for (int r2 = 0; r2 < m; ++r2) {
          if (r2 == col) continue;
          double fct = G[r2][col] / G[col][col];
          for (int cc = col; cc <= m; ++cc) G[r2][cc] -= fct * G[col][cc];
        }
      }
      for (int i = 0; i < m; ++i) {
        const double di = G[i][m] / G[i][i];
        for (int l = 0; l < n; ++l) x[f.coord_offset + l] -= J[i][l] * di;
      }
    }
  }
}

double ChartedManifold::distance(const std::vector<double>& a,
                                 const std::vector<double>& b) const {
  double s = 0.0;
  for (int i = 0; i < ncoords(); ++i) {
    double d = a[i] - b[i];
    if (periodic_flat_[i]) {
      const double p = period_flat_[i];
      d = std::fmod(d, p);
      if (d > 0.5 * p) d -= p;
      if (d < -0.5 * p) d += p;
    }
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

struct Axis {
  int factor = 0;
  int local = 0;       // coordinate index within a box factor, or recipe param
  bool recipe = false;
  std::vector<double> values;
};

std::vector<double> axis_values_box(const BoxFactor& b, int i, int res) {
  std::vector<double> v;
  v.reserve(res);
  if (b.periodic[i]) {
    for (int k = 0; k < res; ++k) v.push_back(b.lo[i] + k * b.period[i] / res);
  } else {
    if (res < 2) throw Error(ErrorCode::DimensionMismatch, "resolution must be >= 2");
    for (int k = 0; k < res; ++k)
      v.push_back(b.lo[i] + k * (b.hi[i] - b.lo[i]) / (res - 1));
  }
  return v;
}

}  // namespace

int ChartedManifold::sample_axes() const {
  int n = 0;
  for (const auto& f : factors_) {
    if (f.kind == FactorKind::Box) {
      n += f.ncoords();
    } else if (f.level.recipe == "s3_hopf") {
      n += 3;
    } else {
      throw Error(ErrorCode::UnparametrizedLevelSet,
                  "no sampling recipe registered: '" + f.level.recipe + "'");
    }
  }
  return n;
}

std::vector<SamplePoint> ChartedManifold::sample_grid(
    const std::vector<int>& resolution, const Tolerances& tol) const {
  // Build sampling axes in factor order.
  std::vector<Axis> axes;
  {
    int r = 0;
    for (size_t fi = 0; fi < factors_.size(); ++fi) {
      const Factor& f = factors_[fi];
      if (f.kind == FactorKind::Box) {
        for (int i = 0; i < f.ncoords(); ++i) {
          if (r >= static_cast<int>(resolution.size()))
            throw Error(ErrorCode::DimensionMismatch, "too few grid resolutions");
          Axis a;
          a.factor = static_cast<int>(fi);
          a.local = i;
          a.values = axis_values_box(f.box, i, resolution[r]);
          if (resolution[r] < 2)
            throw Error(ErrorCode::DimensionMismatch, "resolution must be >= 2");
          axes.push_back(std::move(a));
          ++r;
        }
      } else if (f.level.recipe == "s3_hopf") {
        for (int i = 0; i < 3; ++i) {
          if (r >= static_cast<int>(resolution.size()))
            throw Error(ErrorCode::DimensionMismatch, "too few grid resolutions");
          const int res = resolution[r];
          if (res < 2)
            throw Error(ErrorCode::DimensionMismatch, "resolution must be >= 2");
          Axis a;
          a.factor = static_cast<int>(fi);
          a.local = i;
          a.recipe = true;
          if (i == 0) {
            for (int k = 0; k < res; ++k)
              a.values.push_back((k + 0.5) * (0.5 * M_PI) / res);
          } else {
            for (int k = 0; k < res; ++k) a.values.push_back(k * 2.0 * M_PI / res);
          }
          axes.push_back(std::move(a));
          ++r;
        }
      } else {
        throw Error(ErrorCode::UnparametrizedLevelSet,
                    "no sampling recipe registered: '" + f.level.recipe + "'");
      }
    }
    if (r != static_cast<int>(resolution.size()))
      throw Error(ErrorCode::DimensionMismatch, "too many grid resolutions");
  }

  std::vector<SamplePoint> out;
  std::vector<int> idx(axes.size(), 0);
  long flat = 0;
  for (;;) {
    // assemble the point for this multi-index
    SamplePoint p;
    p.x.assign(coords_.size(), 0.0);
    p.grid_index.assign(idx.begin(), idx.end());
    p.flat_index = flat;
    bool keep = true;
    // recipe parameters per level-set factor
    std::vector<std::vector<double>> recipe_params(factors_.size());
    for (size_t a = 0; a < axes.size(); ++a) {
      const Axis& ax = axes[a];
      const double val = ax.values[idx[a]];
      if (!ax.recipe) {
        p.x[factors_[ax.factor].coord_offset + ax.local] = val;
      } else {
        recipe_params[ax.factor].push_back(val);
      }
    }
    for (size_t fi = 0; fi < factors_.size(); ++fi) {
      const Factor& f = factors_[fi];
      if (f.kind == FactorKind::LevelSet) {
        const auto& q = recipe_params[fi];
        // s3_hopf: (eta, phi1, phi2) -> (cos eta cos phi1, cos eta sin phi1,
        //                                sin eta cos phi2, sin eta sin phi2)
        p.x[f.coord_offset + 0] = std::cos(q[0]) * std::cos(q[1]);
        p.x[f.coord_offset + 1] = std::cos(q[0]) * std::sin(q[1]);
        p.x[f.coord_offset + 2] = std::sin(q[0]) * std::cos(q[2]);
        p.x[f.coord_offset + 3] = std::sin(q[0]) * std::sin(q[2]);
      } else if (f.box.disk_pair) {
        const double u = p.x[f.coord_offset + f.box.disk_pair->first];
        const double v = p.x[f.coord_offset + f.box.disk_pair->second];
        if (u * u + v * v >= f.box.disk_radius * f.box.disk_radius * (1.0 - 1e-12))
          keep = false;
      }
    }
    if (keep) {
      const double res = constraint_residual(p.x);
      if (res > tol.level)
        throw Error(ErrorCode::OffManifoldPoint,
                    "sample residual " + std::to_string(res));
      out.push_back(std::move(p));
    }
    ++flat;
    // lexicographic advance, last axis fastest
    int a = static_cast<int>(axes.size()) - 1;
    while (a >= 0) {
      if (++idx[a] < static_cast<int>(axes[a].values.size())) break;
      idx[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return out;
}

namespace {

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.v; }

template <typename T>
T dot_t(const std::vector<T>& a, const std::vector<T>& b) {
  T s = a[0] * b[0];
  for (size_t i = 1; i < a.size(); ++i) s = s + a[i] * b[i];
  return s;
}

inline double sqrt_t(double x) { return std::sqrt(x); }
inline Jet sqrt_t(const Jet& x) { return jet_sqrt(x); }

// Orthonormal frame of the kernel of the constraint Jacobian, gradients
// first; returns (gradient rows orthonormalized, kernel rows orthonormalized).
// All pivot decisions are made on values so the jet variant follows the same
// branch structure (the construction is then differentiable).
template <typename T>
void level_set_frame_t(const std::vector<std::vector<T>>& grads, int n,
                       const Tolerances& tol, bool reverse_seeds,
                       std::vector<std::vector<T>>& grad_on,
                       std::vector<std::vector<T>>& kernel,
                       double* condition) {
  const int m = static_cast<int>(grads.size());
  grad_on.clear();
  kernel.clear();
  auto zero_like = [&](double v) { return grads[0][0] * 0.0 + v; };
  // orthonormalize gradients with rank check
  for (int i = 0; i < m; ++i) {
    std::vector<T> w = grads[i];
    const double orig = std::sqrt(std::max(0.0, value_of(dot_t(w, w))));
    for (const auto& q : grad_on) {
      T c = dot_t(w, q);
      for (int k = 0; k < n; ++k) w[k] = w[k] - c * q[k];
    }
    T nrm2 = dot_t(w, w);
    if (std::sqrt(std::max(0.0, value_of(nrm2))) <= tol.rank * std::max(orig, 1e-30))
      throw Error(ErrorCode::RankDeficient, "constraint Jacobian rank-deficient");
    T nrm = sqrt_t(nrm2);
    for (int k = 0; k < n; ++k) w[k] = w[k] / nrm;
    grad_on.push_back(std::move(w));
  }
  // kernel by projecting coordinate seeds; greedy largest residual, ties by
  // lowest seed index
  std::vector<bool> used(n, false);
  for (int want = 0; want < n - m; ++want) {
    int best = -1;
    double best_norm = -1.0;
    std::vector<T> best_w;
    for (int sraw = 0; sraw < n; ++sraw) {
      const int s = reverse_seeds ? n - 1 - sraw : sraw;
      if (used[s]) continue;
      std::vector<T> w(n, zero_like(0.0));
      w[s] = zero_like(1.0);
      for (const auto& q : grad_on) {
        T c = dot_t(w, q);
        for (int k = 0; k < n; ++k) w[k] = w[k] - c * q[k];
      }
      for (const auto& q : kernel) {
        T c = dot_t(w, q);
        for (int k = 0; k < n; ++k) w[k] = w[k] - c * q[k];
      }
      const double nn = std::sqrt(std::max(0.0, value_of(dot_t(w, w))));
      if (nn > best_norm + 1e-15) {
        best_norm = nn;
        best = s;
        best_w = std::move(w);
      }
    }
    if (best < 0 || best_norm < 1e-8)
      throw Error(ErrorCode::RankDeficient, "could not complete tangent frame");
    used[best] = true;
    T nrm = sqrt_t(dot_t(best_w, best_w));
    for (int k = 0; k < n; ++k) best_w[k] = best_w[k] / nrm;
    kernel.push_back(std::move(best_w));
  }
  if (condition) *condition = 1.0;  // orthonormal by construction
}

double det_values(std::vector<std::vector<double>> a) {
  const int n = static_cast<int>(a.size());
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (piv != c) {
      std::swap(a[piv], a[c]);
      det = -det;
    }
    if (a[c][c] == 0.0) return 0.0;
    det *= a[c][c];
    for (int r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

}  // namespace

TangentFrame ChartedManifold::tangent_frame_at(const std::vector<double>& x,
                                               const Tolerances& tol) const {
  check_on_manifold(x, tol);
  TangentFrame out;
  out.orientation_sign = 1;
  const int N = ncoords();
  for (const auto& f : factors_) {
    if (f.kind == FactorKind::Box) {
      for (int i = 0; i < f.ncoords(); ++i) {
        std::vector<double> v(N, 0.0);
        v[f.coord_offset + i] = 1.0;
        out.vectors.push_back(std::move(v));
      }
      continue;
    }
    const int n = f.ncoords();
    auto vals = factor_point_jets(f, x, 1);
    std::vector<std::vector<double>> grads;
    for (const auto& c : f.level.constraints)
      grads.push_back(c.eval(f.level.names, vals).g);
    std::vector<std::vector<double>> gon, ker;
    level_set_frame_t(grads, n, tol, false, gon, ker, &out.condition);
    // orientation: det(gradients, frame) > 0 in the factor's ambient chart
    std::vector<std::vector<double>> mat;
    for (const auto& g : grads) mat.push_back(g);
    for (const auto& k : ker) mat.push_back(k);
    if (det_values(mat) < 0.0)
      for (double& c : ker.back()) c = -c;
    for (const auto& k : ker) {
      std::vector<double> v(N, 0.0);
      for (int i = 0; i < n; ++i) v[f.coord_offset + i] = k[i];
      out.vectors.push_back(std::move(v));
    }
  }
  return out;
}

TangentFrame ChartedManifold::tangent_frame(const SamplePoint& p,
                                            const Tolerances& tol) const {
  return tangent_frame_at(p.x, tol);
}

TangentFrame ChartedManifold::tangent_frame_alt(const std::vector<double>& x,
                                                const Tolerances& tol) const {
  check_on_manifold(x, tol);
  TangentFrame out;
  out.orientation_sign = 1;
  const int N = ncoords();
  for (const auto& f : factors_) {
    if (f.kind == FactorKind::Box) {
      for (int i = 0; i < f.ncoords(); ++i) {
        std::vector<double> v(N, 0.0);
        v[f.coord_offset + i] = 1.0;
        out.vectors.push_back(std::move(v));
      }
      continue;
    }
    const int n = f.ncoords();
    auto vals = factor_point_jets(f, x, 1);
    std::vector<std::vector<double>> grads;
    for (const auto& c : f.level.constraints)
      grads.push_back(c.eval(f.level.names, vals).g);
    std::vector<std::vector<double>> gon, ker;
    level_set_frame_t(grads, n, tol, true, gon, ker, &out.condition);
    std::vector<std::vector<double>> mat;
    for (const auto& g : grads) mat.push_back(g);
    for (const auto& k : ker) mat.push_back(k);
    if (det_values(mat) < 0.0)
      for (double& c : ker.back()) c = -c;
    for (const auto& k : ker) {
      std::vector<double> v(N, 0.0);
      for (int i = 0; i < n; ++i) v[f.coord_offset + i] = k[i];
      out.vectors.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<std::vector<Jet>> ChartedManifold::tangent_frame_jets(
    const std::vector<double>& x, int order, const Tolerances& tol) const {
  if (order > 1)
    throw Error(ErrorCode::DepthExceeded,
                "tangent frame jets available to order 1 only");
  check_on_manifold(x, tol);
  const int N = ncoords();
  std::vector<std::vector<Jet>> out;
  for (const auto& f : factors_) {
    if (f.kind == FactorKind::Box) {
      for (int i = 0; i < f.ncoords(); ++i) {
        std::vector<Jet> v(N, Jet::constant(N, order, 0.0));
        v[f.coord_offset + i] = Jet::constant(N, order, 1.0);
        out.push_back(std::move(v));
      }
      continue;
    }
    const int n = f.ncoords();
    // constraint gradients as jets over the FULL flattened chart
    std::vector<Jet> vals;
    for (int i = 0; i < n; ++i)
      vals.push_back(Jet::variable(N, order + 1, f.coord_offset + i, x[f.coord_offset + i]));
    // note: variables for eval are the factor's names but jets span N coords
    std::vector<std::vector<Jet>> grads;
    for (const auto& c : f.level.constraints) {
      Jet cj = c.eval(f.level.names, vals);
      std::vector<Jet> g;
      for (int i = 0; i < n; ++i) {
        Jet gi(N, order, cj.g[f.coord_offset + i]);
        if (order >= 1)
          for (int k = 0; k < N; ++k) gi.g[k] = cj.hess(f.coord_offset + i, k);
        g.push_back(std::move(gi));
      }
      grads.push_back(std::move(g));
    }
    std::vector<std::vector<Jet>> gon, ker;
    level_set_frame_t(grads, n, tol, false, gon, ker, nullptr);
    std::vector<std::vector<double>> mat;
    for (const auto& g : grads) {
      std::vector<double> r;
      for (const auto& e : g) r.push_back(e.v);
      mat.push_back(std::move(r));
    }
    for (const auto& k : ker) {
      std::vector<double> r;
      for (const auto& e : k) r.push_back(e.v);
      mat.push_back(std::move(r));
    }
    if (det_values(mat) < 0.0)
      for (Jet& c : ker.back()) c = -c;
    for (auto& k : ker) {
      std::vector<Jet> v(N, Jet::constant(N, order, 0.0));
      for (int i = 0; i < n; ++i) v[f.coord_offset + i] = std::move(k[i]);
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace contactlab

#include "contactlab/positivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "contactlab/parallel.hpp"

namespace contactlab {

void RayPolynomial::trim(double rel_eps) {
  double scale = 0.0;
  for (double c : coeff) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) {
    coeff.clear();
    return;
  }
  while (!coeff.empty() && std::abs(coeff.back()) <= rel_eps * scale)
    coeff.pop_back();
}

double RayPolynomial::eval(double tau) const {
  double v = 0.0;
  for (size_t i = coeff.size(); i-- > 0;) v = v * tau + coeff[i];
  return v;
}

RayPolynomial RayPolynomial::derivative() const {
  RayPolynomial d;
  for (size_t i = 1; i < coeff.size(); ++i) d.coeff.push_back(coeff[i] * double(i));
  return d;
}

namespace {

constexpr double kTauCap = 1e4;

using Poly = std::vector<double>;  // ascending coefficients

double poly_eval(const Poly& p, double x) {
  double v = 0.0;
  for (size_t i = p.size(); i-- > 0;) v = v * x + p[i];
  return v;
}

void poly_trim(Poly& p, double eps) {
  while (!p.empty() && std::abs(p.back()) <= eps) p.pop_back();
}

// remainder of a by b (monic-free long division); returns false on a
// numerically degenerate division (treated as a Sturm breakdown).
bool poly_rem(Poly a, const Poly& b, Poly& rem, double eps) {
  if (b.empty()) return false;
  const double lead = b.back();
  if (std::abs(lead) <= eps) return false;
  while (a.size() >= b.size()) {
    const double f = a.back() / lead;
    const size_t shift = a.size() - b.size();
    for (size_t i = 0; i < b.size(); ++i) a[shift + i] -= f * b[i];
    a.pop_back();
    poly_trim(a, 0.0);
    if (a.size() >= b.size() && a.size() > 64) return false;
  }
  rem = std::move(a);
  return true;
}

struct SturmChain {
  std::vector<Poly> seq;
  bool degenerate = false;
};

SturmChain sturm_chain(const Poly& p) {
  SturmChain s;
  const double eps = 1e-12;
  Poly p0 = p;
  poly_trim(p0, 0.0);
  s.seq.push_back(p0);
  Poly p1;
  for (size_t i = 1; i < p0.size(); ++i) p1.push_back(p0[i] * double(i));
  if (p1.empty()) return s;
  s.seq.push_back(p1);
  for (;;) {
    const Poly& a = s.seq[s.seq.size() - 2];
    const Poly& b = s.seq[s.seq.size() - 1];
    Poly r;
    if (!poly_rem(a, b, r, eps)) {
      s.degenerate = true;
      return s;
    }
    double m = 0.0;
    for (double c : r) m = std::max(m, std::abs(c));
    if (m <= 1e-11) {
      // non-trivial gcd: repeated real root territory
      if (!r.empty()) s.degenerate = true;
      return s;
    }
    for (double& c : r) c = -c;
    s.seq.push_back(std::move(r));
    if (s.seq.size() > 64) {
      s.degenerate = true;
      return s;
    }
  }
}

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

int variations_at(const SturmChain& s, double x) {
  int v = 0, prev = 0;
  for (const auto& p : s.seq) {
    const int sg = sign_of(poly_eval(p, x));
    if (sg == 0) continue;
    if (prev != 0 && sg != prev) ++v;
    prev = sg;
  }
  return v;
}

int variations_at_infinity(const SturmChain& s) {
  int v = 0, prev = 0;
  for (const auto& p : s.seq) {
    if (p.empty()) continue;
    const int sg = sign_of(p.back());
    if (sg == 0) continue;
    if (prev != 0 && sg != prev) ++v;
    prev = sg;
  }
  return v;
}

double cauchy_bound(const Poly& p) {
  const double lead = std::abs(p.back());
  double m = 0.0;
  for (size_t i = 0; i + 1 < p.size(); ++i) m = std::max(m, std::abs(p[i]));
  return 1.0 + m / std::max(lead, 1e-300);
}

// Distinct real roots of p in (lo, hi], isolated then bisected.
std::vector<double> sturm_roots(const Poly& p, double lo, double hi,
                                bool& degenerate) {
  std::vector<double> roots;
  SturmChain s = sturm_chain(p);
  if (s.degenerate) {
    degenerate = true;
    return roots;
  }
  if (s.seq.size() < 2) return roots;
  std::function<void(double, double, int)> isolate = [&](double a, double b,
                                                         int count) {
    if (count <= 0) return;
    if (count == 1 || b - a < 1e-13 * std::max(1.0, std::abs(b))) {
      double x0 = a, x1 = b;
      for (int it = 0; it < 200 && x1 - x0 > 1e-15 * std::max(1.0, std::abs(x1));
           ++it) {
        const double mid = 0.5 * (x0 + x1);
        const int c = variations_at(s, x0) - variations_at(s, mid);
        if (c >= 1)
          x1 = mid;
        else
          x0 = mid;
      }
      roots.push_back(0.5 * (x0 + x1));
      return;
    }
    const double mid = 0.5 * (a + b);
    const int left = variations_at(s, a) - variations_at(s, mid);
    isolate(a, mid, left);
    isolate(mid, b, count - left);
  };
  const int total = variations_at(s, lo) - variations_at(s, hi);
  isolate(lo, hi, total);
  std::sort(roots.begin(), roots.end());
  return roots;
}

int sturm_count_ray(const Poly& p, bool& degenerate) {
  SturmChain s = sturm_chain(p);
  if (s.degenerate) {
    degenerate = true;
    return -1;
  }
  return variations_at(s, 0.0) - variations_at_infinity(s);
}

RayVerdict fallback_dense(const RayPolynomial& p) {
  // Chebyshev-node sampling on [0, tau_cap] plus the leading sign; interior
  // minima bracketed by a derivative sign change between nodes are refined by
  // bisection so near-zero dips are not missed.
  RayVerdict v;
  const int N = 256;
  RayPolynomial dp = p.derivative();
  std::vector<double> nodes = {0.0};
  for (int i = 0; i < N; ++i)
    nodes.push_back(0.5 * kTauCap * (1.0 - std::cos(M_PI * (i + 0.5) / N)));
  double mn = p.eval(0.0);
  double arg = 0.0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    const double val = p.eval(nodes[i]);
    if (val < mn) {
      mn = val;
      arg = nodes[i];
    }
    if (i + 1 < nodes.size() && dp.eval(nodes[i]) < 0.0 && dp.eval(nodes[i + 1]) > 0.0) {
      double lo = nodes[i], hi = nodes[i + 1];
      for (int it = 0; it < 80 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (dp.eval(mid) < 0.0 ? lo : hi) = mid;
      }
      const double t = 0.5 * (lo + hi);
      const double val2 = p.eval(t);
      if (val2 < mn) {
        mn = val2;
        arg = t;
      }
    }
  }
  const double lead = p.coeff.back();
  double scale = 0.0;
  for (double c : p.coeff) scale = std::max(scale, std::abs(c));
  v.min_value = mn;
  v.witness_tau = arg;
  v.capped = true;
  if (mn > 1e-9 * scale && lead > 0.0) {
    v.positive = true;
    return v;
  }
  if (mn < -1e-9 * scale || lead < 0.0) {
    v.positive = false;
    if (lead < 0.0 && mn >= 0.0) {
      double t = kTauCap;
      while (p.eval(t) > 0.0 && t < 1e30) t *= 2.0;
      v.witness_tau = t;
      v.min_value = p.eval(t);
    }
    return v;
  }
  throw Error(ErrorCode::NumericallyIndeterminate,
              "ray positivity undecidable near a degenerate minimum");
}

}  // namespace

RayVerdict ray_positive(const RayPolynomial& input) {
  RayPolynomial p = input;
  const size_t before = p.coeff.size();
  p.trim();
  if (p.coeff.empty())
    throw Error(ErrorCode::ZeroPolynomial, "identically zero polynomial");
  RayVerdict v;
  v.degenerate_top = p.coeff.size() < before;

  // pre-scale to unit max-norm
  double scale = 0.0;
  for (double c : p.coeff) scale = std::max(scale, std::abs(c));
  Poly q;
  for (double c : p.coeff) q.push_back(c / scale);

  if (q.size() == 1) {
    v.positive = q[0] > 0.0;
    v.min_value = p.coeff[0];
    v.witness_tau = 0.0;
    return v;
  }

  const double lead = q.back();
  const double c0 = q[0];

  bool degenerate = false;
  if (lead < 0.0) {
    v.positive = false;
    v.capped = true;
    double mn = p.eval(0.0), arg = 0.0;
    for (int i = 0; i <= 1024; ++i) {
      const double t = kTauCap * i / 1024.0;
      const double val = p.eval(t);
      if (val < mn) {
        mn = val;
        arg = t;
      }
    }
    v.min_value = mn;
    v.witness_tau = arg;
    if (mn > 0.0) {
      double t = std::max(kTauCap, cauchy_bound(q));
      while (p.eval(t) > 0.0 && t < 1e30) t *= 2.0;
      v.witness_tau = t;
      v.min_value = p.eval(t);
    }
    return v;
  }
  if (c0 <= 0.0) {
    v.positive = false;
    v.witness_tau = 0.0;
    v.min_value = p.coeff[0];
    return v;
  }

  const double bound = cauchy_bound(q);
  const int nroots = sturm_count_ray(q, degenerate);
  if (degenerate) return fallback_dense(p);

  if (nroots > 0) {
    bool deg2 = false;
    auto roots = sturm_roots(q, 0.0, bound, deg2);
    if (deg2 || roots.empty()) return fallback_dense(p);
    v.positive = false;
    v.witness_tau = roots.front();
    v.min_value = p.eval(roots.front());
    // at a transversal crossing, report a point strictly past the root
    for (double step = 1e-12; step < 1.0; step *= 10.0) {
      const double t = roots.front() + step * std::max(1.0, roots.front());
      if (p.eval(t) < v.min_value) {
        v.witness_tau = t;
        v.min_value = p.eval(t);
        break;
      }
    }
    return v;
  }

  // no roots on the ray and P(0) > 0: positive; margin via critical points
  v.positive = true;
  Poly dq;
  for (size_t i = 1; i < q.size(); ++i) dq.push_back(q[i] * double(i));
  bool deg3 = false;
  auto crit = sturm_roots(dq, 0.0, cauchy_bound(dq.empty() ? q : dq), deg3);
  double mn = p.eval(0.0);
  double arg = 0.0;
  if (!deg3) {
    for (double t : crit) {
      // Newton polish on P'
      RayPolynomial dp = p.derivative();
      RayPolynomial ddp = dp.derivative();
      for (int it = 0; it < 6; ++it) {
        const double d1 = dp.eval(t), d2 = ddp.eval(t);
        if (std::abs(d2) < 1e-300) break;
        const double step = d1 / d2;
        if (!std::isfinite(step)) break;
        t -= step;
        if (t < 0.0) {
          t = 0.0;
          break;
        }
      }
      const double val = p.eval(t);
      if (t >= 0.0 && val < mn) {
        mn = val;
        arg = t;
      }
    }
  } else {
    // derivative chain degenerate: sample for the margin only
    for (int i = 0; i <= 1024; ++i) {
      const double t = kTauCap * i / 1024.0;
      const double val = p.eval(t);
      if (val < mn) {
        mn = val;
        arg = t;
      }
    }
    v.capped = true;
  }
  v.min_value = mn;
  v.witness_tau = arg;
  if (mn <= 0.0) {
    // Sturm said no roots but the sampled/critical minimum is non-positive
    throw Error(ErrorCode::NumericallyIndeterminate,
                "ray positivity: root count and minimum disagree");
  }
  return v;
}

bool ray_positive_dense_oracle(const RayPolynomial& input) {
  RayPolynomial p = input;
  p.trim();
  if (p.coeff.empty())
    throw Error(ErrorCode::ZeroPolynomial, "identically zero polynomial");
  if (p.coeff.size() > 1 && p.coeff.back() < 0.0) return false;
  for (int i = 0; i <= 10000; ++i) {
    if (p.eval(0.01 * i) <= 0.0) return false;
  }
  return true;
}

PositivityReport minimize_over_grid(const ChartedManifold& M,
                                    const std::vector<SamplePoint>& grid,
                                    const std::vector<int>& resolution,
                                    const std::string& condition,
                                    const FrameQuantity& quantity,
                                    const Tolerances& tol, int threads) {
  PositivityReport rep;
  rep.condition = condition;
  rep.grid.resolution = resolution;
  rep.grid.points = static_cast<long>(grid.size());

  struct Chunk {
    double mn = std::numeric_limits<double>::infinity();
    long arg = -1;
  };
  std::vector<Chunk> chunks(256);
  parallel_chunks(static_cast<long>(grid.size()), threads, [&](int c, long b, long e) {
    Chunk local;
    EvalContext ctx(M, grid[b].x, tol);
    for (long i = b; i < e; ++i) {
      ctx.move_to(grid[i].x);
      TangentFrame frame = M.tangent_frame(grid[i], tol);
      const double m = quantity(ctx, grid[i], frame);
      // strict < keeps the smallest lexicographic grid index on ties
      if (m < local.mn) {
        local.mn = m;
        local.arg = static_cast<long>(i);
      }
    }
    chunks[c] = local;
  });
  double mn = std::numeric_limits<double>::infinity();
  long arg = -1;
  for (const auto& ch : chunks) {
    if (ch.arg < 0) continue;
    if (ch.mn < mn) {
      mn = ch.mn;
      arg = ch.arg;
    }
  }
  if (arg >= 0) {
    rep.min_margin = mn;
    rep.argmin_point = grid[arg].x;
    rep.argmin_index = grid[arg].grid_index;
  }
  rep.pass = rep.min_margin > tol.pos && arg >= 0;
  if (!rep.pass && rep.min_margin > 0.0 && arg >= 0) {
    rep.warning = true;
    rep.note = "margin positive but below the strict-positivity threshold";
  }
  return rep;
}

PositivityReport contact_check(const KForm& alpha, const ChartedManifold& M,
                               const std::vector<int>& resolution,
                               const Tolerances& tol, int threads) {
  const int d = M.dim();
  if (d % 2 == 0)
    throw Error(ErrorCode::EvenDimension, "contact check needs odd dimension");
  const int n = (d + 1) / 2;
  KForm vol = wedge(alpha, wedge_power(exterior_derivative(alpha), n - 1));
  auto grid = M.sample_grid(resolution, tol);
  return minimize_over_grid(
      M, grid, resolution, "contact",
      [&](EvalContext& ctx, const SamplePoint&, const TangentFrame& f) {
        return form_on_frame(vol, ctx, f);
      },
      tol, threads);
}

PositivityReport contact_check_refined(const KForm& alpha, const ChartedManifold& M,
                                       const std::vector<std::vector<int>>& levels,
                                       const Tolerances& tol, int threads) {
  PositivityReport last;
  std::vector<RefinementStep> history;
  for (const auto& res : levels) {
    last = contact_check(alpha, M, res, tol, threads);
    history.push_back({res, last.min_margin});
  }
  last.history = std::move(history);
  return last;
}

AdjustedReport adjusted_check(const KForm& alpha, const ChartedManifold& M,
                              const SubmanifoldSpec& Z,
                              const std::vector<int>& resolution,
                              const Tolerances& tol, int threads) {
  AdjustedReport out;
  const int d = M.dim();
  if (d % 2 == 0)
    throw Error(ErrorCode::EvenDimension, "adjusted check needs odd dimension");
  const int n = (d + 1) / 2;
  KForm vol = wedge(alpha, wedge_power(exterior_derivative(alpha), n - 1));

  auto grid = M.sample_grid(resolution, tol);
  std::vector<SamplePoint> away;
  {
    EvalContext ctx(M, grid.empty() ? std::vector<double>(M.ncoords(), 0.0)
                                    : grid[0].x,
                    tol);
    for (const auto& p : grid) {
      ctx.move_to(p.x);
      if (field_value(Z.distance, ctx) >= Z.exclusion_radius) away.push_back(p);
    }
  }
  out.away = minimize_over_grid(
      M, away, resolution, "contact away from " + Z.name,
      [&](EvalContext& ctx, const SamplePoint&, const TangentFrame& f) {
        return form_on_frame(vol, ctx, f);
      },
      tol, threads);

  // restriction to TZ on the supplied frames
  const int dz = Z.frames.empty() ? 0 : static_cast<int>(Z.frames[0].vectors.size());
  PositivityReport r;
  r.condition = "restriction to " + Z.name;
  r.grid.points = static_cast<long>(Z.samples.size());
  double mn = std::numeric_limits<double>::infinity();
  size_t argmin = 0;
  if (dz % 2 == 0)
    throw Error(ErrorCode::EvenDimension, "Z frames must have odd dimension");
  const int nz = (dz + 1) / 2;
  KForm volz = wedge(alpha, wedge_power(exterior_derivative(alpha), nz - 1));
  for (size_t i = 0; i < Z.samples.size(); ++i) {
    EvalContext ctx(M, Z.samples[i], tol);
    std::vector<const std::vector<double>*> v;
    for (const auto& e : Z.frames[i].vectors) v.push_back(&e);
    const double m = form_on_vectors(volz, ctx, v);
    if (m < mn) {
      mn = m;
      argmin = i;
    }
  }
  if (!Z.samples.empty()) {
    r.min_margin = mn;
    r.argmin_point = Z.samples[argmin];
    r.pass = mn > tol.pos;
  }
  out.restriction = r;
  out.pass = out.away.pass && out.restriction.pass;
  return out;
}

std::vector<KForm> domination_binomial_terms(const KForm& alpha, const KForm& omega,
                                             int power) {
  // term k of alpha ^ (omega + tau dalpha)^power: C(power,k) alpha ^
  // omega^(power-k) ^ dalpha^k
  std::vector<KForm> terms;
  KForm da = exterior_derivative(alpha);
  for (int k = 0; k <= power; ++k) {
    KForm t = wedge(alpha, wedge(wedge_power(omega, power - k), wedge_power(da, k)));
    const double binom = comb_count(power, k);
    // scale coefficients by the binomial factor
    KForm scaled(t.manifold(), t.degree());
    for (int r = 0; r < t.ncoeffs(); ++r)
      if (!is_zero_field(t.coeff_by_rank(r)))
        scaled.coeff_by_rank(r) = scale_field(t.coeff_by_rank(r), binom);
    terms.push_back(std::move(scaled));
  }
  return terms;
}

RayPolynomial domination_polynomial(const std::vector<KForm>& binomial_terms,
                                    EvalContext& ctx, const TangentFrame& frame) {
  RayPolynomial p;
  for (const auto& t : binomial_terms)
    p.coeff.push_back(form_on_frame(t, ctx, frame));
  return p;
}

WeakDominationReport weak_domination_check(const KForm& alpha, const KForm& omega,
                                           const ChartedManifold& M,
                                           const std::vector<int>& resolution,
                                           const Tolerances& tol, int threads) {
  const int d = M.dim();
  if (d % 2 == 0)
    throw Error(ErrorCode::EvenDimension, "weak domination needs odd dimension");
  const int power = (d - 1) / 2;

  // closedness of omega at samples (vacuous when d(omega) exceeds dimension)
  auto grid = M.sample_grid(resolution, tol);
  if (omega.degree() + 1 <= M.ncoords() && omega.degree() + 1 <= M.dim()) {
    KForm dom = exterior_derivative(omega);
    EvalContext ctx(M, grid.empty() ? std::vector<double>(M.ncoords(), 0.0)
                                    : grid[0].x,
                    tol);
    for (const auto& p : grid) {
      ctx.move_to(p.x);
      TangentFrame f = M.tangent_frame(p, tol);
      const int k = dom.degree();
      double worst = 0.0;
      const int nf = static_cast<int>(f.vectors.size());
      for (int r = 0; r < comb_count(nf, k); ++r) {
        const auto I = comb_unrank(r, nf, k);
        std::vector<const std::vector<double>*> v;
        for (int i : I) v.push_back(&f.vectors[i]);
        worst = std::max(worst, std::abs(form_on_vectors(dom, ctx, v)));
      }
      if (worst > 1e-9)
        throw Error(ErrorCode::NotClosed,
                    "d(omega) residual " + std::to_string(worst));
    }
  }

  auto terms = domination_binomial_terms(alpha, omega, power);

  WeakDominationReport out;
  struct Chunk {
    double mn = std::numeric_limits<double>::infinity();
    long arg = -1;
    long fails = 0;
    long degen = 0;
    double witness = 0.0;
  };
  std::vector<Chunk> chunks(256);
  parallel_chunks(static_cast<long>(grid.size()), threads, [&](int c, long b, long e) {
    Chunk local;
    EvalContext ctx(M, grid[b].x, tol);
    for (long i = b; i < e; ++i) {
      ctx.move_to(grid[i].x);
      TangentFrame frame = M.tangent_frame(grid[i], tol);
      RayPolynomial p = domination_polynomial(terms, ctx, frame);
      RayVerdict v;
      try {
        v = ray_positive(p);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::ZeroPolynomial) throw;
        v.positive = false;  // identically zero volume polynomial
        v.min_value = 0.0;
        v.witness_tau = 0.0;
      }
      if (v.degenerate_top) local.degen++;
      if (!v.positive) {
        local.fails++;
        local.witness = v.witness_tau;
      }
      if (v.min_value < local.mn) {
        local.mn = v.min_value;
        local.arg = i;
      }
    }
    chunks[c] = local;
  });
  double mn = std::numeric_limits<double>::infinity();
  long arg = -1;
  for (const auto& ch : chunks) {
    out.failed_points += ch.fails;
    out.report.degenerate_top_count += ch.degen;
    if (ch.fails > 0) out.worst_witness_tau = ch.witness;
    if (ch.arg < 0) continue;
    if (ch.mn < mn) {
      mn = ch.mn;
      arg = ch.arg;
    }
  }
  out.report.condition = "weak domination";
  out.report.grid.resolution = resolution;
  out.report.grid.points = static_cast<long>(grid.size());
  if (arg >= 0) {
    out.report.min_margin = mn;
    out.report.argmin_point = grid[arg].x;
    out.report.argmin_index = grid[arg].grid_index;
  }
  out.report.pass = out.failed_points == 0 && arg >= 0 && mn > tol.pos;
  if (!out.report.pass && out.failed_points == 0 && mn > 0.0) {
    out.report.warning = true;
    out.report.note = "margin positive but below the strict-positivity threshold";
  }
  if (out.report.degenerate_top_count > 0 && out.report.note.empty())
    out.report.note = "top tau-coefficient vanished at some points (decided exactly)";
  return out;
}

}  // namespace contactlab

#include "contactlab/reeb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace contactlab {

ReebResidual reeb_residuals(const KForm& alpha, const VectorField& R,
                            const std::vector<SamplePoint>& grid,
                            const Tolerances& tol) {
  ReebResidual out;
  const ChartedManifold& M = alpha.manifold();
  KForm da = exterior_derivative(alpha);
  ScalarField aR = pairing(alpha, R);
  EvalContext ctx(M, grid.empty() ? std::vector<double>(M.ncoords(), 0.0) : grid[0].x,
                  tol);
  for (const auto& p : grid) {
    ctx.move_to(p.x);
    out.worst_alpha = std::max(out.worst_alpha, std::abs(field_value(aR, ctx) - 1.0));
    TangentFrame f = M.tangent_frame(p, tol);
    std::vector<double> Rv = vector_values(R, ctx);
    for (const auto& e : f.vectors) {
      const double v = form_on_vectors(da, ctx, {&Rv, &e});
      out.worst_dalpha = std::max(out.worst_dalpha, std::abs(v));
    }
  }
  return out;
}

namespace {

struct DomainGuard {
  // (u index, v index, radius^2) triples for disk-bounded factors
  std::vector<std::array<double, 3>> disks;

  explicit DomainGuard(const ChartedManifold& M) {
    for (const auto& f : M.factors()) {
      if (f.kind == FactorKind::Box && f.box.disk_pair) {
        disks.push_back({double(f.coord_offset + f.box.disk_pair->first),
                         double(f.coord_offset + f.box.disk_pair->second),
                         f.box.disk_radius * f.box.disk_radius});
      }
    }
  }
  bool outside(const std::vector<double>& x) const {
    for (const auto& d : disks) {
      const double u = x[int(d[0])], v = x[int(d[1])];
      if (u * u + v * v >= d[2]) return true;
    }
    return false;
  }
};

// Stage points of the integrator stray off level sets by the step error;
// project back before evaluating so the pointwise solves stay on-manifold.
std::vector<double> field_at(const VectorField& X, EvalContext& ctx,
                             const std::vector<double>& x) {
  if (X.M->has_level_set()) {
    std::vector<double> y = x;
    X.M->project(y, ctx.tol());
    ctx.move_to(y);
  } else {
    ctx.move_to(x);
  }
  return vector_values(X, ctx);
}

}  // namespace

Trajectory integrate_flow(const VectorField& X, const std::vector<double>& seed,
                          double t_max, const FlowOptions& opt,
                          const KForm* alpha_audit) {
  const ChartedManifold& M = *X.M;
  DomainGuard guard(M);
  Trajectory out;
  EvalContext ctx(M, seed);
  ScalarField aX;
  if (alpha_audit) aX = pairing(*alpha_audit, X);

  // Dormand-Prince 5(4); the field is autonomous, so no stage time offsets
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 35.0 / 384 - 5179.0 / 57600,
                      e3 = 500.0 / 1113 - 7571.0 / 16695,
                      e4 = 125.0 / 192 - 393.0 / 640,
                      e5 = -2187.0 / 6784 + 92097.0 / 339200,
                      e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  const int n = M.ncoords();
  std::vector<double> y = seed;
  double t = 0.0, h = std::min(opt.max_step, t_max);
  out.times.push_back(0.0);
  out.states.push_back(y);
  if (aX) {
    ctx.move_to(y);
    out.alpha_drift = std::abs(field_value(aX, ctx) - 1.0);
  }

  using Pair = std::pair<double, const std::vector<double>*>;
  auto axpy = [n](const std::vector<double>& base, std::initializer_list<Pair> terms) {
    std::vector<double> r = base;
    for (const auto& [w, v] : terms)
      for (int i = 0; i < n; ++i) r[i] += w * (*v)[i];
    return r;
  };

  std::vector<double> k1 = field_at(X, ctx, y);
  while (t_max - t > opt.min_step) {
    h = std::min(h, t_max - t);
    if (h < opt.min_step && h < t_max - t)
      throw Error(ErrorCode::StepCollapse, "flow step collapsed at t=" + std::to_string(t));
    auto k2 = field_at(X, ctx, axpy(y, {{h * a21, &k1}}));
    auto k3 = field_at(X, ctx, axpy(y, {{h * a31, &k1}, {h * a32, &k2}}));
    auto k4 = field_at(X, ctx, axpy(y, {{h * a41, &k1}, {h * a42, &k2}, {h * a43, &k3}}));
    auto k5 = field_at(X, ctx,
                       axpy(y, {{h * a51, &k1}, {h * a52, &k2}, {h * a53, &k3},
                                {h * a54, &k4}}));
    auto k6 = field_at(X, ctx,
                       axpy(y, {{h * a61, &k1}, {h * a62, &k2}, {h * a63, &k3},
                                {h * a64, &k4}, {h * a65, &k5}}));
    std::vector<double> y5 = axpy(y, {{h * b1, &k1}, {h * b3, &k3}, {h * b4, &k4},
                                      {h * b5, &k5}, {h * b6, &k6}});
    auto k7 = field_at(X, ctx, y5);
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                            e6 * k6[i] + e7 * k7[i]);
      err += e * e;
    }
    err = std::sqrt(err);
    const double tol_local = opt.error_target * h;
    if (err <= tol_local || h <= 2.0 * opt.min_step) {
      t += h;
      y = std::move(y5);
      if (M.has_level_set()) M.project(y, Tolerances{});
      out.times.push_back(t);
      out.states.push_back(y);
      k1 = std::move(k7);  // FSAL
      if (aX) {
        ctx.move_to(y);
        out.alpha_drift =
            std::max(out.alpha_drift, std::abs(field_value(aX, ctx) - 1.0));
      }
      if (opt.stop_on_domain_exit && guard.outside(y)) {
        out.left_domain = true;
        break;
      }
    }
    const double safety =
        0.9 * std::pow(tol_local / std::max(err, 1e-300), 0.2);
    h *= std::clamp(safety, 0.2, 5.0);
    h = std::min(h, opt.max_step);
  }
  return out;
}

namespace {

// distance from state (unwrapped) to seed modulo torus periods
double return_distance(const ChartedManifold& M, const std::vector<double>& state,
                       const std::vector<double>& seed) {
  return M.distance(state, seed);
}

struct Resampled {
  std::vector<std::vector<double>> pts;
};

Resampled resample(const Trajectory& tr, int count) {
  Resampled r;
  if (tr.states.empty()) return r;
  const double T = tr.times.back();
  size_t j = 0;
  for (int i = 0; i < count; ++i) {
    const double t = T * i / count;
    while (j + 1 < tr.times.size() && tr.times[j + 1] < t) ++j;
    r.pts.push_back(tr.states[std::min(j, tr.states.size() - 1)]);
  }
  return r;
}

}  // namespace

std::vector<OrbitRecord> closed_orbit_search(
    const VectorField& X, const std::vector<std::vector<double>>& seeds,
    const OrbitSearchOptions& opt) {
  const ChartedManifold& M = *X.M;
  std::vector<OrbitRecord> accepted;
  EvalContext ctx(M, seeds.empty() ? std::vector<double>(M.ncoords(), 0.0) : seeds[0]);

  for (const auto& seed : seeds) {
    Trajectory tr;
    try {
      tr = integrate_flow(X, seed, opt.t_max, opt.flow);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::StepCollapse) continue;
      throw;
    }
    if (tr.left_domain) continue;  // truncated tube trajectories are excluded
    // stationary guard and seed speed (sets the candidate trigger radius)
    double v0n = 0.0;
    std::vector<double> v0;
    {
      ctx.move_to(seed);
      v0 = vector_values(X, ctx);
      for (double c : v0) v0n += c * c;
      v0n = std::sqrt(v0n);
      if (v0n < 1e-12) continue;
    }
    // candidate near-returns: local minima of the sampled return distance
    // below the trigger radius (the recorded samples are max_step apart, so
    // the trigger must cover one step of drift past the true return)
    const double trigger =
        std::max(opt.catch_radius, 1.5 * opt.flow.max_step * v0n);
    std::vector<double> candidates;
    {
      bool armed = false;
      std::vector<double> dist(tr.states.size());
      for (size_t i = 0; i < tr.states.size(); ++i)
        dist[i] = return_distance(M, tr.states[i], seed);
      for (size_t i = 1; i + 1 < tr.states.size(); ++i) {
        if (!armed) {
          if (dist[i] > 2.0 * trigger) armed = true;
          continue;
        }
        if (dist[i] < trigger && dist[i] <= dist[i - 1] && dist[i] <= dist[i + 1]) {
          candidates.push_back(tr.times[i]);
          armed = false;  // re-arm after leaving the trigger ball
        }
      }
    }
    if (candidates.empty()) continue;

    // refine each candidate period by secant iteration on the signed return
    // projection; accept the first that closes
    auto state_at = [&](double t) {
      size_t j = 0;
      while (j + 1 < tr.times.size() && tr.times[j + 1] <= t) ++j;
      FlowOptions strict = opt.flow;
      strict.error_target = std::min(opt.flow.error_target, 1e-12);
      Trajectory seg = integrate_flow(X, tr.states[j], t - tr.times[j], strict);
      return seg.states.back();
    };
    auto signed_gap = [&](double t) {
      auto s = state_at(t);
      double g = 0.0;
      for (int i = 0; i < M.ncoords(); ++i) {
        double d = s[i] - seed[i];
        if (M.coord_periodic(i)) {
          const double p = M.coord_period(i);
          d = std::fmod(d, p);
          if (d > 0.5 * p) d -= p;
          if (d < -0.5 * p) d += p;
        }
        g += d * v0[i];
      }
      return g / v0n;
    };
    double T = -1.0, residual = std::numeric_limits<double>::infinity();
    for (double best_t : candidates) {
      double t0 = best_t, t1 = best_t * (1.0 + 1e-4) + 1e-6;
      double g0 = signed_gap(t0), g1 = signed_gap(t1);
      for (int it = 0; it < 60 && std::abs(g1) > 1e-13; ++it) {
        if (g1 == g0) break;
        const double t2 = t1 - g1 * (t1 - t0) / (g1 - g0);
        t0 = t1;
        g0 = g1;
        t1 = std::clamp(t2, 0.5 * best_t, 1.5 * best_t);
        g1 = signed_gap(t1);
      }
      const double res = return_distance(M, state_at(t1), seed);
      if (res <= opt.orbit_tol) {
        T = t1;
        residual = res;
        break;
      }
    }
    if (T <= 0.0) continue;
    auto end_state = state_at(T);

    OrbitRecord rec;
    rec.seed = seed;
    rec.period = T;
    rec.residual = residual;
    rec.refined = true;
    for (int i = 0; i < M.ncoords(); ++i) {
      if (!M.coord_periodic(i)) continue;
      const double p = M.coord_period(i);
      const double w = (end_state[i] - seed[i]) / p;
      rec.winding.push_back(static_cast<int>(std::llround(w)));
    }
    // one-period sample set
    {
      Trajectory one = integrate_flow(X, seed, T, opt.flow);
      rec.points = resample(one, 128).pts;
    }

    // deduplicate against accepted orbits (curve distance at samples)
    bool dup = false;
    for (const auto& prev : accepted) {
      if (std::abs(prev.period - rec.period) >
          1e-4 * std::max(1.0, std::max(prev.period, rec.period)))
        continue;
      double hausdorff = 0.0;
      for (const auto& a : rec.points) {
        double mn = std::numeric_limits<double>::infinity();
        for (const auto& b : prev.points) mn = std::min(mn, M.distance(a, b));
        hausdorff = std::max(hausdorff, mn);
        if (hausdorff > 0.5) break;
      }
      // refine the coarse sample distance by flowing from the nearest sample
      if (hausdorff < 0.5) {
        double refined = 0.0;
        for (const auto& a : rec.points) {
          size_t bi = 0;
          double mn = std::numeric_limits<double>::infinity();
          for (size_t i = 0; i < prev.points.size(); ++i) {
            const double d = M.distance(a, prev.points[i]);
            if (d < mn) {
              mn = d;
              bi = i;
            }
          }
          // ternary search along the flow through prev.points[bi]
          double lo = -prev.period / 64.0, hi = prev.period / 64.0;
          auto dist_at = [&](double dt) {
            Trajectory seg = integrate_flow(X, prev.points[bi], std::abs(dt), opt.flow);
            // backwards: flow forward nearly a full period instead
            if (dt < 0.0) {
              Trajectory seg2 =
                  integrate_flow(X, prev.points[bi], prev.period + dt, opt.flow);
              return M.distance(a, seg2.states.back());
            }
            return M.distance(a, seg.states.back());
          };
          for (int it = 0; it < 24 && hi - lo > 1e-9; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (dist_at(m1) < dist_at(m2))
              hi = m2;
            else
              lo = m1;
          }
          refined = std::max(refined, dist_at(0.5 * (lo + hi)));
          if (refined > 10.0 * opt.orbit_tol) break;
        }
        if (refined <= 10.0 * opt.orbit_tol) dup = true;
      }
      if (dup) break;
    }
    if (!dup) accepted.push_back(std::move(rec));
  }
  return accepted;
}

ContractibleAuditReport contractible_orbit_audit(
    const std::vector<OrbitRecord>& records, const ChartedManifold& M,
    const ScalarField& binding_distance, const std::vector<int>& torus_coords,
    double tau_bind, double tau_orbit) {
  ContractibleAuditReport out;
  EvalContext ctx(M, std::vector<double>(M.ncoords(), 0.0));
  // winding entries are stored per periodic coordinate in coordinate order
  std::vector<int> winding_pos(M.ncoords(), -1);
  {
    int w = 0;
    for (int i = 0; i < M.ncoords(); ++i)
      if (M.coord_periodic(i)) winding_pos[i] = w++;
  }
  for (const auto& rec : records) {
    bool zero_winding = true;
    for (int tc : torus_coords)
      if (winding_pos[tc] >= 0 && rec.winding[winding_pos[tc]] != 0)
        zero_winding = false;
    if (!zero_winding) continue;
    out.zero_winding_orbits++;
    for (const auto& p : rec.points) {
      ctx.move_to(p);
      out.max_binding_distance =
          std::max(out.max_binding_distance, field_value(binding_distance, ctx));
      for (int tc : torus_coords) {
        double d = p[tc] - rec.points[0][tc];
        const double per = M.coord_period(tc);
        if (per > 0.0) {
          d = std::fmod(d, per);
          if (d > 0.5 * per) d -= per;
          if (d < -0.5 * per) d += per;
        }
        out.max_torus_spread = std::max(out.max_torus_spread, std::abs(d));
      }
    }
  }
  out.pass = out.max_binding_distance <= tau_bind && out.max_torus_spread <= tau_orbit;
  if (out.zero_winding_orbits == 0) out.note = "no zero-winding closed orbits (vacuous)";
  return out;
}

// ---------------------------------------------------------------------------
// Binding normal form
// ---------------------------------------------------------------------------

namespace {

struct RadialJets {
  double v, d1, d2;
};

RadialJets eval_radial(const Expr& e, double r) {
  static const std::vector<std::string> rv = {"r"};
  std::vector<Jet> at = {Jet::variable(1, 2, 0, r)};
  Jet j = e.eval(rv, at);
  return {j.v, j.g[0], j.hess(0, 0)};
}

std::string rho_source(double delta) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "r + (1 - r)*smoothstep(%.17g, %.17g, r)",
                delta / 3.0, 2.0 * delta / 3.0);
  return buf;
}

}  // namespace

ProfileReport binding_profile_check(const ReebNormalFormData& nf, int radial_samples) {
  ProfileReport rep;
  auto h1_0 = eval_radial(nf.h1, 0.0);
  auto h2_0 = eval_radial(nf.h2, 0.0);
  if (h1_0.v <= 0.0 || std::abs(h1_0.d1) > 1e-10) {
    rep.violated = 1;
    rep.note = "h1(0) must be positive with h1'(0) = 0";
    return rep;
  }
  if (std::abs(h2_0.v) > 1e-12 || std::abs(h2_0.d1) > 1e-10 || h2_0.d2 <= 1e-12) {
    rep.violated = 2;
    rep.note = "h2 must vanish to exactly quadratic order at r = 0";
    return rep;
  }
  // H/r > 0 on [0, delta), including the r -> 0 limit
  for (int i = 0; i <= radial_samples; ++i) {
    const double r = nf.delta * i / (radial_samples + 1);
    const auto h1 = eval_radial(nf.h1, r);
    const auto h2 = eval_radial(nf.h2, r);
    double H_over_r;
    if (r < 1e-12) {
      H_over_r = std::pow(h1.v, nf.n_index - 1) * h1.v * h2_0.d2;
    } else {
      H_over_r =
          std::pow(h1.v, nf.n_index - 1) * (h1.v * h2.d1 - h2.v * h1.d1) / r;
    }
    if (H_over_r <= 0.0) {
      rep.violated = 3;
      rep.witness_r = r;
      rep.note = "H/r must stay positive";
      return rep;
    }
    if (r > 1e-12 && h1.d1 >= 0.0) {
      rep.violated = 4;
      rep.witness_r = r;
      rep.note = "h1 must be strictly decreasing for r > 0";
      return rep;
    }
  }
  rep.valid = true;
  return rep;
}

TubeModel build_tube_model(const ReebNormalFormData& nf) {
  ProfileReport rep = binding_profile_check(nf);
  if (!rep.valid)
    throw Error(ErrorCode::ProfileViolation,
                "condition (" + std::to_string(rep.violated) + ") at r=" +
                    std::to_string(rep.witness_r) + ": " + rep.note);
  TubeModel tm;
  BoxFactor circle;
  circle.names = {"thetaB"};
  circle.periodic = {true};
  circle.period = {2.0 * M_PI};
  circle.lo = {0.0};
  circle.hi = {2.0 * M_PI};
  tm.tube = std::make_shared<ChartedManifold>(ChartedManifold::product(
      {ChartedManifold::box(circle), ChartedManifold::disk2(nf.delta)}));
  BoxFactor t2;
  t2.names = {"x", "y"};
  t2.periodic = {true, true};
  t2.period = {2.0 * M_PI, 2.0 * M_PI};
  t2.lo = {0.0, 0.0};
  t2.hi = {2.0 * M_PI, 2.0 * M_PI};
  tm.tube_torus = std::make_shared<ChartedManifold>(ChartedManifold::product(
      {*tm.tube, ChartedManifold::box(t2)}));

  const ChartedManifold& P = *tm.tube_torus;
  const int i_theta = P.coord_index("thetaB");
  const int i_u = P.coord_index("u");
  const int i_v = P.coord_index("v");
  const int i_x = P.coord_index("x");
  const int i_y = P.coord_index("y");

  // beta = h1(r) dthetaB + h2(r) dphi, with h2 dphi = (h2/r^2)(u dv - v du)
  tm.beta = KForm(P, 1);
  tm.beta.set({i_theta}, radial_field(nf.h1, i_u, i_v));
  ScalarField w = radial_quotient_field(nf.h2, i_u, i_v);
  tm.beta.set({i_u}, product_field(scale_field(w, -1.0), expr_field("v")));
  tm.beta.set({i_v}, product_field(w, expr_field("u")));

  // phi = rho(r)(cos phi, sin phi) = q(r) (u, v) with q = rho(r) r / r^2
  Expr q_num = Expr::parse("(" + rho_source(nf.delta) + ")*r");
  ScalarField q = radial_quotient_field(q_num, i_u, i_v);
  tm.phi1 = product_field(q, expr_field("u"));
  tm.phi2 = product_field(q, expr_field("v"));
  tm.rho = radial_field(Expr::parse(rho_source(nf.delta)), i_u, i_v);

  tm.alpha = tm.beta;
  tm.alpha.set({i_x}, tm.phi1);
  tm.alpha.set({i_y}, scale_field(tm.phi2, -1.0));
  return tm;
}

double normal_form_lambda(const ReebNormalFormData& nf, double r) {
  const auto rho = eval_radial(Expr::parse(rho_source(nf.delta)), r);
  const auto h1 = eval_radial(nf.h1, r);
  const double den = rho.d1 * h1.v - rho.v * h1.d1;
  return rho.d1 / den;
}

double normal_form_mu(const ReebNormalFormData& nf, double r) {
  const auto rho = eval_radial(Expr::parse(rho_source(nf.delta)), r);
  const auto h1 = eval_radial(nf.h1, r);
  const double den = rho.d1 * h1.v - rho.v * h1.d1;
  const double mu = -h1.d1 / den;
  return mu == 0.0 ? 0.0 : mu;  // normalize -0.0 for reporting
}

NormalFormComparison predicted_reeb_bourgeois(const ReebNormalFormData& nf,
                                              const std::vector<int>& resolution,
                                              const Tolerances& tol,
                                              double mismatch_tol) {
  TubeModel tm = build_tube_model(nf);
  const ChartedManifold& P = *tm.tube_torus;
  const int i_theta = P.coord_index("thetaB");
  const int i_u = P.coord_index("u");
  const int i_v = P.coord_index("v");
  const int i_x = P.coord_index("x");
  const int i_y = P.coord_index("y");

  VectorField R = reeb_vector_field(tm.alpha);
  auto grid = P.sample_grid(resolution, tol);
  NormalFormComparison out;
  EvalContext ctx(P, grid.empty() ? std::vector<double>(P.ncoords(), 0.0) : grid[0].x,
                  tol);
  out.lambda0 = normal_form_lambda(nf, 0.0);
  for (const auto& p : grid) {
    ctx.move_to(p.x);
    const double u = p.x[i_u], v = p.x[i_v];
    const double r = std::sqrt(u * u + v * v);
    const double lam = normal_form_lambda(nf, r);
    const double mu = normal_form_mu(nf, r);
    std::vector<double> pred(P.ncoords(), 0.0);
    pred[i_theta] = lam;
    if (r > 1e-14) {
      pred[i_x] = mu * u / r;
      pred[i_y] = -mu * v / r;
    }
    auto Rv = vector_values(R, ctx);
    double dev = 0.0;
    for (int i = 0; i < P.ncoords(); ++i) dev = std::max(dev, std::abs(Rv[i] - pred[i]));
    if (dev > out.max_deviation) {
      out.max_deviation = dev;
      out.argmax_point = p.x;
    }
    if (r < 1e-14) {
      out.max_torus_component_at_binding =
          std::max(out.max_torus_component_at_binding,
                   std::max(std::abs(Rv[i_x]), std::abs(Rv[i_y])));
    }
    if (r >= 2.0 * nf.delta / 3.0 + 1e-9) {
      const double ex = std::abs(Rv[i_x] - u / r);
      const double ey = std::abs(Rv[i_y] + v / r);
      const double ez = std::abs(Rv[i_theta]);
      out.max_outer_region_error =
          std::max({out.max_outer_region_error, ex, ey, ez});
    }
  }
  out.pass = out.max_deviation <= mismatch_tol;
  if (!out.pass)
    throw Error(ErrorCode::PredictionMismatch,
                "deviation " + std::to_string(out.max_deviation) +
                    " exceeds tolerance (implementation bug)");
  return out;
}

}  // namespace contactlab

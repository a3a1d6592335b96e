#include "contactlab/bourgeois.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace contactlab {

namespace {

BoxFactor torus_xy() {
  BoxFactor t2;
  t2.names = {"x", "y"};
  t2.periodic = {true, true};
  t2.period = {2.0 * M_PI, 2.0 * M_PI};
  t2.lo = {0.0, 0.0};
  t2.hi = {2.0 * M_PI, 2.0 * M_PI};
  return t2;
}

}  // namespace

BourgeoisModel make_bourgeois(std::shared_ptr<ChartedManifold> base,
                              const std::vector<std::pair<std::string, Expr>>& beta,
                              Expr phi1, Expr phi2, double eps) {
  BourgeoisModel m;
  m.base = std::move(base);
  m.total = std::make_shared<ChartedManifold>(
      ChartedManifold::product({*m.base, ChartedManifold::box(torus_xy())}));
  m.eps = eps;
  m.ix = m.total->coord_index("x");
  m.iy = m.total->coord_index("y");

  m.beta_base = KForm(*m.base, 1);
  m.beta_total = KForm(*m.total, 1);
  for (const auto& [name, e] : beta) {
    const int ib = m.base->coord_index(name);
    const int it = m.total->coord_index(name);
    m.beta_base.set({ib}, expr_field(e));
    m.beta_total.set({it}, expr_field(e));
  }
  m.phi1 = expr_field(phi1);
  m.phi2 = expr_field(phi2);
  m.alpha = bourgeois_alpha(m, eps);
  return m;
}

KForm bourgeois_alpha(const BourgeoisModel& m, double eps) {
  KForm a = m.beta_total;
  a.set({m.ix}, scale_field(m.phi1, eps));
  a.set({m.iy}, scale_field(m.phi2, -eps));
  return a;
}

BourgeoisFormReport bourgeois_form(const BourgeoisModel& m,
                                   const std::vector<int>& base_resolution,
                                   const std::vector<int>& total_resolution,
                                   const Tolerances& tol, int threads) {
  BourgeoisFormReport out;
  const int d = m.base->dim();
  const int n = (d + 1) / 2;
  if (n >= 2) {
    out.domain_condition_checked = true;
    KForm d1 = differential(*m.base, m.phi1);
    KForm d2 = differential(*m.base, m.phi2);
    KForm cond = wedge(m.beta_base,
                       wedge(wedge_power(exterior_derivative(m.beta_base), n - 2),
                             wedge(d1, d2)));
    auto grid = m.base->sample_grid(base_resolution, tol);
    double mn = std::numeric_limits<double>::infinity();
    std::vector<double> arg;
    EvalContext ctx(*m.base, grid.empty() ? std::vector<double>(m.base->ncoords(), 0.0)
                                          : grid[0].x,
                    tol);
    for (const auto& p : grid) {
      ctx.move_to(p.x);
      TangentFrame f = m.base->tangent_frame(p, tol);
      const double v = form_on_frame(cond, ctx, f);
      if (v < mn) {
        mn = v;
        arg = p.x;
      }
    }
    out.domain_condition_min = mn;
    if (mn < -tol.pos)
      throw Error(ErrorCode::DomainConditionFailure,
                  "gamma^dgamma^(n-2)^dphi1^dphi2 = " + std::to_string(mn) +
                      " at a base sample");
  }
  out.contact = contact_check(m.alpha, *m.total, total_resolution, tol, threads);
  if (!out.contact.pass)
    throw Error(ErrorCode::NotContactResult,
                "assembled Bourgeois form fails the contact check (margin " +
                    std::to_string(out.contact.min_margin) + ")");
  out.pass = out.contact.pass;
  return out;
}

namespace {

// Horizontal-lift solve for the potential of a contact fiber bundle over T^2
// with the product splitting as reference: for u in {d_x, d_y},
// A_u = (eta-horizontal lift of u) - u, vertical by construction.
class SplittingSolver final : public PointSolver {
 public:
  SplittingSolver(const KForm& alpha, const KForm& beta_total, int torus_coord,
                  int fiber_dim)
      : alpha_(alpha), dalpha_(exterior_derivative(alpha)), beta_(beta_total),
        u_(torus_coord), fiber_dim_(fiber_dim) {}

  std::vector<Jet> solve(EvalContext& ctx, int order) const override {
    const ChartedManifold& M = ctx.manifold();
    const int N = M.ncoords();
    auto frame = M.tangent_frame_jets(ctx.point(), order, ctx.tol());
    // fiber frame vectors come first (torus factor is last)
    const int df = fiber_dim_;
    std::vector<Jet> du(N, Jet::constant(N, order, 0.0));
    du[u_] = Jet::constant(N, order, 1.0);
    // unknowns: w_1..w_df (fiber components), lambda
    std::vector<std::vector<Jet>> A(df + 1, std::vector<Jet>(df + 1, Jet::constant(N, order, 0.0)));
    std::vector<Jet> b(df + 1, Jet::constant(N, order, 0.0));
    for (int j = 0; j < df; ++j) {
      for (int i = 0; i < df; ++i)
        A[j][i] = form_on_vectors_jet(dalpha_, ctx, {&frame[i], &frame[j]}, order);
      A[j][df] = -form_on_vectors_jet(beta_, ctx, {&frame[j]}, order);
      b[j] = -form_on_vectors_jet(dalpha_, ctx, {&du, &frame[j]}, order);
    }
    for (int i = 0; i < df; ++i)
      A[df][i] = form_on_vectors_jet(alpha_, ctx, {&frame[i]}, order);
    b[df] = -form_on_vectors_jet(alpha_, ctx, {&du}, order);
    auto sol = solve_linear_jets(std::move(A), std::move(b),
                                 ErrorCode::SingularSplitting,
                                 "horizontal lift solve");
    std::vector<Jet> out(N, Jet::constant(N, order, 0.0));
    for (int i = 0; i < df; ++i)
      for (int c = 0; c < N; ++c) out[c] = out[c] + sol[i] * frame[i][c];
    return out;
  }

  KForm alpha_, dalpha_, beta_;
  int u_;
  int fiber_dim_;
};

}  // namespace

Potential potential_of(const BourgeoisModel& m, const KForm& alpha_total,
                       const std::vector<int>& total_resolution,
                       const Tolerances& tol) {
  const ChartedManifold& P = *m.total;
  const int fiber_dim = P.dim() - 2;
  // fiber restriction must define ker(beta): check proportionality at samples
  {
    auto grid = P.sample_grid(total_resolution, tol);
    EvalContext ctx(P, grid.empty() ? std::vector<double>(P.ncoords(), 0.0)
                                    : grid[0].x,
                    tol);
    for (const auto& p : grid) {
      ctx.move_to(p.x);
      TangentFrame f = P.tangent_frame(p, tol);
      std::vector<double> a, b;
      for (int i = 0; i < fiber_dim; ++i) {
        a.push_back(form_on_vectors(alpha_total, ctx, {&f.vectors[i]}));
        b.push_back(form_on_vectors(m.beta_total, ctx, {&f.vectors[i]}));
      }
      double aa = 0.0, bb = 0.0, ab = 0.0;
      for (int i = 0; i < fiber_dim; ++i) {
        aa += a[i] * a[i];
        bb += b[i] * b[i];
        ab += a[i] * b[i];
      }
      if (aa * bb - ab * ab > 1e-18 * std::max(1.0, aa) * std::max(1.0, bb) ||
          ab <= 0.0)
        throw Error(ErrorCode::FiberMismatch,
                    "alpha does not restrict to ker(beta) on the fibers");
    }
  }
  Potential A;
  A.A_x = solver_vector_field(
      P, std::make_shared<SplittingSolver>(alpha_total, m.beta_total, m.ix, fiber_dim));
  A.A_y = solver_vector_field(
      P, std::make_shared<SplittingSolver>(alpha_total, m.beta_total, m.iy, fiber_dim));
  return A;
}

Potential potential_hamiltonian(const BourgeoisModel& m) {
  // A_x, A_y have contact Hamiltonians -eps phi1, +eps phi2 w.r.t. beta; the
  // solve runs on the total chart restricted to the fiber frame.
  const ChartedManifold& P = *m.total;
  const int fiber_dim = P.dim() - 2;
  struct FiberHamiltonian final : public PointSolver {
    KForm beta, dbeta;
    ScalarField H;
    int fiber_dim;
    FiberHamiltonian(const KForm& b, ScalarField h, int fd)
        : beta(b), dbeta(exterior_derivative(b)), H(std::move(h)), fiber_dim(fd) {}
    std::vector<Jet> solve(EvalContext& ctx, int order) const override {
      const ChartedManifold& M = ctx.manifold();
      const int N = M.ncoords();
      auto frame = M.tangent_frame_jets(ctx.point(), order, ctx.tol());
      const int d = fiber_dim;
      // fiber Reeb: bordered solve on the fiber frame
      std::vector<Jet> a(d);
      std::vector<std::vector<Jet>> Mm(d, std::vector<Jet>(d));
      for (int i = 0; i < d; ++i) {
        a[i] = form_on_vectors_jet(beta, ctx, {&frame[i]}, order);
        for (int j = 0; j < d; ++j)
          Mm[i][j] = (j == i) ? Jet::constant(N, order, 0.0)
                              : form_on_vectors_jet(dbeta, ctx, {&frame[i], &frame[j]}, order);
      }
      auto bordered = [&](const std::vector<Jet>& rhs, const Jet& last) {
        std::vector<std::vector<Jet>> A(d + 1, std::vector<Jet>(d + 1, Jet::constant(N, order, 0.0)));
        std::vector<Jet> b(d + 1, Jet::constant(N, order, 0.0));
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) A[i][j] = Mm[j][i];
          A[i][d] = a[i];
          A[d][i] = a[i];
          b[i] = rhs[i];
        }
        b[d] = last;
        return solve_linear_jets(std::move(A), std::move(b), ErrorCode::NotContact,
                                 "fiber Hamiltonian solve");
      };
      std::vector<Jet> zero(d, Jet::constant(N, order, 0.0));
      auto reeb = bordered(zero, Jet::constant(N, order, 1.0));
      // dH along fiber directions and along the fiber Reeb
      Jet Hj = field_jet(H, ctx, order + 1);
      auto dH_on = [&](const std::vector<Jet>& v) {
        Jet s = Jet::constant(N, order, 0.0);
        for (int c = 0; c < N; ++c) {
          Jet dHc(N, order, Hj.g[c]);
          if (order >= 1)
            for (int k = 0; k < N; ++k) dHc.g[k] = Hj.hess(c, k);
          s = s + dHc * v[c];
        }
        return s;
      };
      std::vector<Jet> Rv(N, Jet::constant(N, order, 0.0));
      for (int i = 0; i < d; ++i)
        for (int c = 0; c < N; ++c) Rv[c] = Rv[c] + reeb[i] * frame[i][c];
      Jet dHR = dH_on(Rv);
      std::vector<Jet> rhs(d, Jet::constant(N, order, 0.0));
      for (int i = 0; i < d; ++i) rhs[i] = dHR * a[i] - dH_on(frame[i]);
      auto sol = bordered(rhs, field_jet(H, ctx, order));
      std::vector<Jet> out(N, Jet::constant(N, order, 0.0));
      for (int i = 0; i < d; ++i)
        for (int c = 0; c < N; ++c) out[c] = out[c] + sol[i] * frame[i][c];
      return out;
    }
  };
  Potential A;
  A.A_x = solver_vector_field(
      P, std::make_shared<FiberHamiltonian>(m.beta_total,
                                            scale_field(m.phi1, -m.eps), fiber_dim));
  A.A_y = solver_vector_field(
      P, std::make_shared<FiberHamiltonian>(m.beta_total,
                                            scale_field(m.phi2, m.eps), fiber_dim));
  return A;
}

double potential_cross_check(const BourgeoisModel& m, const Potential& split,
                             const Potential& ham,
                             const std::vector<int>& total_resolution,
                             const Tolerances& tol) {
  auto grid = m.total->sample_grid(total_resolution, tol);
  double worst = 0.0;
  EvalContext ctx(*m.total, grid.empty() ? std::vector<double>(m.total->ncoords(), 0.0)
                                         : grid[0].x,
                  tol);
  for (const auto& p : grid) {
    ctx.move_to(p.x);
    auto ax1 = vector_values(split.A_x, ctx);
    auto ax2 = vector_values(ham.A_x, ctx);
    auto ay1 = vector_values(split.A_y, ctx);
    auto ay2 = vector_values(ham.A_y, ctx);
    for (size_t i = 0; i < ax1.size(); ++i) {
      worst = std::max(worst, std::abs(ax1[i] - ax2[i]));
      worst = std::max(worst, std::abs(ay1[i] - ay2[i]));
    }
  }
  return worst;
}

CurvatureTerms curvature_terms(const BourgeoisModel& m, const Potential& A) {
  CurvatureTerms out;
  out.dnabla = VectorField::zero(*m.total);
  for (int i = 0; i < m.total->ncoords(); ++i) {
    std::vector<std::pair<double, ScalarField>> terms;
    if (A.A_y.comp[i] && !is_zero_field(A.A_y.comp[i]))
      terms.push_back({1.0, partial_field(A.A_y.comp[i], m.ix)});
    if (A.A_x.comp[i] && !is_zero_field(A.A_x.comp[i]))
      terms.push_back({-1.0, partial_field(A.A_x.comp[i], m.iy)});
    if (!terms.empty()) out.dnabla.comp[i] = sum_field(std::move(terms));
  }
  out.bracket = lie_bracket(A.A_x, A.A_y);
  return out;
}

BourgeoisCriterion bourgeois_criterion(const BourgeoisModel& m, const Potential& A,
                                       const std::vector<int>& total_resolution,
                                       const Tolerances& tol, double tau_flat) {
  BourgeoisCriterion out;
  CurvatureTerms ct = curvature_terms(m, A);
  ScalarField beta_br = pairing(m.beta_total, ct.bracket);
  VectorField combined = add_fields(ct.dnabla, 1.0, ct.bracket, 1.0);
  ScalarField beta_comb = pairing(m.beta_total, combined);
  auto grid = m.total->sample_grid(total_resolution, tol);
  double max_dn = 0.0, max_br = -std::numeric_limits<double>::infinity(),
         max_cb = -std::numeric_limits<double>::infinity();
  EvalContext ctx(*m.total, grid.empty() ? std::vector<double>(m.total->ncoords(), 0.0)
                                         : grid[0].x,
                  tol);
  for (const auto& p : grid) {
    ctx.move_to(p.x);
    auto dn = vector_values(ct.dnabla, ctx);
    for (double c : dn) max_dn = std::max(max_dn, std::abs(c));
    max_br = std::max(max_br, field_value(beta_br, ctx));
    max_cb = std::max(max_cb, field_value(beta_comb, ctx));
  }
  out.max_dnabla = max_dn;
  out.max_beta_bracket = max_br;
  out.max_beta_total = max_cb;
  out.bourgeois = max_dn <= tau_flat && max_br < -tol.pos;
  out.lerman_contact = max_cb < -tol.pos;
  return out;
}

AveragedPotential average_potential(const BourgeoisModel& m, const Potential& A,
                                    int Q, const std::vector<int>& total_resolution,
                                    const Tolerances& tol, double tau_flat,
                                    double tau_quad) {
  // hypothesis of the averaging statement: the potential is d_nabla-closed
  CurvatureTerms ct = curvature_terms(m, A);
  auto grid = m.total->sample_grid(total_resolution, tol);
  EvalContext ctx(*m.total, grid.empty() ? std::vector<double>(m.total->ncoords(), 0.0)
                                         : grid[0].x,
                  tol);
  {
    double max_dn = 0.0;
    for (const auto& p : grid) {
      ctx.move_to(p.x);
      auto dn = vector_values(ct.dnabla, ctx);
      for (double c : dn) max_dn = std::max(max_dn, std::abs(c));
    }
    if (max_dn > tau_flat)
      throw Error(ErrorCode::NotClosedPotential,
                  "d_nabla A = " + std::to_string(max_dn) +
                      " exceeds the flatness tolerance; the averaging identity is "
                      "not claimed");
  }

  AveragedPotential out;
  const std::vector<int> axes = {m.ix, m.iy};
  const std::vector<double> periods = {2.0 * M_PI, 2.0 * M_PI};
  out.averaged.A_x = VectorField::zero(*m.total);
  out.averaged.A_y = VectorField::zero(*m.total);
  for (int i = 0; i < m.total->ncoords(); ++i) {
    if (A.A_x.comp[i] && !is_zero_field(A.A_x.comp[i]))
      out.averaged.A_x.comp[i] = average_field(A.A_x.comp[i], axes, periods, Q);
    if (A.A_y.comp[i] && !is_zero_field(A.A_y.comp[i]))
      out.averaged.A_y.comp[i] = average_field(A.A_y.comp[i], axes, periods, Q);
  }

  // identity: average([A_x, A_y]) equals [avg A_x, avg A_y] at fiber samples
  VectorField br = lie_bracket(A.A_x, A.A_y);
  VectorField br_avg = VectorField::zero(*m.total);
  for (int i = 0; i < m.total->ncoords(); ++i)
    if (br.comp[i] && !is_zero_field(br.comp[i]))
      br_avg.comp[i] = average_field(br.comp[i], axes, periods, Q);
  VectorField avg_br = lie_bracket(out.averaged.A_x, out.averaged.A_y);
  double worst = 0.0;
  for (const auto& p : grid) {
    ctx.move_to(p.x);
    auto a = vector_values(br_avg, ctx);
    auto b = vector_values(avg_br, ctx);
    for (size_t i = 0; i < a.size(); ++i)
      worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  out.max_identity_residual = worst;
  if (worst > tau_quad)
    throw Error(ErrorCode::NotClosedPotential,
                "averaging identity residual " + std::to_string(worst));
  out.criterion = bourgeois_criterion(m, out.averaged, total_resolution, tol, tau_flat);
  return out;
}

WeakFillingResult bourgeois_weak_filling_check(
    const BourgeoisModel& m, const KForm& omega_base, const KForm& omega_base_on_total,
    const std::vector<int>& base_resolution, const std::vector<int>& total_resolution,
    const Tolerances& tol, double eps_min, int threads) {
  WeakFillingResult out;
  out.base = weak_domination_check(m.beta_base, omega_base, *m.base, base_resolution,
                                   tol, threads);
  if (!out.base.report.pass)
    throw Error(ErrorCode::BaseNotDominated,
                "omega does not weakly dominate the base (margin " +
                    std::to_string(out.base.report.min_margin) + ")");
  // omega_total = omega_M + dx ^ dy
  KForm omega_total = omega_base_on_total;
  omega_total.add({m.ix, m.iy}, 1.0, const_field(1.0));
  for (double eps = 1.0; eps >= eps_min; eps *= 0.5) {
    KForm alpha_eps = bourgeois_alpha(m, eps);
    WeakDominationReport r = weak_domination_check(alpha_eps, omega_total, *m.total,
                                                   total_resolution, tol, threads);
    out.eps_history.push_back({eps, r.report.min_margin});
    if (r.report.pass) {
      out.eps = eps;
      out.total = std::move(r);
      return out;
    }
  }
  throw Error(ErrorCode::EpsilonExhausted,
              "no eps >= 2^-30 makes the product weakly dominated");
}

}  // namespace contactlab

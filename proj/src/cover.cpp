#include "contactlab/cover.hpp"

#include "contactlab/openbook.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace contactlab {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

long long binom(int n, int k) {
  long long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

// Real and imaginary part of (u + i v)^k as expression strings.
std::pair<std::string, std::string> zk_expressions(const std::string& u,
                                                   const std::string& v, int k) {
  std::ostringstream re, im;
  bool re_first = true, im_first = true;
  for (int j = 0; j <= k; ++j) {
    const long long c = binom(k, j);
    std::ostringstream term;
    term << c << "*" << u << "^" << (k - j) << "*" << v << "^" << j;
    if (j % 2 == 0) {
      const int sign = (j / 2) % 2 == 0 ? 1 : -1;
      re << (re_first ? (sign > 0 ? "" : "-") : (sign > 0 ? " + " : " - "))
         << term.str();
      re_first = false;
    } else {
      const int sign = ((j - 1) / 2) % 2 == 0 ? 1 : -1;
      im << (im_first ? (sign > 0 ? "" : "-") : (sign > 0 ? " + " : " - "))
         << term.str();
      im_first = false;
    }
  }
  return {re.str(), im.str()};
}

TangentFrame circle_frame1(const std::vector<double>& direction) {
  TangentFrame f;
  f.vectors.push_back(direction);
  f.orientation_sign = 1;
  return f;
}

}  // namespace

ScalarField cover_cutoff(const BranchedCoverSpec& spec) {
  Expr g = Expr::parse("bump01(r/" + fmt(spec.delta) + ")");
  return radial_field(g, spec.tube_u, spec.tube_v);
}

BranchedCoverSpec local_model_cover(int k, double delta) {
  BranchedCoverSpec spec;
  spec.name = "local_model_k" + std::to_string(k);
  spec.k = k;
  spec.delta = delta;

  BoxFactor circle;
  circle.names = {"theta"};
  circle.periodic = {true};
  circle.period = {2.0 * M_PI};
  circle.lo = {0.0};
  circle.hi = {2.0 * M_PI};

  spec.source = std::make_shared<ChartedManifold>(ChartedManifold::product(
      {ChartedManifold::box(circle), ChartedManifold::disk2(delta, "u", "v")}));
  spec.target = std::make_shared<ChartedManifold>(ChartedManifold::product(
      {ChartedManifold::box(circle),
       ChartedManifold::disk2(std::pow(delta, k), "U", "V")}));

  auto [re, im] = zk_expressions("u", "v", k);
  spec.map = {expr_field("theta"), expr_field(re), expr_field(im)};
  spec.tube_u = spec.source->coord_index("u");
  spec.tube_v = spec.source->coord_index("v");
  spec.radial = sqrt_field(expr_field("u^2 + v^2"));

  // deck transformations: rotation by 2 pi j / k in the fiber disk
  for (int j = 0; j < k; ++j) {
    const double c = std::cos(2.0 * M_PI * j / k), s = std::sin(2.0 * M_PI * j / k);
    spec.deck_maps.push_back(
        {expr_field("theta"),
         expr_field(fmt(c) + "*u - " + fmt(s) + "*v"),
         expr_field(fmt(s) + "*u + " + fmt(c) + "*v")});
  }

  auto make_locus = [&](const ChartedManifold& M, const char* uu, const char* vv) {
    SubmanifoldSpec Z;
    Z.name = "binding circle";
    Z.distance = sqrt_field(expr_field(std::string(uu) + "^2 + " + vv + "^2"));
    const int nt = 24;
    for (int i = 0; i < nt; ++i) {
      std::vector<double> p(M.ncoords(), 0.0);
      p[M.coord_index("theta")] = 2.0 * M_PI * i / nt;
      Z.samples.push_back(p);
      std::vector<double> dir(M.ncoords(), 0.0);
      dir[M.coord_index("theta")] = 1.0;
      Z.frames.push_back(circle_frame1(dir));
    }
    Z.exclusion_radius = 0.05 * spec.delta;
    return Z;
  };
  spec.upstairs_locus = make_locus(*spec.source, "u", "v");
  spec.downstairs_locus = make_locus(*spec.target, "U", "V");
  return spec;
}

BranchedCoverSpec s3_cyclic_cover(int k) {
  BranchedCoverSpec spec;
  spec.name = "s3_cyclic_k" + std::to_string(k);
  spec.k = k;
  spec.delta = 0.7;
  spec.source = std::make_shared<ChartedManifold>(ChartedManifold::sphere3());
  spec.target = std::make_shared<ChartedManifold>(ChartedManifold::sphere3());

  auto [re, im] = zk_expressions("x2", "y2", k);
  const std::string norm =
      "sqrt(x1^2 + y1^2 + (x2^2 + y2^2)^" + std::to_string(k) + ")";
  spec.map = {expr_field("x1/" + norm), expr_field("y1/" + norm),
              expr_field("(" + re + ")/" + norm), expr_field("(" + im + ")/" + norm)};
  spec.tube_u = spec.source->coord_index("x2");
  spec.tube_v = spec.source->coord_index("y2");
  spec.radial = sqrt_field(expr_field("x2^2 + y2^2"));

  for (int j = 0; j < k; ++j) {
    const double c = std::cos(2.0 * M_PI * j / k), s = std::sin(2.0 * M_PI * j / k);
    spec.deck_maps.push_back(
        {expr_field("x1"), expr_field("y1"),
         expr_field(fmt(c) + "*x2 - " + fmt(s) + "*y2"),
         expr_field(fmt(s) + "*x2 + " + fmt(c) + "*y2")});
  }

  auto make_unknot = [&]() {
    SubmanifoldSpec Z;
    Z.name = "unknot";
    Z.distance = sqrt_field(expr_field("x2^2 + y2^2"));
    const int nt = 24;
    for (int i = 0; i < nt; ++i) {
      const double a = 2.0 * M_PI * i / nt;
      std::vector<double> p = {std::cos(a), std::sin(a), 0.0, 0.0};
      Z.samples.push_back(p);
      Z.frames.push_back(circle_frame1({-std::sin(a), std::cos(a), 0.0, 0.0}));
    }
    Z.exclusion_radius = 0.05;
    return Z;
  };
  spec.upstairs_locus = make_unknot();
  spec.downstairs_locus = make_unknot();
  return spec;
}

PullbackResult pullback_branched(const BranchedCoverSpec& spec, const KForm& alpha,
                                 const std::vector<int>& source_resolution,
                                 const std::vector<int>& target_resolution,
                                 const Tolerances& tol) {
  PullbackResult out;
  // alpha must be an honest contact form downstairs
  PositivityReport down = contact_check(alpha, *spec.target, target_resolution, tol);
  if (!down.pass)
    throw Error(ErrorCode::NotContact,
                "downstairs form fails the contact check (margin " +
                    std::to_string(down.min_margin) + ")");
  // standing hypothesis: restriction to the downstairs locus is contact
  out.downstairs_restriction =
      restriction_contact_margin(alpha, *spec.target, spec.downstairs_locus, tol);
  if (!out.downstairs_restriction.pass)
    throw Error(ErrorCode::BranchRestrictionNotContact,
                "restriction to the downstairs branching locus is not contact");

  out.pulled = pullback(*spec.source, *spec.target, spec.map, alpha);
  out.adjusted =
      adjusted_check(out.pulled, *spec.source, spec.upstairs_locus,
                     source_resolution, tol);
  return out;
}

KForm contactize(const KForm& pulled, const BranchedCoverSpec& spec, double eps,
                 double s) {
  if (s == 0.0 || eps == 0.0) return pulled;
  KForm out = pulled;
  ScalarField g = cover_cutoff(spec);
  ScalarField w = scale_field(g, s * eps);
  out.add({spec.tube_u}, -1.0, product_field(w, expr_field(
      spec.source->coords()[spec.tube_v])));
  out.add({spec.tube_v}, 1.0, product_field(w, expr_field(
      spec.source->coords()[spec.tube_u])));
  return out;
}

EpsilonSearchResult epsilon_search(const KForm& pulled, const BranchedCoverSpec& spec,
                                   const std::vector<int>& resolution,
                                   const std::vector<double>& s_grid,
                                   const Tolerances& tol, double eps_min,
                                   int threads) {
  EpsilonSearchResult out;
  out.s_grid = s_grid;
  if (out.s_grid.empty())
    for (int i = 1; i <= 10; ++i) out.s_grid.push_back(0.1 * i);
  for (double eps = 1.0; eps >= eps_min; eps *= 0.5) {
    std::vector<std::pair<double, double>> margins;
    bool all_pass = true;
    for (double s : out.s_grid) {
      KForm a = contactize(pulled, spec, eps, s);
      PositivityReport r = contact_check(a, *spec.source, resolution, tol, threads);
      margins.push_back({s, r.min_margin});
      if (!r.pass) {
        all_pass = false;
        break;
      }
    }
    if (all_pass) {
      out.eps = eps;
      out.margins = std::move(margins);
      return out;
    }
  }
  throw Error(ErrorCode::EpsilonExhausted,
              "contactization found no eps >= 2^-30 (grid too coarse or input "
              "not adjusted)");
}

DeckInvarianceReport deck_invariance_check(const KForm& form,
                                           const BranchedCoverSpec& spec,
                                           const std::vector<int>& resolution,
                                           const Tolerances& tol) {
  DeckInvarianceReport out;
  auto grid = spec.source->sample_grid(resolution, tol);
  for (size_t d = 0; d < spec.deck_maps.size(); ++d) {
    KForm pb = pullback(*spec.source, *spec.source, spec.deck_maps[d], form);
    EvalContext ctx(*spec.source,
                    grid.empty() ? std::vector<double>(spec.source->ncoords(), 0.0)
                                 : grid[0].x,
                    tol);
    for (const auto& p : grid) {
      // the deck image must stay on the source chart; rotations do
      ctx.move_to(p.x);
      TangentFrame f = spec.source->tangent_frame(p, tol);
      const double dev = form_deviation_on_frame(pb, form, ctx, f);
      if (dev > out.max_deviation) {
        out.max_deviation = dev;
        out.argmax_point = p.x;
        out.worst_deck = static_cast<int>(d);
      }
    }
  }
  out.pass = out.max_deviation <= 1e-10;
  return out;
}

BoundaryFillingResult boundary_filling_form(const KForm& omega_target,
                                            const KForm& alpha_target,
                                            const BranchedCoverSpec& spec,
                                            const std::vector<int>& source_resolution,
                                            const std::vector<int>& target_resolution,
                                            const Tolerances& tol, double eps_min,
                                            int threads) {
  BoundaryFillingResult out;
  // downstairs domination (includes the locus through the grid samples)
  try {
    out.downstairs = weak_domination_check(alpha_target, omega_target, *spec.target,
                                           target_resolution, tol, threads);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotClosed) throw;
    throw Error(ErrorCode::DownstairsNotDominated, e.what());
  }
  if (!out.downstairs.report.pass)
    throw Error(ErrorCode::DownstairsNotDominated,
                "downstairs weak domination fails (margin " +
                    std::to_string(out.downstairs.report.min_margin) +
                    (out.downstairs.failed_points
                         ? ", witness tau " + std::to_string(out.downstairs.worst_witness_tau)
                         : "") +
                    ")");
  // filled-binding condition: the tau-polynomial of
  // alpha ^ (omega + tau dalpha)^(n-1) ^ dU ^ dV on locus frames stays
  // positive; here dim V = 2n+1, so the power is (dim-1)/2 - 1
  {
    const int d = spec.target->dim();
    const int n = (d - 1) / 2;
    auto terms = domination_binomial_terms(alpha_target, omega_target, n - 1);
    // the normal pair has the same coordinate indices on both charts for the
    // built-in covers
    KForm area(*spec.target, 2);
    area.set({spec.tube_u, spec.tube_v}, const_field(1.0));
    std::vector<KForm> full;
    for (const auto& t : terms) full.push_back(wedge(t, area));
    for (size_t i = 0; i < spec.downstairs_locus.samples.size(); ++i) {
      EvalContext ctx(*spec.target, spec.downstairs_locus.samples[i], tol);
      std::vector<double> nu(spec.target->ncoords(), 0.0),
          nv(spec.target->ncoords(), 0.0);
      nu[spec.tube_u] = 1.0;
      nv[spec.tube_v] = 1.0;
      std::vector<const std::vector<double>*> v;
      for (const auto& e : spec.downstairs_locus.frames[i].vectors) v.push_back(&e);
      v.push_back(&nu);
      v.push_back(&nv);
      RayPolynomial poly;
      for (const auto& t : full) poly.coeff.push_back(form_on_vectors(t, ctx, v));
      RayVerdict verdict = ray_positive(poly);
      if (!verdict.positive)
        throw Error(ErrorCode::DownstairsNotDominated,
                    "binding-frame polynomial fails on the downstairs locus "
                    "(witness tau " + std::to_string(verdict.witness_tau) + ")");
    }
  }

  // upstairs: joint eps halving of the contactization and the filling term
  KForm pulled = pullback(*spec.source, *spec.target, spec.map, alpha_target);
  KForm omega_pulled = pullback(*spec.source, *spec.target, spec.map, omega_target);
  ScalarField g = cover_cutoff(spec);
  KForm eta(*spec.source, 1);
  eta.set({spec.tube_u},
          product_field(scale_field(g, -1.0),
                        expr_field(spec.source->coords()[spec.tube_v])));
  eta.set({spec.tube_v},
          product_field(g, expr_field(spec.source->coords()[spec.tube_u])));
  KForm deta = exterior_derivative(eta);
  for (double eps = 1.0; eps >= eps_min; eps *= 0.5) {
    KForm alpha_hat = contactize(pulled, spec, eps, 1.0);
    KForm omega_hat = omega_pulled;
    for (int r = 0; r < deta.ncoeffs(); ++r)
      if (!is_zero_field(deta.coeff_by_rank(r)))
        omega_hat.add(comb_unrank(r, spec.source->ncoords(), 2), eps,
                      deta.coeff_by_rank(r));
    WeakDominationReport up;
    try {
      up = weak_domination_check(alpha_hat, omega_hat, *spec.source,
                                 source_resolution, tol, threads);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotClosed) throw;
      continue;
    }
    if (up.report.pass) {
      out.eps_contact = eps;
      out.eps_filling = eps;
      out.omega_hat = std::move(omega_hat);
      out.upstairs = std::move(up);
      return out;
    }
  }
  throw Error(ErrorCode::EpsilonExhausted,
              "no eps >= 2^-30 dominates the contactized pullback");
}

}  // namespace contactlab

#include "contactlab/openbook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "contactlab/parallel.hpp"

namespace contactlab {

ScalarField rho_field(const OpenBookMap& ob) {
  return sqrt_field(sum_field({{1.0, product_field(ob.phi1, ob.phi1)},
                               {1.0, product_field(ob.phi2, ob.phi2)}}));
}

KForm angle_differential(const ChartedManifold& M, const OpenBookMap& ob) {
  // rho^2 d(angle) = phi1 dphi2 - phi2 dphi1
  KForm d1 = differential(M, ob.phi1);
  KForm d2 = differential(M, ob.phi2);
  KForm r(M, 1);
  for (int i = 0; i < M.ncoords(); ++i) {
    r.set({i}, sum_field({{1.0, product_field(ob.phi1, d2.coeff({i}))},
                          {-1.0, product_field(ob.phi2, d1.coeff({i}))}}));
  }
  return r;
}

PositivityReport restriction_contact_margin(const KForm& alpha,
                                            const ChartedManifold& M,
                                            const SubmanifoldSpec& Z,
                                            const Tolerances& tol) {
  PositivityReport r;
  r.condition = "binding restriction";
  r.grid.points = static_cast<long>(Z.samples.size());
  const int dz = Z.frames.empty() ? 0 : static_cast<int>(Z.frames[0].vectors.size());
  if (dz % 2 == 0)
    throw Error(ErrorCode::EvenDimension, "binding frames must be odd-dimensional");
  const int nz = (dz + 1) / 2;
  KForm volz = wedge(alpha, wedge_power(exterior_derivative(alpha), nz - 1));
  double mn = std::numeric_limits<double>::infinity();
  size_t argmin = 0;
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
  return r;
}

ObdReport obd_check(const OpenBookMap& ob, const KForm& alpha,
                    const ChartedManifold& M, const std::vector<int>& resolution,
                    const Tolerances& tol, int threads) {
  ObdReport out;
  const int d = M.dim();
  const int n = (d + 1) / 2;
  auto grid = M.sample_grid(resolution, tol);

  ScalarField rho = rho_field(ob);
  KForm num = angle_differential(M, ob);  // rho^2 d(angle)
  KForm page_form = wedge(num, wedge_power(exterior_derivative(alpha), n - 1));

  // split the grid at the binding tolerance
  std::vector<SamplePoint> near, far;
  {
    EvalContext ctx(M, grid.empty() ? std::vector<double>(M.ncoords(), 0.0)
                                    : grid[0].x,
                    tol);
    for (const auto& p : grid) {
      ctx.move_to(p.x);
      ScalarField r2 = sum_field({{1.0, product_field(ob.phi1, ob.phi1)},
                                  {1.0, product_field(ob.phi2, ob.phi2)}});
      const double rv = std::sqrt(std::max(0.0, field_value(r2, ctx)));
      (rv < ob.r_bind ? near : far).push_back(p);
    }
  }
  out.near_binding_samples = static_cast<long>(near.size());
  out.empty_binding = near.empty();

  // (ii) page condition away from the binding
  out.page = minimize_over_grid(
      M, far, resolution, "page symplectic",
      [&](EvalContext& ctx, const SamplePoint&, const TangentFrame& f) {
        const double r2 = std::pow(field_value(rho, ctx), 2.0);
        return form_on_frame(page_form, ctx, f) / std::max(r2, 1e-300);
      },
      tol, threads);

  // (iii) transversality of (phi1, phi2) at near-binding samples, including
  // the registered binding locus itself when one is known
  double min_gram = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> trans_points;
  for (const auto& p : near) trans_points.push_back(p.x);
  if (ob.has_binding)
    for (const auto& s : ob.binding.samples) trans_points.push_back(s);
  if (trans_points.empty()) min_gram = 0.0;
  {
    KForm d1 = differential(M, ob.phi1);
    KForm d2 = differential(M, ob.phi2);
    EvalContext ctx(M, grid.empty() ? std::vector<double>(M.ncoords(), 0.0)
                                    : grid[0].x,
                    tol);
    for (const auto& px : trans_points) {
      ctx.move_to(px);
      TangentFrame f = M.tangent_frame_at(px, tol);
      // tangent projections of the two gradients in the orthonormal frame
      std::vector<double> a, b;
      for (const auto& e : f.vectors) {
        a.push_back(form_on_vectors(d1, ctx, {&e}));
        b.push_back(form_on_vectors(d2, ctx, {&e}));
      }
      double aa = 0.0, bb = 0.0, ab = 0.0;
      for (size_t i = 0; i < a.size(); ++i) {
        aa += a[i] * a[i];
        bb += b[i] * b[i];
        ab += a[i] * b[i];
      }
      min_gram = std::min(min_gram, aa * bb - ab * ab);
    }
  }
  out.min_transversality = trans_points.empty() ? 0.0 : min_gram;
  if (!trans_points.empty() && min_gram < 1e-6)
    throw Error(ErrorCode::TransversalityFailure,
                "projected dphi1, dphi2 degenerate near the binding (Gram det " +
                    std::to_string(min_gram) + ")");

  // (i) binding restriction on the registered locus
  if (ob.has_binding) {
    out.binding = restriction_contact_margin(alpha, M, ob.binding, tol);
  } else {
    out.binding.condition = "binding restriction";
    out.binding.pass = out.empty_binding;  // vacuous only when there is no binding
    if (!out.empty_binding)
      out.binding.note = "no registered binding family; restriction unchecked";
  }
  if (out.empty_binding) {
    out.note =
        "no sample within the binding tolerance: fibration over S1 reported, "
        "not accepted as an open book";
  }
  out.pass = !out.empty_binding && out.page.pass && out.binding.pass;
  return out;
}

std::vector<std::vector<double>> refine_zero_points(
    const ChartedManifold& M, const std::vector<SamplePoint>& grid,
    const ScalarField& g, const Tolerances& tol, size_t max_points) {
  std::vector<std::vector<double>> out;
  // index the grid by its multi-index for axis-neighbor lookup
  std::map<std::vector<int>, size_t> by_index;
  for (size_t i = 0; i < grid.size(); ++i) by_index[grid[i].grid_index] = i;
  EvalContext ctx(M, grid.empty() ? std::vector<double>(M.ncoords(), 0.0)
                                  : grid[0].x,
                  tol);
  std::vector<double> values(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    ctx.move_to(grid[i].x);
    values[i] = field_value(g, ctx);
  }
  auto eval_at = [&](const std::vector<double>& x) {
    std::vector<double> y = x;
    if (M.has_level_set()) M.project(y, tol);
    ctx.move_to(y);
    return std::make_pair(field_value(g, ctx), y);
  };
  const int naxes = grid.empty() ? 0 : static_cast<int>(grid[0].grid_index.size());
  for (size_t i = 0; i < grid.size() && out.size() < max_points; ++i) {
    for (int a = 0; a < naxes; ++a) {
      std::vector<int> nb = grid[i].grid_index;
      nb[a] += 1;
      auto it = by_index.find(nb);
      if (it == by_index.end()) continue;
      const size_t j = it->second;
      if (values[i] == 0.0 || values[i] * values[j] > 0.0) continue;
      // bisect the chord (projected back for level sets)
      std::vector<double> lo = grid[i].x, hi = grid[j].x;
      double flo = values[i];
      for (int step = 0; step < 60; ++step) {
        std::vector<double> mid(lo.size());
        for (size_t c = 0; c < lo.size(); ++c) mid[c] = 0.5 * (lo[c] + hi[c]);
        auto [fm, pm] = eval_at(mid);
        if (std::abs(fm) < 1e-11) {
          lo = pm;
          break;
        }
        if (flo * fm <= 0.0) {
          hi = pm;
        } else {
          lo = pm;
          flo = fm;
        }
      }
      out.push_back(lo);
      if (out.size() >= max_points) break;
    }
  }
  return out;
}

FieldsFromObdResult fields_from_obd(const OpenBookMap& ob, const KForm& alpha,
                                    const ChartedManifold& M,
                                    const std::vector<int>& resolution,
                                    double rescale_eps, const Tolerances& tol) {
  ObdReport rep = obd_check(ob, alpha, M, resolution, tol);
  if (!rep.pass)
    throw Error(ErrorCode::NotAdapted, "open book does not support the form: " + rep.note);

  FieldsFromObdResult out;
  // rescale: f == 1 for rho < eps/2, == 1/rho for rho > eps
  ScalarField rho = rho_field(ob);
  ScalarField s = smoothstep_field(0.5 * rescale_eps, rescale_eps, rho);
  ScalarField inv_minus_one =
      sum_field({{1.0, quotient_field(const_field(1.0), rho)}}, -1.0);
  ScalarField f = sum_field({{1.0, product_field(s, inv_minus_one)}}, 1.0);
  out.phi1_resc = product_field(f, ob.phi1);
  out.phi2_resc = product_field(f, ob.phi2);

  auto reeb = make_reeb_solver(alpha);
  out.pair.X = solver_vector_field(
      M, make_hamiltonian_solver(alpha, out.phi1_resc, reeb));
  out.pair.Y = solver_vector_field(
      M, make_hamiltonian_solver(alpha, scale_field(out.phi2_resc, -1.0), reeb));
  out.pair.H1 = out.phi1_resc;
  out.pair.H2 = scale_field(out.phi2_resc, -1.0);

  ScalarField bracket = pairing(alpha, lie_bracket(out.pair.X, out.pair.Y));
  ScalarField aX = pairing(alpha, out.pair.X);
  ScalarField aY = pairing(alpha, out.pair.Y);

  auto grid = M.sample_grid(resolution, tol);
  double worst = -std::numeric_limits<double>::infinity();
  EvalContext ctx(M, grid.empty() ? std::vector<double>(M.ncoords(), 0.0) : grid[0].x,
                  tol);
  for (const auto& p : grid) {
    ctx.move_to(p.x);
    const double br = field_value(bracket, ctx);
    if (br > worst) {
      worst = br;
      out.witness = p.x;
    }
    out.max_contract_residual = std::max(
        out.max_contract_residual,
        std::abs(field_value(aX, ctx) - field_value(out.phi1_resc, ctx)));
    out.max_contract_residual = std::max(
        out.max_contract_residual,
        std::abs(field_value(aY, ctx) + field_value(out.phi2_resc, ctx)));
  }
  out.max_alpha_bracket = worst;
  if (!(worst < -tol.pos))
    throw Error(ErrorCode::TransversalityNotNegative,
                "alpha([X,Y]) = " + std::to_string(worst) + " at a sample");
  return out;
}

ObdFromFieldsResult obd_from_fields(const FieldPair& pair, const KForm& alpha,
                                    const ChartedManifold& M,
                                    const std::vector<int>& resolution,
                                    const Tolerances& tol) {
  ObdFromFieldsResult out;
  auto grid = M.sample_grid(resolution, tol);
  EvalContext ctx(M, grid.empty() ? std::vector<double>(M.ncoords(), 0.0) : grid[0].x,
                  tol);

  // contact-field audit: L_X alpha must be pointwise proportional to alpha
  {
    VectorField R = reeb_vector_field(alpha);
    for (const VectorField* F : {&pair.X, &pair.Y}) {
      KForm lie = lie_derivative_form(*F, alpha);
      ScalarField factor = pairing(lie, R);  // f with L_X alpha = f alpha
      double worst = 0.0;
      for (size_t gi = 0; gi < grid.size(); gi += std::max<size_t>(1, grid.size() / 64)) {
        const auto& p = grid[gi];
        ctx.move_to(p.x);
        TangentFrame fr = M.tangent_frame(p, tol);
        const double fv = field_value(factor, ctx);
        for (const auto& e : fr.vectors) {
          const double lhs = form_on_vectors(lie, ctx, {&e});
          const double rhs = fv * form_on_vectors(alpha, ctx, {&e});
          worst = std::max(worst, std::abs(lhs - rhs));
        }
      }
      if (worst > 1e-6)
        throw Error(ErrorCode::NotContactFields,
                    "L_X alpha deviates from f alpha by " + std::to_string(worst));
    }
  }

  ScalarField bracket = pairing(alpha, lie_bracket(pair.X, pair.Y));
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<double> witness;
  for (const auto& p : grid) {
    ctx.move_to(p.x);
    const double br = field_value(bracket, ctx);
    if (br > worst) {
      worst = br;
      witness = p.x;
    }
  }
  out.max_alpha_bracket = worst;
  if (!(worst < -tol.pos))
    throw Error(ErrorCode::NotTransverse,
                "alpha([X,Y]) = " + std::to_string(worst) + " at a sample point");

  out.recovered.phi1 = pairing(alpha, pair.X);
  out.recovered.phi2 = scale_field(pairing(alpha, pair.Y), -1.0);

  // proof-identity audit near the zero sets of alpha(X_theta)
  out.min_zero_transversality = std::numeric_limits<double>::infinity();
  for (double theta : {0.0, M_PI / 4.0, M_PI / 2.0}) {
    VectorField Xt = add_fields(pair.X, std::cos(theta), pair.Y, std::sin(theta));
    VectorField Yt = add_fields(pair.X, -std::sin(theta), pair.Y, std::cos(theta));
    ScalarField g = pairing(alpha, Xt);
    KForm dg = differential(M, g);
    ScalarField dg_Yt = pairing(dg, Yt);
    auto zeros = refine_zero_points(M, grid, g, tol);
    out.refined_zero_points += static_cast<long>(zeros.size());
    for (const auto& z : zeros) {
      ctx.move_to(z);
      const double lhs = field_value(dg_Yt, ctx);
      const double br = field_value(bracket, ctx);
      out.max_identity_residual =
          std::max(out.max_identity_residual, std::abs(lhs + br));
      out.min_zero_transversality =
          std::min(out.min_zero_transversality, std::abs(lhs));
    }
  }
  if (out.refined_zero_points == 0) out.min_zero_transversality = 0.0;

  // K-estimate distances at three angle pairs (diagnostic only)
  {
    ScalarField g0 = pairing(alpha, pair.X);
    ScalarField g90 = pairing(alpha, pair.Y);
    VectorField X45 = add_fields(pair.X, std::cos(M_PI / 4), pair.Y, std::sin(M_PI / 4));
    VectorField X135 =
        add_fields(pair.X, std::cos(3 * M_PI / 4), pair.Y, std::sin(3 * M_PI / 4));
    ScalarField g45 = pairing(alpha, X45);
    ScalarField g135 = pairing(alpha, X135);
    auto k_set = [&](const ScalarField& a, const ScalarField& b) {
      std::vector<std::vector<double>> pts;
      double scale = 0.0;
      for (const auto& p : grid) {
        ctx.move_to(p.x);
        scale = std::max(scale, std::abs(field_value(a, ctx)));
      }
      const double q = 0.15 * scale;
      for (const auto& p : grid) {
        ctx.move_to(p.x);
        if (std::abs(field_value(a, ctx)) < q && std::abs(field_value(b, ctx)) < q)
          pts.push_back(p.x);
      }
      return pts;
    };
    std::vector<std::vector<std::vector<double>>> sets = {
        k_set(g0, g90), k_set(g45, g135), k_set(g90, g0)};
    auto hausdorff = [&](const auto& A, const auto& B) {
      if (A.empty() || B.empty()) return std::numeric_limits<double>::infinity();
      double h = 0.0;
      for (const auto& a : A) {
        double mn = std::numeric_limits<double>::infinity();
        for (const auto& b : B) mn = std::min(mn, M.distance(a, b));
        h = std::max(h, mn);
      }
      for (const auto& b : B) {
        double mn = std::numeric_limits<double>::infinity();
        for (const auto& a : A) mn = std::min(mn, M.distance(a, b));
        h = std::max(h, mn);
      }
      return h;
    };
    out.k_set_distances = {hausdorff(sets[0], sets[1]), hausdorff(sets[0], sets[2]),
                           hausdorff(sets[1], sets[2])};
  }
  return out;
}

RescaleResult adapt_rescaling(const KForm& alpha, const OpenBookMap& ob,
                              double tube_radius, const ChartedManifold& M,
                              const std::vector<int>& resolution,
                              const Tolerances& tol, int k_max_pow) {
  const int d = M.dim();
  const int n = (d + 1) / 2;
  auto grid = M.sample_grid(resolution, tol);
  ScalarField rho = rho_field(ob);
  EvalContext scan(M, grid.empty() ? std::vector<double>(M.ncoords(), 0.0) : grid[0].x,
                   tol);

  // hypothesis (i): the map direction matches the tube coordinates
  if (ob.has_tube) {
    for (size_t oi = 0; oi < ob.tube.offsets.size(); ++oi) {
      const auto& z = ob.tube.offsets[oi];
      const double zn = std::hypot(z[0], z[1]);
      if (zn < 1e-12) continue;
      for (const auto& s : ob.tube.samples[oi]) {
        scan.move_to(s);
        const double p1 = field_value(ob.phi1, scan);
        const double p2 = field_value(ob.phi2, scan);
        const double pn = std::hypot(p1, p2);
        const double cosang = (p1 * z[0] + p2 * z[1]) / std::max(pn * zn, 1e-300);
        if (cosang < 1.0 - 1e-8)
          throw Error(ErrorCode::HypothesisFailure,
                      "(i) angle map does not match the tube angle");
      }
    }
    // hypothesis (ii): alpha restricted to each K_z is a positive contact form
    for (size_t oi = 0; oi < ob.tube.offsets.size(); ++oi) {
      SubmanifoldSpec Kz;
      Kz.name = "K_z";
      Kz.distance = const_field(0.0);
      Kz.samples = ob.tube.samples[oi];
      Kz.frames = ob.tube.frames[oi];
      PositivityReport r = restriction_contact_margin(alpha, M, Kz, tol);
      if (!r.pass)
        throw Error(ErrorCode::HypothesisFailure,
                    "(ii) restriction to a K_z is not positively contact");
    }
  } else if (ob.has_binding) {
    PositivityReport r = restriction_contact_margin(alpha, M, ob.binding, tol);
    if (!r.pass)
      throw Error(ErrorCode::HypothesisFailure,
                  "(ii) restriction to the binding is not positively contact");
  }

  // hypothesis (iii): page condition outside the tube for the unscaled form
  KForm num = angle_differential(M, ob);
  KForm page0 = wedge(num, wedge_power(exterior_derivative(alpha), n - 1));
  std::vector<SamplePoint> outside, checkable;
  for (const auto& p : grid) {
    scan.move_to(p.x);
    const double rv = field_value(rho, scan);
    if (rv >= tube_radius) outside.push_back(p);
    if (rv >= ob.r_bind) checkable.push_back(p);
  }
  RescaleResult out;
  {
    double mn = std::numeric_limits<double>::infinity();
    for (const auto& p : outside) {
      scan.move_to(p.x);
      TangentFrame f = M.tangent_frame(p, tol);
      const double rv = field_value(rho, scan);
      mn = std::min(mn, form_on_frame(page0, scan, f) / (rv * rv));
    }
    out.pre_margin_outside = outside.empty() ? 0.0 : mn;
    if (!outside.empty() && mn <= tol.pos)
      throw Error(ErrorCode::HypothesisFailure,
                  "(iii) page condition fails outside the tube, margin " +
                      std::to_string(mn));
  }

  // k-search: f = 1 + bridge(rho) * exp(-k rho^2)
  ScalarField bridge = sum_field(
      {{-1.0, smoothstep_field(tube_radius * 0.75, tube_radius, rho)}}, 1.0);
  ScalarField rho2 = product_field(rho, rho);
  for (int pw = 0; pw <= k_max_pow; ++pw) {
    const double k = std::pow(2.0, pw);
    ScalarField f = sum_field(
        {{1.0, product_field(bridge, exp_field(scale_field(rho2, -k)))}}, 1.0);
    KForm fa(M, 1);
    for (int i = 0; i < M.ncoords(); ++i)
      if (!is_zero_field(alpha.coeff({i})))
        fa.set({i}, product_field(f, alpha.coeff({i})));
    KForm page = wedge(num, wedge_power(exterior_derivative(fa), n - 1));
    double mn = std::numeric_limits<double>::infinity();
    std::vector<double> arg;
    for (const auto& p : checkable) {
      scan.move_to(p.x);
      TangentFrame fr = M.tangent_frame(p, tol);
      const double rv = field_value(rho, scan);
      const double m = form_on_frame(page, scan, fr) / (rv * rv);
      if (m < mn) {
        mn = m;
        arg = p.x;
      }
    }
    if (mn > tol.pos) {
      out.k = static_cast<int>(k);
      out.rescaled = fa;
      out.page_margin = mn;
      out.page.condition = "page symplectic after rescaling";
      out.page.min_margin = mn;
      out.page.argmin_point = arg;
      out.page.pass = true;
      // outside the tube f = 1, so the margin there matches the input form
      double outside_mn = std::numeric_limits<double>::infinity();
      for (const auto& p : outside) {
        scan.move_to(p.x);
        TangentFrame fr = M.tangent_frame(p, tol);
        const double rv = field_value(rho, scan);
        outside_mn = std::min(outside_mn, form_on_frame(page, scan, fr) / (rv * rv));
      }
      out.post_margin_outside = outside.empty() ? 0.0 : outside_mn;
      return out;
    }
  }
  throw Error(ErrorCode::KSearchExhausted,
              "no k <= 2^" + std::to_string(k_max_pow) + " makes the page condition hold");
}

}  // namespace contactlab

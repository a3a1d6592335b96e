// Acceptance suite: one pass/fail line per criterion, exit code 0 only when
// every criterion holds at its stated tolerance.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "contactlab/scene.hpp"

using namespace contactlab;
using json = nlohmann::json;

namespace {

int failures = 0;

void criterion(int number, const std::string& label,
               const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string error;
  try {
    body();
  } catch (const std::exception& e) {
    error = e.what();
  }
  const double secs =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - t0)
          .count() /
      1000.0;
  if (error.empty()) {
    std::printf("[PASS] criterion %2d: %s (%.1fs)\n", number, label.c_str(), secs);
  } else {
    std::printf("[FAIL] criterion %2d: %s (%.1fs)\n       %s\n", number,
                label.c_str(), secs, error.c_str());
    ++failures;
  }
  std::fflush(stdout);
}

void require(bool cond, const std::string& what) {
  if (!cond) throw std::runtime_error(what);
}

KForm t3_alpha1(const ChartedManifold& t3) {
  KForm a(t3, 1);
  a.set({0}, const_field(1.0));
  a.set({1}, expr_field("cos(theta)"));
  a.set({2}, expr_field("0 - sin(theta)"));
  return a;
}

std::shared_ptr<ChartedManifold> circle_manifold() {
  BoxFactor f;
  f.names = {"theta"};
  f.periodic = {true};
  f.period = {2 * M_PI};
  f.lo = {0.0};
  f.hi = {2 * M_PI};
  return std::make_shared<ChartedManifold>(ChartedManifold::box(std::move(f)));
}

BourgeoisModel s3_bourgeois(double eps) {
  return make_bourgeois(
      std::make_shared<ChartedManifold>(ChartedManifold::sphere3()),
      {{"x1", Expr::parse("0 - y1")},
       {"y1", Expr::parse("x1")},
       {"x2", Expr::parse("0 - y2")},
       {"y2", Expr::parse("x2")}},
      Expr::parse("x2"), Expr::parse("y2"), eps);
}

// --------------------------------------------------------------------------

void criterion1() {
  // d^2 = 0 and Cartan cross-check and AD-vs-FD agreement on random data
  auto t3 = ChartedManifold::torus(3);
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> U(0.0, 2 * M_PI);
  std::uniform_real_distribution<double> C(-1.0, 1.0);

  auto random_coeff = [&]() {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.6f*sin(theta) + %.6f*cos(x) + %.6f*sin(y) + %.6f",
                  C(rng), C(rng), C(rng), C(rng));
    return expr_field(std::string(buf));
  };

  // 1000 random inputs split across the three sub-checks
  for (int i = 0; i < 334; ++i) {
    KForm a(t3, 1);
    a.set({0}, random_coeff());
    a.set({1}, random_coeff());
    a.set({2}, random_coeff());
    KForm dda = exterior_derivative(exterior_derivative(a));
    std::vector<double> p = {U(rng), U(rng), U(rng)};
    EvalContext ctx(t3, p);
    TangentFrame f = t3.tangent_frame_at(p);
    std::vector<const std::vector<double>*> v = {&f.vectors[0], &f.vectors[1],
                                                 &f.vectors[2]};
    require(std::abs(form_on_vectors(dda, ctx, v)) <= 1e-10, "d^2 residual too large");
  }

  FlowOptions fo;
  fo.error_target = 1e-13;
  for (int i = 0; i < 333; ++i) {
    VectorField X = VectorField::zero(t3);
    X.comp[0] = random_coeff();
    X.comp[1] = random_coeff();
    X.comp[2] = random_coeff();
    KForm a(t3, 1);
    a.set({0}, random_coeff());
    a.set({1}, random_coeff());
    a.set({2}, random_coeff());
    KForm lie = lie_derivative_form(X, a);
    std::vector<double> p = {U(rng), U(rng), U(rng)};
    const double h = 1e-4, eps = 1e-5;
    auto flow_pt = [&](std::vector<double> q, double t) {
      VectorField G = X;
      if (t < 0) {
        G = add_fields(X, -1.0, VectorField::zero(t3), 0.0);
        t = -t;
      }
      return integrate_flow(G, q, t, fo).states.back();
    };
    const int dir = i % 3;
    auto pull_eval = [&](double t) {
      auto q = flow_pt(p, t);
      std::vector<double> pp = p, pm = p;
      pp[dir] += eps;
      pm[dir] -= eps;
      auto qp = flow_pt(pp, t);
      auto qm = flow_pt(pm, t);
      std::vector<double> vv(3);
      for (int c = 0; c < 3; ++c) vv[c] = (qp[c] - qm[c]) / (2 * eps);
      EvalContext ctx(t3, q);
      std::vector<const std::vector<double>*> one = {&vv};
      return form_on_vectors(a, ctx, one);
    };
    const double fd = (pull_eval(h) - pull_eval(-h)) / (2 * h);
    EvalContext ctx(t3, p);
    std::vector<double> e(3, 0.0);
    e[dir] = 1.0;
    std::vector<const std::vector<double>*> one = {&e};
    const double exact = form_on_vectors(lie, ctx, one);
    require(std::abs(fd - exact) <= 1e-5 * std::max(1.0, std::abs(exact)),
            "Cartan flow cross-check failed");
  }

  for (int i = 0; i < 333; ++i) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "sin(%.6f*theta + %.6f)*cos(x) + exp(%.6f*cos(y))*%.6f", C(rng),
                  C(rng), C(rng), C(rng));
    Expr ex = Expr::parse(buf);
    std::vector<double> p = {U(rng), U(rng), U(rng)};
    Jet2 j = ex.jet2({"theta", "x", "y"}, p);
    const double h = 1e-5;
    for (int dir = 0; dir < 3; ++dir) {
      auto at = [&](double d) {
        std::vector<double> q = p;
        q[dir] += d;
        std::unordered_map<std::string, double> env = {
            {"theta", q[0]}, {"x", q[1]}, {"y", q[2]}};
        return ex.value(env);
      };
      const double fd = (at(h) - at(-h)) / (2 * h);
      require(std::abs(fd - j.gradient[dir]) <=
                  1e-6 * std::max(1.0, std::abs(j.gradient[dir])),
              "AD vs finite differences drifted");
    }
  }
}

void criterion2() {
  auto t3 = ChartedManifold::torus(3);
  {
    PositivityReport r = contact_check(t3_alpha1(t3), t3, {64, 64, 64});
    require(r.pass, "alpha_1 fails");
    require(std::abs(r.min_margin - 1.0) <= 1e-9, "alpha_1 margin not 1");
  }
  {
    KForm an(t3, 1);
    an.set({0}, const_field(1.0));
    an.set({1}, expr_field("cos(2*theta)"));
    an.set({2}, expr_field("0 - sin(2*theta)"));
    PositivityReport r = contact_check(an, t3, {64, 64, 64});
    require(r.pass, "alpha_2 fails");
    require(std::abs(r.min_margin - 2.0) <= 1e-9, "alpha_n margin not n");
  }
  {
    KForm a = t3_alpha1(t3);
    VectorField R = reeb_vector_field(a);
    for (const auto& p : t3.sample_grid({64, 8, 8})) {
      EvalContext ctx(t3, p.x);
      auto v = vector_values(R, ctx);
      require(std::abs(v[0]) <= 1e-8 &&
                  std::abs(v[1] - std::cos(p.x[0])) <= 1e-8 &&
                  std::abs(v[2] + std::sin(p.x[0])) <= 1e-8,
              "Reeb field of alpha_1 drifted");
    }
  }
}

void criterion3() {
  auto M = std::make_shared<ChartedManifold>(ChartedManifold::sphere3());
  KForm alpha(*M, 1);
  alpha.set({0}, expr_field("0 - y1"));
  alpha.set({1}, expr_field("x1"));
  alpha.set({2}, expr_field("0 - y2"));
  alpha.set({3}, expr_field("x2"));
  OpenBookMap ob;
  ob.phi1 = expr_field("x2");
  ob.phi2 = expr_field("y2");
  ob.r_bind = 0.3;
  ob.binding = named_locus("s3_unknot", *M);
  ob.has_binding = true;
  const std::vector<int> grid = {8, 8, 8};

  FieldsFromObdResult fw = fields_from_obd(ob, alpha, *M, grid, 0.25);
  require(fw.max_alpha_bracket < 0.0, "alpha([X,Y]) not negative at all samples");

  ObdFromFieldsResult bw = obd_from_fields(fw.pair, alpha, *M, grid);
  require(bw.max_identity_residual <= 1e-7,
          "d(alpha(X_theta))(Y_theta) = -alpha([X,Y]) identity residual " +
              std::to_string(bw.max_identity_residual));

  ScalarField rho = rho_field(ob);
  double min_cos = 1.0, min_scale = 1e300;
  for (const auto& p : M->sample_grid(grid)) {
    EvalContext ctx(*M, p.x);
    if (field_value(rho, ctx) < ob.r_bind) continue;
    const double a1 = field_value(bw.recovered.phi1, ctx);
    const double a2 = field_value(bw.recovered.phi2, ctx);
    const double b1 = field_value(fw.phi1_resc, ctx);
    const double b2 = field_value(fw.phi2_resc, ctx);
    const double na = std::hypot(a1, a2), nb = std::hypot(b1, b2);
    min_cos = std::min(min_cos, (a1 * b1 + a2 * b2) / (na * nb));
    min_scale = std::min(min_scale, na / nb);
  }
  require(min_cos >= 1.0 - 1e-8, "recovered map direction error too large");
  require(min_scale > 0.0, "recovered map scale not positive");
}

void criterion4() {
  const std::vector<int> grid = {8, 8, 8, 6, 6};
  for (double eps : {1.0, 0.5, 0.25}) {
    BourgeoisModel m = s3_bourgeois(eps);
    PositivityReport r = contact_check(m.alpha, *m.total, grid);
    require(r.pass, "S3 x T2 form fails at eps " + std::to_string(eps));
  }
  // curvature scaling on a potential with a visible d_nabla part
  BourgeoisModel m = s3_bourgeois(1.0);
  auto norms = [&](double eps) {
    Potential A;
    A.A_x = VectorField::zero(*m.total);
    A.A_y = VectorField::zero(*m.total);
    char b1[64], b2[64];
    std::snprintf(b1, sizeof b1, "%.17g*x2*y1", eps);
    std::snprintf(b2, sizeof b2, "%.17g*(y2 + 0.3*cos(x))*x1", eps);
    A.A_x.comp[0] = expr_field(std::string(b1));   // component along d_x1
    A.A_y.comp[1] = expr_field(std::string(b2));   // component along d_y1
    CurvatureTerms ct = curvature_terms(m, A);
    double dn = 0.0, br = 0.0;
    for (const auto& p : m.total->sample_grid({4, 4, 4, 4, 4})) {
      EvalContext ctx(*m.total, p.x);
      for (double c : vector_values(ct.dnabla, ctx)) dn = std::max(dn, std::abs(c));
      for (double c : vector_values(ct.bracket, ctx)) br = std::max(br, std::abs(c));
    }
    return std::make_pair(dn, br);
  };
  auto [dn1, br1] = norms(1.0);
  auto [dn2, br2] = norms(0.5);
  auto [dn4, br4] = norms(0.25);
  require(std::abs(dn1 / dn2 - 2.0) <= 0.02 && std::abs(dn2 / dn4 - 2.0) <= 0.02,
          "d_nabla(eps A) does not scale linearly");
  require(std::abs(br1 / br2 - 4.0) <= 0.04 && std::abs(br2 / br4 - 4.0) <= 0.04,
          "[eps A, eps A] does not scale quadratically");
}

void criterion5() {
  BourgeoisModel m =
      make_bourgeois(circle_manifold(), {{"theta", Expr::parse("1")}},
                     Expr::parse("cos(theta)"), Expr::parse("sin(theta)"), 1.0);
  Potential A;
  A.A_x = VectorField::zero(*m.total);
  A.A_y = VectorField::zero(*m.total);
  A.A_x.comp[0] = expr_field("0 - cos(theta) + cos(x + y)*cos(theta)");
  A.A_y.comp[0] = expr_field("sin(theta) + cos(x + y)*cos(theta)");
  AveragedPotential avg = average_potential(m, A, 32, {16, 4, 4});
  require(avg.max_identity_residual <= 1e-8,
          "averaging identity residual " + std::to_string(avg.max_identity_residual));
}

void criterion6() {
  BourgeoisModel m = s3_bourgeois(1.0);
  KForm omega_base(*m.base, 2), omega_total(*m.total, 2);
  omega_base.set({0, 1}, const_field(2.0));
  omega_base.set({2, 3}, const_field(2.0));
  omega_total.set({0, 1}, const_field(2.0));
  omega_total.set({2, 3}, const_field(2.0));
  WeakFillingResult r = bourgeois_weak_filling_check(m, omega_base, omega_total,
                                                     {6, 6, 6}, {6, 6, 6, 4, 4});
  require(r.eps >= std::pow(2.0, -20), "weak filling eps below 2^-20");
  require(r.total.report.pass, "product weak domination fails");
  require(r.total.failed_points == 0, "some pointwise polynomial not ray-positive");

  std::mt19937 rng(424242);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_int_distribution<int> D(0, 6);
  for (int i = 0; i < 1000; ++i) {
    RayPolynomial p;
    const int deg = D(rng);
    for (int k = 0; k <= deg; ++k) p.coeff.push_back(U(rng));
    bool oracle, exact;
    try {
      oracle = ray_positive_dense_oracle(p);
      exact = ray_positive(p).positive;
    } catch (const Error&) {
      continue;
    }
    require(oracle == exact, "ray_positive disagrees with the dense oracle");
  }
}

void criterion7() {
  for (int k : {2, 5}) {
    BranchedCoverSpec spec = local_model_cover(k, 1.0);
    KForm alpha(*spec.target, 1);
    alpha.set({0}, const_field(1.0));
    alpha.set({1}, expr_field("0 - V"));
    alpha.set({2}, expr_field("U"));
    const std::vector<int> grid = {8, 9, 9};
    KForm pulled = pullback(*spec.source, *spec.target, spec.map, alpha);
    EpsilonSearchResult es = epsilon_search(pulled, spec, grid);
    require(es.eps > 0.0, "epsilon search failed at k=" + std::to_string(k));

    PositivityReport s0 = contact_check(pulled, *spec.source, grid);
    require(s0.min_margin == 0.0, "s=0 margin not exactly 0 on the binding");

    KForm a = contactize(pulled, spec, es.eps, 1.0);
    DeckInvarianceReport deck = deck_invariance_check(a, spec, {5, 7, 7});
    require(deck.max_deviation <= 1e-12,
            "deck deviation " + std::to_string(deck.max_deviation));

    // r = 0 margin linear in s to 1e-8 relative error
    std::vector<double> core(spec.source->ncoords(), 0.0);
    TangentFrame f = spec.source->tangent_frame_at(core);
    auto margin_at_core = [&](double s) {
      KForm as = contactize(pulled, spec, es.eps, s);
      KForm vol = wedge(as, exterior_derivative(as));
      EvalContext ctx(*spec.source, core);
      return form_on_frame(vol, ctx, f);
    };
    const double m1 = margin_at_core(0.25), m2 = margin_at_core(0.5),
                 m4 = margin_at_core(1.0);
    require(std::abs(m2 / m1 - 2.0) <= 1e-8 && std::abs(m4 / m2 - 2.0) <= 1e-8,
            "core margin not linear in s");
  }
}

void criterion8() {
  ReebNormalFormData nf{Expr::parse("2 - r^2"), Expr::parse("r^2"), 1.0, 1};
  NormalFormComparison cmp = predicted_reeb_bourgeois(nf, {8, 9, 9, 4, 4}, {}, 1e-6);
  require(cmp.pass, "prediction deviates");
  require(cmp.max_torus_component_at_binding <= 1e-8,
          "torus components do not vanish at r=0");
  require(cmp.max_outer_region_error <= 1e-6,
          "outer region differs from (cos phi, -sin phi)");
}

void criterion9() {
  // tube Bourgeois model
  {
    ReebNormalFormData nf{Expr::parse("2 - r^2"), Expr::parse("r^2"), 1.0, 1};
    TubeModel tm = build_tube_model(nf);
    VectorField R = reeb_vector_field(tm.alpha);
    const ChartedManifold& P = *tm.tube_torus;
    OrbitSearchOptions opt;
    opt.t_max = 30.0;
    std::vector<std::vector<double>> seeds;
    seeds.push_back({0.0, 0.0, 0.0, 0.0, 0.0});
    seeds.push_back({1.0, 0.0, 0.0, 2.0, 1.0});
    seeds.push_back({0.5, 0.3, 0.1, 0.5, 0.5});
    seeds.push_back({2.0, 0.0, 0.45, 1.0, 2.0});
    seeds.push_back({4.0, 0.2, -0.2, 3.0, 0.1});
    auto records = closed_orbit_search(R, seeds, opt);
    ScalarField rdist = sqrt_field(expr_field("u^2 + v^2"));
    ContractibleAuditReport audit = contractible_orbit_audit(
        records, P, rdist, {P.coord_index("x"), P.coord_index("y")});
    require(audit.zero_winding_orbits >= 1, "no zero-winding orbit detected");
    require(audit.max_binding_distance <= 1e-4, "orbit off the binding");
    require(audit.max_torus_spread <= 1e-6, "orbit moves in the torus directions");
  }
  // T3: no zero-winding closed orbit among 64 seeds, T_max = 100
  {
    auto t3 = ChartedManifold::torus(3);
    KForm a = t3_alpha1(t3);
    VectorField R = reeb_vector_field(a);
    OrbitSearchOptions opt;
    opt.t_max = 100.0;
    std::vector<std::vector<double>> seeds;
    for (int i = 0; i < 64; ++i) seeds.push_back({2 * M_PI * i / 64.0, 0.0, 0.0});
    auto records = closed_orbit_search(R, seeds, opt);
    for (const auto& rec : records) {
      bool zero = true;
      for (int w : rec.winding)
        if (w) zero = false;
      require(!zero, "found a zero-winding closed orbit on T3");
    }
  }
}

void criterion10() {
  const std::string dir = CONTACTLAB_SCENES_DIR;
  const char* scenes[] = {"t3_alpha1",      "t3_alpha_n", "t3_dtheta",
                          "s3_std",         "s3_disk_obd", "s3_bourgeois",
                          "tube_bourgeois", "cover_local_k2", "cover_local_k5",
                          "cover_s3_k2"};
  for (const char* name : scenes) {
    Scene scene = parse_scene_file(dir + "/" + name + ".scene");
    const std::string cmd = scene.default_command;
    RunOverrides one, eight;
    one.threads = 1;
    eight.threads = 8;
    RunResult a = run_scene(scene, cmd, one);
    RunResult b = run_scene(scene, cmd, eight);
    RunResult c = run_scene(scene, cmd, one);
    auto strip = [](const std::string& rep) {
      json j = json::parse(rep);
      j.erase("wall_ms");
      return j.dump();
    };
    require(strip(a.report_json) == strip(b.report_json),
            std::string(name) + ": 1-thread vs 8-thread reports differ");
    require(strip(a.report_json) == strip(c.report_json),
            std::string(name) + ": repeated runs differ");
    static const std::string schema = [] {
      std::ifstream in(CONTACTLAB_SCHEMA);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }();
    const std::string err = validate_report_against_schema(a.report_json, schema);
    require(err.empty(), std::string(name) + ": schema violation " + err);
  }
}

}  // namespace

int main() {
  criterion(1, "calculus soundness (d^2, Cartan, AD vs FD)", criterion1);
  criterion(2, "T3 anchors: margins 1 and n, Reeb closed form", criterion2);
  criterion(3, "S3 open book duality round trip", criterion3);
  criterion(4, "Bourgeois form on S3 x T2 and curvature scaling", criterion4);
  criterion(5, "averaging identity at Q = 32", criterion5);
  criterion(6, "weak filling of S3 x T2 and ray-positivity oracle", criterion6);
  criterion(7, "branched covering contactization (k = 2, 5)", criterion7);
  criterion(8, "Reeb normal form on the tube model", criterion8);
  criterion(9, "orbit audits: tube binding and T3 windings", criterion9);
  criterion(10, "byte-identical reports across worker counts", criterion10);
  if (failures == 0) {
    std::printf("all 10 acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", failures);
  return 1;
}

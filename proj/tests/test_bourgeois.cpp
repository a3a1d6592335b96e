#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "contactlab/bourgeois.hpp"

using namespace contactlab;

namespace {

std::shared_ptr<ChartedManifold> circle() {
  BoxFactor f;
  f.names = {"theta"};
  f.periodic = {true};
  f.period = {2 * M_PI};
  f.lo = {0.0};
  f.hi = {2 * M_PI};
  return std::make_shared<ChartedManifold>(ChartedManifold::box(std::move(f)));
}

BourgeoisModel t3_model(double eps = 1.0) {
  return make_bourgeois(circle(), {{"theta", Expr::parse("1")}},
                        Expr::parse("cos(theta)"), Expr::parse("sin(theta)"), eps);
}

std::shared_ptr<ChartedManifold> sphere() {
  return std::make_shared<ChartedManifold>(ChartedManifold::sphere3());
}

BourgeoisModel s3_model(double eps = 1.0) {
  return make_bourgeois(sphere(),
                        {{"x1", Expr::parse("0 - y1")},
                         {"y1", Expr::parse("x1")},
                         {"x2", Expr::parse("0 - y2")},
                         {"y2", Expr::parse("x2")}},
                        Expr::parse("x2"), Expr::parse("y2"), eps);
}

const std::vector<int> kT3Grid = {8, 6, 6};
const std::vector<int> kS3Grid = {5, 5, 5, 4, 4};

}  // namespace

TEST_CASE("the T3 Bourgeois form is alpha_1 with margin 1") {
  BourgeoisModel m = t3_model();
  BourgeoisFormReport r = bourgeois_form(m, {8}, kT3Grid);
  CHECK(r.pass);
  CHECK(r.contact.min_margin == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(!r.domain_condition_checked);  // n = 1: vacuous
}

TEST_CASE("potential of the T3 model: splitting solve vs hand values") {
  BourgeoisModel m = t3_model();
  Potential A = potential_of(m, m.alpha, kT3Grid);
  for (const auto& p : m.total->sample_grid(kT3Grid)) {
    EvalContext ctx(*m.total, p.x);
    auto ax = vector_values(A.A_x, ctx);
    auto ay = vector_values(A.A_y, ctx);
    CHECK(ax[0] == doctest::Approx(-std::cos(p.x[0])).epsilon(1e-10));
    CHECK(ax[1] == doctest::Approx(0.0));
    CHECK(ax[2] == doctest::Approx(0.0));
    CHECK(ay[0] == doctest::Approx(std::sin(p.x[0])).epsilon(1e-10));
  }
}

TEST_CASE("potential with no torus terms vanishes") {
  BourgeoisModel m = t3_model();
  Potential A = potential_of(m, m.beta_total, {4, 4, 4});
  for (const auto& p : m.total->sample_grid({4, 4, 4})) {
    EvalContext ctx(*m.total, p.x);
    for (double c : vector_values(A.A_x, ctx)) CHECK(std::abs(c) <= 1e-12);
    for (double c : vector_values(A.A_y, ctx)) CHECK(std::abs(c) <= 1e-12);
  }
}

TEST_CASE("the two potential characterizations agree") {
  BourgeoisModel m = t3_model();
  Potential split = potential_of(m, m.alpha, {4, 4, 4});
  Potential ham = potential_hamiltonian(m);
  CHECK(potential_cross_check(m, split, ham, {6, 4, 4}) <= 1e-7);
}

TEST_CASE("curvature terms of the T3 potential") {
  BourgeoisModel m = t3_model();
  Potential A = potential_of(m, m.alpha, {4, 4, 4});
  CurvatureTerms ct = curvature_terms(m, A);
  for (const auto& p : m.total->sample_grid({6, 4, 4})) {
    EvalContext ctx(*m.total, p.x);
    for (double c : vector_values(ct.dnabla, ctx)) CHECK(std::abs(c) <= 1e-10);
    auto br = vector_values(ct.bracket, ctx);
    CHECK(br[0] == doctest::Approx(-1.0).epsilon(1e-9));  // [A_x, A_y] = -d_theta
  }
}

TEST_CASE("bourgeois criterion classifies the three cases") {
  BourgeoisModel m = t3_model();
  {
    Potential A = potential_of(m, m.alpha, {4, 4, 4});
    BourgeoisCriterion c = bourgeois_criterion(m, A, {6, 4, 4});
    CHECK(c.bourgeois);
    CHECK(c.lerman_contact);
    CHECK(c.max_beta_bracket == doctest::Approx(-1.0).epsilon(1e-9));
  }
  {
    Potential zero;
    zero.A_x = VectorField::zero(*m.total);
    zero.A_y = VectorField::zero(*m.total);
    BourgeoisCriterion c = bourgeois_criterion(m, zero, {4, 4, 4});
    CHECK(!c.bourgeois);
    CHECK(!c.lerman_contact);
  }
  {
    // perturb A_y by cos(x) d_theta: d_nabla A = -sin(x) d_theta, nonzero;
    // with a small amplitude the combined field stays negative (Lerman case)
    Potential A;
    A.A_x = VectorField::zero(*m.total);
    A.A_y = VectorField::zero(*m.total);
    A.A_x.comp[0] = expr_field("0 - cos(theta)");
    A.A_y.comp[0] = expr_field("sin(theta) + 0.2*cos(x)");
    BourgeoisCriterion c = bourgeois_criterion(m, A, {6, 6, 4});
    CHECK(!c.bourgeois);       // d_nabla A != 0
    CHECK(c.lerman_contact);   // but the sum is still negative
    CHECK(c.max_dnabla > 0.1);
  }
}

TEST_CASE("hand derivative of the perturbed potential") {
  BourgeoisModel m = t3_model();
  Potential A;
  A.A_x = VectorField::zero(*m.total);
  A.A_y = VectorField::zero(*m.total);
  A.A_x.comp[0] = expr_field("0 - cos(theta)");
  A.A_y.comp[0] = expr_field("sin(theta) + cos(x)");
  CurvatureTerms ct = curvature_terms(m, A);
  for (const auto& p : m.total->sample_grid({4, 6, 4})) {
    EvalContext ctx(*m.total, p.x);
    auto dn = vector_values(ct.dnabla, ctx);
    CHECK(dn[0] == doctest::Approx(-std::sin(p.x[1])).epsilon(1e-10));
  }
}

TEST_CASE("averaging: constants are fixed points, oscillations vanish") {
  BourgeoisModel m = t3_model();
  {
    Potential A = potential_of(m, m.alpha, {4, 4, 4});
    AveragedPotential avg = average_potential(m, A, 8, {5, 4, 4});
    CHECK(avg.max_identity_residual <= 1e-8);
    CHECK(avg.criterion.bourgeois);
    for (const auto& p : m.total->sample_grid({5, 4, 4})) {
      EvalContext ctx(*m.total, p.x);
      auto a = vector_values(A.A_x, ctx);
      auto b = vector_values(avg.averaged.A_x, ctx);
      CHECK(std::abs(a[0] - b[0]) <= 1e-12);
    }
  }
  {
    // A_x = X0 + cos(x+y) W, A_y = Y0 + cos(x+y) W with W = cos(theta) d_theta
    Potential A;
    A.A_x = VectorField::zero(*m.total);
    A.A_y = VectorField::zero(*m.total);
    A.A_x.comp[0] = expr_field("0 - cos(theta) + cos(x + y)*cos(theta)");
    A.A_y.comp[0] = expr_field("sin(theta) + cos(x + y)*cos(theta)");
    AveragedPotential avg = average_potential(m, A, 32, {6, 4, 4});
    CHECK(avg.max_identity_residual <= 1e-10);
    for (const auto& p : m.total->sample_grid({6, 4, 4})) {
      EvalContext ctx(*m.total, p.x);
      auto ax = vector_values(avg.averaged.A_x, ctx);
      auto ay = vector_values(avg.averaged.A_y, ctx);
      CHECK(ax[0] == doctest::Approx(-std::cos(p.x[0])).epsilon(1e-12));
      CHECK(ay[0] == doctest::Approx(std::sin(p.x[0])).epsilon(1e-12));
    }
  }
  {
    // d_nabla A != 0: the averaging identity is not claimed
    Potential A;
    A.A_x = VectorField::zero(*m.total);
    A.A_y = VectorField::zero(*m.total);
    A.A_x.comp[0] = expr_field("0 - cos(theta)");
    A.A_y.comp[0] = expr_field("sin(theta) + cos(x)");
    try {
      average_potential(m, A, 8, {4, 4, 4});
      FAIL("expected NotClosedPotential");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotClosedPotential);
    }
  }
}

TEST_CASE("S3 Bourgeois form: contact for eps in {1, 1/2, 1/4}") {
  for (double eps : {1.0, 0.5, 0.25}) {
    BourgeoisModel m = s3_model(eps);
    PositivityReport r = contact_check(m.alpha, *m.total, kS3Grid);
    CHECK(r.pass);
  }
}

TEST_CASE("S3 potential routes agree and the domain condition holds") {
  BourgeoisModel m = s3_model();
  BourgeoisFormReport fr = bourgeois_form(m, {5, 5, 5}, kS3Grid);
  CHECK(fr.pass);
  CHECK(fr.domain_condition_checked);
  CHECK(fr.domain_condition_min >= -1e-9);
  Potential split = potential_of(m, m.alpha, {4, 4, 4, 3, 3});
  Potential ham = potential_hamiltonian(m);
  CHECK(potential_cross_check(m, split, ham, {4, 4, 4, 3, 3}) <= 1e-7);
}

TEST_CASE("curvature scaling in eps: linear and quadratic") {
  BourgeoisModel m = t3_model();
  // a potential with nonzero d_nabla A so the linear term is visible
  auto scaled = [&](double eps) {
    Potential A;
    A.A_x = VectorField::zero(*m.total);
    A.A_y = VectorField::zero(*m.total);
    char bx[96], by[96];
    std::snprintf(bx, sizeof bx, "%.17g*(0 - cos(theta))", eps);
    std::snprintf(by, sizeof by, "%.17g*(sin(theta) + 0.3*cos(x))", eps);
    A.A_x.comp[0] = expr_field(bx);
    A.A_y.comp[0] = expr_field(by);
    return A;
  };
  auto norms = [&](double eps) {
    Potential A = scaled(eps);
    CurvatureTerms ct = curvature_terms(m, A);
    double dn = 0.0, br = 0.0;
    for (const auto& p : m.total->sample_grid({6, 6, 4})) {
      EvalContext ctx(*m.total, p.x);
      for (double c : vector_values(ct.dnabla, ctx)) dn = std::max(dn, std::abs(c));
      for (double c : vector_values(ct.bracket, ctx)) br = std::max(br, std::abs(c));
    }
    return std::make_pair(dn, br);
  };
  auto [dn1, br1] = norms(1.0);
  auto [dn2, br2] = norms(0.5);
  auto [dn4, br4] = norms(0.25);
  CHECK(dn1 / dn2 == doctest::Approx(2.0).epsilon(0.01));
  CHECK(dn2 / dn4 == doctest::Approx(2.0).epsilon(0.01));
  CHECK(br1 / br2 == doctest::Approx(4.0).epsilon(0.01));
  CHECK(br2 / br4 == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("symmetric contact deformation path of ker(dtheta) on T3") {
  // alpha_t = dtheta + t cos(theta) dx - t sin(theta) dy has wedge t^2
  // dtheta^dx^dy; the variant that scales only the dx term is not used as a
  // deformation anchor because its t -> 0 limit does not keep ker(dtheta).
  auto t3 = ChartedManifold::torus(3);
  for (double t : {0.25, 0.5, 1.0}) {
    char bx[48], by[48];
    std::snprintf(bx, sizeof bx, "%.17g*cos(theta)", t);
    std::snprintf(by, sizeof by, "0 - %.17g*sin(theta)", t);
    KForm at(t3, 1);
    at.set({0}, const_field(1.0));
    at.set({1}, expr_field(std::string(bx)));
    at.set({2}, expr_field(std::string(by)));
    PositivityReport r = contact_check(at, t3, {6, 4, 4});
    CHECK(r.pass);
    CHECK(r.min_margin == doctest::Approx(t * t).epsilon(1e-12));
  }
}

TEST_CASE("weak filling: the degenerate n = 1 branch on T3") {
  BourgeoisModel m = t3_model();
  KForm omega_base(*m.base, 2);   // the zero 2-form on S^1
  KForm omega_total(*m.total, 2);
  WeakFillingResult r =
      bourgeois_weak_filling_check(m, omega_base, omega_total, {8}, {6, 4, 4});
  CHECK(r.eps > 0.0);
  CHECK(r.total.report.pass);
}

TEST_CASE("weak filling fails when the base is not dominated") {
  BourgeoisModel m = s3_model();
  KForm omega_base(*m.base, 2), omega_total(*m.total, 2);
  // -d(alpha_std): contact margin enters with the wrong sign at tau -> infinity
  omega_base.set({0, 1}, const_field(-2.0));
  omega_base.set({2, 3}, const_field(-2.0));
  omega_total.set({0, 1}, const_field(-2.0));
  omega_total.set({2, 3}, const_field(-2.0));
  try {
    bourgeois_weak_filling_check(m, omega_base, omega_total, {4, 4, 4}, {4, 4, 4, 3, 3});
    FAIL("expected BaseNotDominated");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BaseNotDominated);
  }
}

TEST_CASE("fiber mismatch is detected") {
  BourgeoisModel m = t3_model();
  KForm wrong = m.alpha;
  wrong.set({0}, expr_field("1 + 0.5*sin(x)"));  // fiber restriction differs per (x,y)
  // still proportional pointwise to dtheta on the fiber, so scale the beta
  // comparison away instead: change the fiber direction
  wrong = KForm(*m.total, 1);
  wrong.set({0}, const_field(1.0));
  wrong.set({1}, expr_field("cos(theta)"));
  wrong.set({2}, expr_field("0 - sin(theta)"));
  // fiberwise kernel of this form on a 1-dimensional fiber is {0}; to get a
  // genuine mismatch use a beta with a different fiber kernel sign
  BourgeoisModel m2 = make_bourgeois(circle(), {{"theta", Expr::parse("0 - 1")}},
                                     Expr::parse("cos(theta)"),
                                     Expr::parse("sin(theta)"), 1.0);
  try {
    potential_of(m2, wrong, {4, 4, 4});
    FAIL("expected FiberMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FiberMismatch);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "contactlab/calculus.hpp"
#include "contactlab/reeb.hpp"

using namespace contactlab;

namespace {

KForm alpha1(const ChartedManifold& t3) {
  KForm a(t3, 1);
  a.set({0}, const_field(1.0));
  a.set({1}, expr_field("cos(theta)"));
  a.set({2}, expr_field("0 - sin(theta)"));
  return a;
}

ChartedManifold plane_box(double lo = -1.0, double hi = 1.0) {
  BoxFactor f;
  f.names = {"x", "y"};
  f.periodic = {false, false};
  f.period = {0, 0};
  f.lo = {lo, lo};
  f.hi = {hi, hi};
  return ChartedManifold::box(std::move(f));
}

std::vector<double> basis(int n, int i) {
  std::vector<double> v(n, 0.0);
  v[i] = 1.0;
  return v;
}

double eval_on(const KForm& a, const ChartedManifold& M,
               const std::vector<double>& at,
               const std::vector<std::vector<double>>& vecs) {
  EvalContext ctx(M, at);
  std::vector<const std::vector<double>*> ptrs;
  for (const auto& v : vecs) ptrs.push_back(&v);
  return form_on_vectors(a, ctx, ptrs);
}

}  // namespace

TEST_CASE("wedge: basis pairing, antisymmetry, hand expansion") {
  auto t3 = ChartedManifold::torus(3);
  KForm dtheta(t3, 1), dx(t3, 1), dy(t3, 1);
  dtheta.set({0}, const_field(1.0));
  dx.set({1}, const_field(1.0));
  dy.set({2}, const_field(1.0));

  KForm w = wedge(dtheta, dx);
  CHECK(eval_on(w, t3, {0.3, 0.1, 0.2}, {basis(3, 0), basis(3, 1)}) ==
        doctest::Approx(1.0));

  // a ^ a = 0 for any 1-form, 100 random points
  KForm a(t3, 1);
  a.set({0}, expr_field("sin(x) + cos(y)"));
  a.set({1}, expr_field("cos(theta)*cos(y)"));
  a.set({2}, expr_field("sin(theta)"));
  KForm aa = wedge(a, a);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.0, 2 * M_PI);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p = {U(rng), U(rng), U(rng)};
    for (int r = 0; r < 3; ++r) {
      auto idx = comb_unrank(r, 3, 2);
      CHECK(std::abs(eval_on(aa, t3, p, {basis(3, idx[0]), basis(3, idx[1])})) <
            1e-14);
    }
  }

  // (dtheta + cos(theta) dx) ^ (dtheta ^ dy) on the frame at theta = 0 is -1
  KForm b(t3, 1);
  b.set({0}, const_field(1.0));
  b.set({1}, expr_field("cos(theta)"));
  KForm c = wedge(b, wedge(dtheta, dy));
  CHECK(eval_on(c, t3, {0.0, 0.0, 0.0}, {basis(3, 0), basis(3, 1), basis(3, 2)}) ==
        doctest::Approx(-1.0));
}

TEST_CASE("graded commutativity on random forms") {
  auto t3 = ChartedManifold::torus(3);
  KForm a(t3, 1), b(t3, 1);
  a.set({0}, expr_field("sin(x)"));
  a.set({1}, expr_field("cos(y)"));
  b.set({1}, expr_field("cos(theta)"));
  b.set({2}, expr_field("sin(theta)*sin(x)"));
  KForm ab = wedge(a, b), ba = wedge(b, a);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(0.0, 2 * M_PI);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p = {U(rng), U(rng), U(rng)};
    for (int r = 0; r < 3; ++r) {
      auto idx = comb_unrank(r, 3, 2);
      const double vab = eval_on(ab, t3, p, {basis(3, idx[0]), basis(3, idx[1])});
      const double vba = eval_on(ba, t3, p, {basis(3, idx[0]), basis(3, idx[1])});
      CHECK(vab == doctest::Approx(-vba).epsilon(1e-12));
    }
  }
}

TEST_CASE("exterior derivative: hand values and alpha1 volume") {
  auto t3 = ChartedManifold::torus(3);
  KForm dtheta(t3, 1);
  dtheta.set({0}, const_field(1.0));
  KForm dd = exterior_derivative(dtheta);
  CHECK(eval_on(dd, t3, {1.0, 2.0, 3.0}, {basis(3, 0), basis(3, 1)}) ==
        doctest::Approx(0.0));

  KForm cdx(t3, 1);
  cdx.set({1}, expr_field("cos(theta)"));
  KForm dcdx = exterior_derivative(cdx);
  CHECK(eval_on(dcdx, t3, {M_PI / 2, 0.0, 0.0}, {basis(3, 0), basis(3, 1)}) ==
        doctest::Approx(-1.0));

  KForm a1 = alpha1(t3);
  KForm vol = wedge(a1, exterior_derivative(a1));
  for (const auto& p : t3.sample_grid({6, 6, 6})) {
    CHECK(eval_on(vol, t3, p.x, {basis(3, 0), basis(3, 1), basis(3, 2)}) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("d^2 = 0 on built-in forms") {
  auto t3 = ChartedManifold::torus(3);
  KForm a1 = alpha1(t3);
  KForm dda = exterior_derivative(exterior_derivative(a1));
  for (const auto& p : t3.sample_grid({5, 5, 5})) {
    EvalContext ctx(t3, p.x);
    TangentFrame f = t3.tangent_frame(p);
    for (int r = 0; r < 1; ++r) {
      std::vector<const std::vector<double>*> v = {&f.vectors[0], &f.vectors[1],
                                                   &f.vectors[2]};
      CHECK(std::abs(form_on_vectors(dda, ctx, v)) <= 1e-10);
    }
  }
  auto s3 = ChartedManifold::sphere3();
  KForm std_form(s3, 1);
  std_form.set({0}, expr_field("0 - y1"));
  std_form.set({1}, expr_field("x1"));
  std_form.set({2}, expr_field("0 - y2"));
  std_form.set({3}, expr_field("x2"));
  KForm dd2 = exterior_derivative(exterior_derivative(std_form));
  for (const auto& p : s3.sample_grid({4, 4, 4})) {
    EvalContext ctx(s3, p.x);
    TangentFrame f = s3.tangent_frame(p);
    std::vector<const std::vector<double>*> v = {&f.vectors[0], &f.vectors[1],
                                                 &f.vectors[2]};
    CHECK(std::abs(form_on_vectors(dd2, ctx, v)) <= 1e-10);
  }
}

TEST_CASE("Leibniz rule for d at sample points") {
  auto t3 = ChartedManifold::torus(3);
  KForm a(t3, 1), b(t3, 1);
  a.set({0}, expr_field("sin(x)"));
  a.set({2}, expr_field("cos(theta)"));
  b.set({1}, expr_field("sin(theta)*cos(y)"));
  KForm lhs = exterior_derivative(wedge(a, b));
  KForm rhs1 = wedge(exterior_derivative(a), b);
  KForm rhs2 = wedge(a, exterior_derivative(b));
  for (const auto& p : t3.sample_grid({5, 5, 5})) {
    const double l =
        eval_on(lhs, t3, p.x, {basis(3, 0), basis(3, 1), basis(3, 2)});
    const double r =
        eval_on(rhs1, t3, p.x, {basis(3, 0), basis(3, 1), basis(3, 2)}) -
        eval_on(rhs2, t3, p.x, {basis(3, 0), basis(3, 1), basis(3, 2)});
    CHECK(l == doctest::Approx(r).epsilon(1e-11));
  }
}

TEST_CASE("interior product: basis, nilpotency, hand expansion") {
  auto t3 = ChartedManifold::torus(3);
  KForm dtheta(t3, 1), dx(t3, 1), dy(t3, 1);
  dtheta.set({0}, const_field(1.0));
  dx.set({1}, const_field(1.0));
  dy.set({2}, const_field(1.0));

  VectorField dth = VectorField::zero(t3);
  dth.comp[0] = const_field(1.0);
  KForm w = wedge(dtheta, dx);
  KForm iw = interior_product(dth, w);
  CHECK(eval_on(iw, t3, {0.5, 0.5, 0.5}, {basis(3, 1)}) == doctest::Approx(1.0));

  // i_X i_X a = 0
  VectorField X = VectorField::zero(t3);
  X.comp[0] = expr_field("sin(x)");
  X.comp[1] = expr_field("cos(theta)");
  X.comp[2] = const_field(0.7);
  KForm vol = wedge(wedge(dtheta, dx), dy);
  KForm ii = interior_product(X, interior_product(X, vol));
  for (const auto& p : t3.sample_grid({4, 4, 4}))
    CHECK(std::abs(eval_on(ii, t3, p.x, {basis(3, 2)})) < 1e-14);

  // i_dx (cos(theta) dtheta ^ dx ^ dy) = -cos(theta) dtheta ^ dy
  KForm cv(t3, 3);
  cv.set({0, 1, 2}, expr_field("cos(theta)"));
  VectorField ddx = VectorField::zero(t3);
  ddx.comp[1] = const_field(1.0);
  KForm ic = interior_product(ddx, cv);
  CHECK(eval_on(ic, t3, {0.3, 0, 0}, {basis(3, 0), basis(3, 2)}) ==
        doctest::Approx(-std::cos(0.3)));
}

TEST_CASE("graded Leibniz for the interior product") {
  auto t3 = ChartedManifold::torus(3);
  KForm a(t3, 1), b(t3, 1);
  a.set({0}, expr_field("sin(x)"));
  a.set({1}, expr_field("cos(theta) + 2"));
  a.set({2}, expr_field("sin(y)"));
  b.set({0}, expr_field("cos(y)"));
  b.set({1}, expr_field("sin(theta)*sin(x)"));
  b.set({2}, const_field(0.5));
  VectorField X = VectorField::zero(t3);
  X.comp[0] = expr_field("cos(x)");
  X.comp[1] = expr_field("sin(theta)");
  X.comp[2] = expr_field("0.7*cos(theta)*sin(y)");
  KForm ab = wedge(a, b);
  KForm lhs = interior_product(X, ab);
  KForm rhs1 = wedge(interior_product(X, a), b);
  KForm rhs2 = wedge(a, interior_product(X, b));
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> U(0.0, 2 * M_PI);
  int evals = 0;
  while (evals < 1000) {
    std::vector<double> p = {U(rng), U(rng), U(rng)};
    for (int dir = 0; dir < 3 && evals < 1000; ++dir, ++evals) {
      const double l = eval_on(lhs, t3, p, {basis(3, dir)});
      // deg(a) = 1: i_X(a ^ b) = (i_X a) b - a ^ (i_X b)
      const double r = eval_on(rhs1, t3, p, {basis(3, dir)}) -
                       eval_on(rhs2, t3, p, {basis(3, dir)});
      CHECK(l == doctest::Approx(r).epsilon(1e-11));
    }
  }
}

TEST_CASE("lie bracket: hand values") {
  auto t3 = ChartedManifold::torus(3);
  VectorField X = VectorField::zero(t3), Y = VectorField::zero(t3);
  X.comp[1] = const_field(1.0);
  Y.comp[2] = const_field(1.0);
  VectorField B = lie_bracket(X, Y);
  EvalContext ctx(t3, {0.1, 0.2, 0.3});
  for (const auto& c : vector_values(B, ctx)) CHECK(c == 0.0);

  auto plane = plane_box();
  VectorField P = VectorField::zero(plane), Q = VectorField::zero(plane);
  P.comp[1] = expr_field("x");  // x d_y
  Q.comp[0] = expr_field("y");  // y d_x
  VectorField PQ = lie_bracket(P, Q);
  EvalContext pctx(plane, {0.4, -0.6});
  auto v = vector_values(PQ, pctx);
  CHECK(v[0] == doctest::Approx(0.4));    // x d_x
  CHECK(v[1] == doctest::Approx(0.6));    // -y d_y
}

TEST_CASE("lie bracket matches the flow commutator") {
  auto t3 = ChartedManifold::torus(3);
  VectorField X = VectorField::zero(t3), Y = VectorField::zero(t3);
  X.comp[0] = expr_field("sin(x)");
  X.comp[1] = expr_field("cos(theta)");
  X.comp[2] = expr_field("0.5*sin(y)");
  Y.comp[0] = expr_field("cos(y)");
  Y.comp[1] = expr_field("0.3");
  Y.comp[2] = expr_field("sin(theta)*cos(x)");
  VectorField B = lie_bracket(X, Y);

  const double h = 1e-3;
  FlowOptions fo;
  fo.error_target = 1e-13;
  auto flow = [&](const VectorField& F, std::vector<double> p, double t) {
    if (t == 0.0) return p;
    VectorField G = F;
    if (t < 0.0) {
      G = add_fields(F, -1.0, VectorField::zero(t3), 0.0);
      t = -t;
    }
    Trajectory tr = integrate_flow(G, p, t, fo);
    return tr.states.back();
  };
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> U(0.0, 2 * M_PI);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> p = {U(rng), U(rng), U(rng)};
    auto q = flow(Y, flow(X, flow(Y, flow(X, p, h), h), -h), -h);
    EvalContext ctx(t3, p);
    auto b = vector_values(B, ctx);
    for (int c = 0; c < 3; ++c) {
      const double fd = (q[c] - p[c]) / (h * h);
      const double scale = std::max(1.0, std::abs(b[c]));
      CHECK(std::abs(fd - b[c]) / scale <= 1e-3);
    }
  }
}

TEST_CASE("pullback: identity, squaring map, naturality") {
  auto t3 = ChartedManifold::torus(3);
  KForm a1 = alpha1(t3);
  auto id_map = map_from_exprs({Expr::parse("theta"), Expr::parse("x"), Expr::parse("y")});
  KForm pb = pullback(t3, t3, id_map, a1);
  for (const auto& p : t3.sample_grid({4, 4, 4})) {
    EvalContext ctx(t3, p.x);
    TangentFrame f = t3.tangent_frame(p);
    CHECK(form_deviation_on_frame(pb, a1, ctx, f) <= 1e-12);
  }

  // z -> z^2 model: (u, v) -> (u^2 - v^2, 2uv) pulls u dv - v du back to
  // 2 (u^2 + v^2) (u dv - v du)
  auto disk = plane_box();
  KForm ang(disk, 1);
  ang.set({0}, expr_field("0 - y"));
  ang.set({1}, expr_field("x"));
  auto sq = map_from_exprs({Expr::parse("x^2 - y^2"), Expr::parse("2*x*y")});
  KForm pulled = pullback(disk, disk, sq, ang);
  KForm expected(disk, 1);
  expected.set({0}, expr_field("0 - 2*(x^2 + y^2)*y"));
  expected.set({1}, expr_field("2*(x^2 + y^2)*x"));
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> U(-0.9, 0.9);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> p = {U(rng), U(rng)};
    EvalContext ctx(disk, p);
    TangentFrame f;
    f.vectors = {basis(2, 0), basis(2, 1)};
    CHECK(form_deviation_on_frame(pulled, expected, ctx, f) <= 1e-12);
  }

  // pullback commutes with d
  auto warp = map_from_exprs({Expr::parse("theta"), Expr::parse("x + sin(theta)"),
                              Expr::parse("y + 0.2*cos(x)")});
  KForm lhs = pullback(t3, t3, warp, exterior_derivative(a1));
  KForm rhs = exterior_derivative(pullback(t3, t3, warp, a1));
  std::uniform_real_distribution<double> T(0.0, 2 * M_PI);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p = {T(rng), T(rng), T(rng)};
    EvalContext ctx(t3, p);
    TangentFrame f;
    f.vectors = {basis(3, 0), basis(3, 1), basis(3, 2)};
    CHECK(form_deviation_on_frame(lhs, rhs, ctx, f) <= 1e-10);
  }
}

TEST_CASE("Cartan formula against the flow derivative") {
  auto t3 = ChartedManifold::torus(3);
  VectorField X = VectorField::zero(t3);
  X.comp[0] = expr_field("0.5*sin(x)");
  X.comp[1] = expr_field("cos(theta)");
  X.comp[2] = expr_field("0.25*cos(y)");
  KForm a(t3, 1);
  a.set({0}, expr_field("cos(x)"));
  a.set({1}, expr_field("sin(theta) + 0.5"));
  a.set({2}, expr_field("sin(y)*cos(theta)"));
  KForm lie = lie_derivative_form(X, a);

  const double h = 1e-4, eps = 1e-5;
  FlowOptions fo;
  fo.error_target = 1e-13;
  auto flow_pt = [&](std::vector<double> p, double t) {
    VectorField G = X;
    if (t < 0) {
      G = add_fields(X, -1.0, VectorField::zero(t3), 0.0);
      t = -t;
    }
    return integrate_flow(G, p, t, fo).states.back();
  };
  // ((phi_h)^* a - (phi_-h)^* a) / 2h evaluated on basis vectors
  auto pull_eval = [&](const std::vector<double>& p, double t, int dir) {
    auto q = flow_pt(p, t);
    std::vector<double> qp = p, qm = p;
    qp[dir] += eps;
    qm[dir] -= eps;
    auto q2 = flow_pt(qp, t);
    auto q3 = flow_pt(qm, t);
    std::vector<double> v(3);
    for (int c = 0; c < 3; ++c) v[c] = (q2[c] - q3[c]) / (2 * eps);
    EvalContext ctx(t3, q);
    std::vector<const std::vector<double>*> vv = {&v};
    return form_on_vectors(a, ctx, vv);
  };
  std::mt19937 rng(55);
  std::uniform_real_distribution<double> U(0.0, 2 * M_PI);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> p = {U(rng), U(rng), U(rng)};
    EvalContext ctx(t3, p);
    for (int dir = 0; dir < 3; ++dir) {
      const double fd = (pull_eval(p, h, dir) - pull_eval(p, -h, dir)) / (2 * h);
      std::vector<double> e = basis(3, dir);
      std::vector<const std::vector<double>*> vv = {&e};
      const double exact = form_on_vectors(lie, ctx, vv);
      CHECK(std::abs(fd - exact) <= 1e-5 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST_CASE("contact Hamiltonian fields: unit Hamiltonian gives the Reeb field") {
  auto t3 = ChartedManifold::torus(3);
  KForm a1 = alpha1(t3);
  VectorField R = reeb_vector_field(a1);
  VectorField X1 = contact_hamiltonian_field(a1, const_field(1.0));
  for (const auto& p : t3.sample_grid({5, 5, 5})) {
    EvalContext ctx(t3, p.x);
    auto r = vector_values(R, ctx);
    auto x = vector_values(X1, ctx);
    for (int c = 0; c < 3; ++c) CHECK(x[c] == doctest::Approx(r[c]).epsilon(1e-10));
  }
}

TEST_CASE("contact Hamiltonian on the R^3 chart alpha = dz - y dx") {
  BoxFactor f;
  f.names = {"x", "y", "z"};
  f.periodic = {false, false, false};
  f.period = {0, 0, 0};
  f.lo = {-1, -1, -1};
  f.hi = {1, 1, 1};
  auto r3 = ChartedManifold::box(std::move(f));
  KForm a(r3, 1);
  a.set({0}, expr_field("0 - y"));
  a.set({2}, const_field(1.0));
  VectorField XH = contact_hamiltonian_field(a, expr_field("x"));
  for (const auto& p : r3.sample_grid({4, 4, 4})) {
    EvalContext ctx(r3, p.x);
    auto v = vector_values(XH, ctx);
    CHECK(v[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(v[1] == doctest::Approx(1.0).epsilon(1e-9));          // d_y
    CHECK(v[2] == doctest::Approx(p.x[0]).epsilon(1e-9));       // x d_z
  }
}

TEST_CASE("contact Hamiltonian defining equations and round trip") {
  auto t3 = ChartedManifold::torus(3);
  KForm a1 = alpha1(t3);
  KForm da = exterior_derivative(a1);
  ScalarField H = expr_field("cos(theta)");
  VectorField XH = contact_hamiltonian_field(a1, H);
  VectorField R = reeb_vector_field(a1);
  ScalarField aXH = pairing(a1, XH);
  // alpha(X_H) = H and the dalpha equation to 1e-8 at every sample
  KForm dH = differential(t3, H);
  ScalarField dHR = pairing(dH, R);
  for (const auto& p : t3.sample_grid({6, 6, 6})) {
    EvalContext ctx(t3, p.x);
    CHECK(std::abs(field_value(aXH, ctx) - std::cos(p.x[0])) <= 1e-8);
    auto xv = vector_values(XH, ctx);
    TangentFrame fr = t3.tangent_frame(p);
    const double dhr = field_value(dHR, ctx);
    for (const auto& e : fr.vectors) {
      std::vector<const std::vector<double>*> pair2 = {&xv, &e};
      const double lhs = form_on_vectors(da, ctx, pair2);
      std::vector<const std::vector<double>*> single = {&e};
      const double rhs = dhr * form_on_vectors(a1, ctx, single) -
                         form_on_vectors(dH, ctx, single);
      CHECK(std::abs(lhs - rhs) <= 1e-8);
    }
  }
  // round trip: H = alpha(X) recovers X for the contact field X = X_H
  VectorField X2 = contact_hamiltonian_field(a1, aXH);
  for (const auto& p : t3.sample_grid({4, 4, 4})) {
    EvalContext ctx(t3, p.x);
    auto v1 = vector_values(XH, ctx);
    auto v2 = vector_values(X2, ctx);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(v1[c] - v2[c]) <= 1e-8);
  }
}

TEST_CASE("third derivative depth is rejected") {
  auto t3 = ChartedManifold::torus(3);
  ScalarField f = expr_field("sin(theta)");
  ScalarField d1 = partial_field(f, 0);
  ScalarField d2 = partial_field(d1, 0);
  ScalarField d3 = partial_field(d2, 0);
  EvalContext ctx(t3, {0.2, 0.0, 0.0});
  CHECK(field_value(d2, ctx) == doctest::Approx(-std::sin(0.2)));
  try {
    field_value(d3, ctx);
    FAIL("expected DepthExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DepthExceeded);
  }
}

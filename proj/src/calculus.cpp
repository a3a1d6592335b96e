#include "contactlab/calculus.hpp"

#include <algorithm>
#include <cmath>

#include "contactlab/error.hpp"

namespace contactlab {

namespace {

// Sign of merging two disjoint sorted index tuples into one sorted tuple.
int merge_sign(const std::vector<int>& a, const std::vector<int>& b,
               std::vector<int>& out) {
  out.clear();
  out.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  int inversions = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return 0;
    if (a[i] < b[j]) {
      out.push_back(a[i++]);
    } else {
      inversions += static_cast<int>(a.size() - i);
      out.push_back(b[j++]);
    }
  }
  while (i < a.size()) out.push_back(a[i++]);
  while (j < b.size()) out.push_back(b[j++]);
  return (inversions % 2 == 0) ? 1 : -1;
}

}  // namespace

KForm wedge(const KForm& a, const KForm& b) {
  const ChartedManifold& M = a.manifold();
  const int n = M.ncoords();
  if (&M != &b.manifold())
    throw Error(ErrorCode::DimensionMismatch, "wedge of forms on different charts");
  const int k = a.degree() + b.degree();
  if (k > n) throw Error(ErrorCode::DegreeOverflow, "wedge degree exceeds dimension");
  KForm r(M, k);
  std::vector<int> merged;
  for (int ra = 0; ra < a.ncoeffs(); ++ra) {
    const ScalarField& ca = a.coeff_by_rank(ra);
    if (is_zero_field(ca)) continue;
    const auto ia = comb_unrank(ra, n, a.degree());
    for (int rb = 0; rb < b.ncoeffs(); ++rb) {
      const ScalarField& cb = b.coeff_by_rank(rb);
      if (is_zero_field(cb)) continue;
      const auto ib = comb_unrank(rb, n, b.degree());
      const int sign = merge_sign(ia, ib, merged);
      if (sign == 0) continue;
      r.add(merged, sign, product_field(ca, cb));
    }
  }
  return r;
}

KForm wedge_power(const KForm& a, int k) {
  if (k == 0) {
    KForm r(a.manifold(), 0);
    r.set({}, const_field(1.0));
    return r;
  }
  KForm r = a;
  for (int i = 1; i < k; ++i) r = wedge(r, a);
  return r;
}

KForm exterior_derivative(const KForm& a) {
  const ChartedManifold& M = a.manifold();
  const int n = M.ncoords();
  // the derivative of a top-degree form on the chart is the zero form
  if (a.degree() + 1 > n) return KForm(M, a.degree() + 1);
  KForm r(M, a.degree() + 1);
  std::vector<int> merged;
  for (int ra = 0; ra < a.ncoeffs(); ++ra) {
    const ScalarField& ca = a.coeff_by_rank(ra);
    if (is_zero_field(ca)) continue;
    const auto ia = comb_unrank(ra, n, a.degree());
    for (int j = 0; j < n; ++j) {
      const int sign = merge_sign({j}, ia, merged);
      if (sign == 0) continue;
      r.add(merged, sign, partial_field(ca, j));
    }
  }
  return r;
}

KForm interior_product(const VectorField& X, const KForm& a) {
  const ChartedManifold& M = a.manifold();
  const int n = M.ncoords();
  if (a.degree() < 1)
    throw Error(ErrorCode::DegreeUnderflow, "interior product of a 0-form");
  KForm r(M, a.degree() - 1);
  for (int ra = 0; ra < a.ncoeffs(); ++ra) {
    const ScalarField& ca = a.coeff_by_rank(ra);
    if (is_zero_field(ca)) continue;
    const auto ia = comb_unrank(ra, n, a.degree());
    for (size_t t = 0; t < ia.size(); ++t) {
      const int j = ia[t];
      if (!X.comp[j] || is_zero_field(X.comp[j])) continue;
      std::vector<int> rest;
      for (size_t s = 0; s < ia.size(); ++s)
        if (s != t) rest.push_back(ia[s]);
      const int sign = (t % 2 == 0) ? 1 : -1;
      r.add(rest, sign, product_field(ca, X.comp[j]));
    }
  }
  return r;
}

VectorField lie_bracket(const VectorField& X, const VectorField& Y) {
  const ChartedManifold& M = *X.M;
  const int n = M.ncoords();
  VectorField r = VectorField::zero(M);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, ScalarField>> terms;
    for (int j = 0; j < n; ++j) {
      if (X.comp[j] && Y.comp[i] && !is_zero_field(X.comp[j]))
        terms.push_back({1.0, product_field(X.comp[j], partial_field(Y.comp[i], j))});
      if (Y.comp[j] && X.comp[i] && !is_zero_field(Y.comp[j]))
        terms.push_back({-1.0, product_field(Y.comp[j], partial_field(X.comp[i], j))});
    }
    if (!terms.empty()) r.comp[i] = sum_field(std::move(terms));
  }
  return r;
}

ScalarField pairing(const KForm& alpha, const VectorField& X) {
  if (alpha.degree() != 1)
    throw Error(ErrorCode::DimensionMismatch, "pairing needs a 1-form");
  const int n = alpha.manifold().ncoords();
  std::vector<std::pair<double, ScalarField>> terms;
  for (int i = 0; i < n; ++i) {
    const ScalarField& c = alpha.coeff({i});
    if (is_zero_field(c) || !X.comp[i] || is_zero_field(X.comp[i])) continue;
    terms.push_back({1.0, product_field(c, X.comp[i])});
  }
  if (terms.empty()) return const_field(0.0);
  return sum_field(std::move(terms));
}

KForm differential(const ChartedManifold& M, const ScalarField& f) {
  KForm df(M, 1);
  for (int i = 0; i < M.ncoords(); ++i) df.set({i}, partial_field(f, i));
  return df;
}

KForm lie_derivative_form(const VectorField& X, const KForm& a) {
  KForm da = exterior_derivative(a);
  KForm term1 = interior_product(X, da);
  if (a.degree() == 0) return term1;
  KForm term2 = exterior_derivative(interior_product(X, a));
  KForm r(a.manifold(), a.degree());
  for (int i = 0; i < r.ncoeffs(); ++i) {
    std::vector<std::pair<double, ScalarField>> terms;
    if (!is_zero_field(term1.coeff_by_rank(i))) terms.push_back({1.0, term1.coeff_by_rank(i)});
    if (!is_zero_field(term2.coeff_by_rank(i))) terms.push_back({1.0, term2.coeff_by_rank(i)});
    if (!terms.empty()) r.coeff_by_rank(i) = sum_field(std::move(terms));
  }
  return r;
}

VectorField add_fields(const VectorField& X, double wx, const VectorField& Y,
                       double wy) {
  VectorField r = VectorField::zero(*X.M);
  for (size_t i = 0; i < r.comp.size(); ++i) {
    std::vector<std::pair<double, ScalarField>> terms;
    if (X.comp[i] && !is_zero_field(X.comp[i])) terms.push_back({wx, X.comp[i]});
    if (Y.comp[i] && !is_zero_field(Y.comp[i])) terms.push_back({wy, Y.comp[i]});
    if (!terms.empty()) r.comp[i] = sum_field(std::move(terms));
  }
  return r;
}

VectorField scale_vector(const VectorField& X, ScalarField s) {
  VectorField r = VectorField::zero(*X.M);
  for (size_t i = 0; i < r.comp.size(); ++i)
    if (X.comp[i] && !is_zero_field(X.comp[i]))
      r.comp[i] = product_field(s, X.comp[i]);
  return r;
}

std::vector<ScalarField> map_from_exprs(const std::vector<Expr>& exprs) {
  std::vector<ScalarField> out;
  out.reserve(exprs.size());
  for (const auto& e : exprs) out.push_back(expr_field(e));
  return out;
}

namespace {

// Determinant of a small matrix of fields by first-row expansion.
ScalarField det_field(const std::vector<std::vector<ScalarField>>& m) {
  const int k = static_cast<int>(m.size());
  if (k == 0) return const_field(1.0);
  if (k == 1) return m[0][0];
  std::vector<std::pair<double, ScalarField>> terms;
  for (int c = 0; c < k; ++c) {
    std::vector<std::vector<ScalarField>> minor;
    for (int r2 = 1; r2 < k; ++r2) {
      std::vector<ScalarField> row;
      for (int c2 = 0; c2 < k; ++c2)
        if (c2 != c) row.push_back(m[r2][c2]);
      minor.push_back(std::move(row));
    }
    terms.push_back({(c % 2 == 0) ? 1.0 : -1.0,
                     product_field(m[0][c], det_field(minor))});
  }
  return sum_field(std::move(terms));
}

double det_small(std::vector<std::vector<double>> a) {
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

KForm pullback(const ChartedManifold& source, const ChartedManifold& target,
               const std::vector<ScalarField>& map, const KForm& a) {
  if (static_cast<int>(map.size()) != target.ncoords())
    throw Error(ErrorCode::DimensionMismatch,
                "pullback map does not cover target coordinates");
  const int ns = source.ncoords();
  const int nt = target.ncoords();
  const int k = a.degree();
  if (k > ns)
    throw Error(ErrorCode::DimensionMismatch, "form degree exceeds source dimension");
  KForm r(source, k);
  for (int ra = 0; ra < a.ncoeffs(); ++ra) {
    const ScalarField& ca = a.coeff_by_rank(ra);
    if (is_zero_field(ca)) continue;
    const auto I = comb_unrank(ra, nt, k);
    ScalarField pulled = compose_field(ca, &target, map);
    for (int rs = 0; rs < comb_count(ns, k); ++rs) {
      const auto J = comb_unrank(rs, ns, k);
      // minor d(map_I)/d(x_J)
      std::vector<std::vector<ScalarField>> m(k, std::vector<ScalarField>(k));
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) m[i][j] = partial_field(map[I[i]], J[j]);
      r.add(J, 1.0, product_field(pulled, det_field(m)));
    }
  }
  return r;
}

double form_on_vectors(const KForm& a, EvalContext& ctx,
                       const std::vector<const std::vector<double>*>& vectors) {
  const int n = a.manifold().ncoords();
  const int k = a.degree();
  if (static_cast<int>(vectors.size()) != k)
    throw Error(ErrorCode::DimensionMismatch, "form degree vs vector count");
  if (k == 0) {
    const ScalarField& c = a.coeff_by_rank(0);
    return is_zero_field(c) ? 0.0 : field_value(c, ctx);
  }
  double total = 0.0;
  for (int ra = 0; ra < a.ncoeffs(); ++ra) {
    const ScalarField& c = a.coeff_by_rank(ra);
    if (is_zero_field(c)) continue;
    const auto I = comb_unrank(ra, n, k);
    std::vector<std::vector<double>> sub(k, std::vector<double>(k));
    for (int r2 = 0; r2 < k; ++r2)
      for (int c2 = 0; c2 < k; ++c2) sub[r2][c2] = (*vectors[c2])[I[r2]];
    const double d = det_small(sub);
    if (d != 0.0) total += field_value(c, ctx) * d;
  }
  return total;
}

double form_on_frame(const KForm& a, EvalContext& ctx, const TangentFrame& frame) {
  std::vector<const std::vector<double>*> v;
  v.reserve(frame.vectors.size());
  for (const auto& e : frame.vectors) v.push_back(&e);
  if (static_cast<int>(v.size()) != a.degree())
    throw Error(ErrorCode::DimensionMismatch, "frame size vs form degree");
  return form_on_vectors(a, ctx, v);
}

Jet form_on_vectors_jet(const KForm& a, EvalContext& ctx,
                        const std::vector<const std::vector<Jet>*>& vectors,
                        int order) {
  const int n = a.manifold().ncoords();
  const int k = a.degree();
  Jet total = Jet::constant(n, order, 0.0);
  if (k == 0) {
    const ScalarField& c = a.coeff_by_rank(0);
    return is_zero_field(c) ? total : field_jet(c, ctx, order);
  }
  if (k > 2)
    throw Error(ErrorCode::DimensionMismatch,
                "jet evaluation implemented for degree <= 2");
  for (int ra = 0; ra < a.ncoeffs(); ++ra) {
    const ScalarField& c = a.coeff_by_rank(ra);
    if (is_zero_field(c)) continue;
    const auto I = comb_unrank(ra, n, k);
    Jet d = Jet::constant(n, order, 0.0);
    if (k == 1) {
      d = (*vectors[0])[I[0]];
    } else {
      d = (*vectors[0])[I[0]] * (*vectors[1])[I[1]] -
          (*vectors[0])[I[1]] * (*vectors[1])[I[0]];
    }
    total = total + field_jet(c, ctx, order) * d;
  }
  return total;
}

double form_deviation_on_frame(const KForm& a, const KForm& b, EvalContext& ctx,
                               const TangentFrame& frame) {
  const int k = a.degree();
  double worst = 0.0;
  // compare on all coordinate-subset frame tuples of the frame vectors
  const int nf = static_cast<int>(frame.vectors.size());
  for (int r = 0; r < comb_count(nf, k); ++r) {
    const auto I = comb_unrank(r, nf, k);
    std::vector<const std::vector<double>*> v;
    for (int i : I) v.push_back(&frame.vectors[i]);
    const double va = form_on_vectors(a, ctx, v);
    const double vb = form_on_vectors(b, ctx, v);
    worst = std::max(worst, std::abs(va - vb));
  }
  return worst;
}

std::vector<Jet> solve_linear_jets(std::vector<std::vector<Jet>> A,
                                   std::vector<Jet> b, ErrorCode code,
                                   const char* what) {
  const int n = static_cast<int>(A.size());
  double scale = 0.0;
  for (const auto& row : A)
    for (const auto& e : row) scale = std::max(scale, std::abs(e.v));
  if (scale == 0.0) throw Error(code, std::string(what) + ": zero system");
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(A[r][c].v) > std::abs(A[piv][c].v)) piv = r;
    if (std::abs(A[piv][c].v) < 1e-12 * scale)
      throw Error(code, std::string(what) + ": singular pointwise system");
    if (piv != c) {
      std::swap(A[piv], A[c]);
      std::swap(b[piv], b[c]);
    }
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      Jet f = A[r][c] / A[c][c];
      for (int k = c; k < n; ++k) A[r][k] = A[r][k] - f * A[c][k];
      b[r] = b[r] - f * b[c];
    }
  }
  std::vector<Jet> x;
  x.reserve(n);
  for (int i = 0; i < n; ++i) x.push_back(b[i] / A[i][i]);
  return x;
}

namespace {

class ReebSolver final : public PointSolver {
 public:
  explicit ReebSolver(const KForm& alpha)
      : alpha_(alpha), dalpha_(exterior_derivative(alpha)) {}

  std::vector<Jet> solve(EvalContext& ctx, int order) const override {
    const ChartedManifold& M = ctx.manifold();
    const int N = M.ncoords();
    auto frame = M.tangent_frame_jets(ctx.point(), order, ctx.tol());
    const int d = static_cast<int>(frame.size());
    std::vector<Jet> a(d);
    std::vector<std::vector<Jet>> Mm(d, std::vector<Jet>(d));
    for (int i = 0; i < d; ++i) {
      a[i] = form_on_vectors_jet(alpha_, ctx, {&frame[i]}, order);
      for (int j = 0; j < d; ++j) {
        if (j < i) {
          Mm[i][j] = -Mm[j][i];
          continue;
        }
        if (j == i) {
          Mm[i][j] = Jet::constant(N, order, 0.0);
          continue;
        }
        Mm[i][j] = form_on_vectors_jet(dalpha_, ctx, {&frame[i], &frame[j]}, order);
      }
    }
    // bordered system: [M a; a^T 0] [r; s] = [0; 1], solution has s = 0
    std::vector<std::vector<Jet>> A(d + 1, std::vector<Jet>(d + 1, Jet::constant(N, order, 0.0)));
    std::vector<Jet> b(d + 1, Jet::constant(N, order, 0.0));
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) A[i][j] = Mm[i][j];
      A[i][d] = a[i];
      A[d][i] = a[i];
    }
    b[d] = Jet::constant(N, order, 1.0);
    auto sol = solve_linear_jets(std::move(A), std::move(b), ErrorCode::NotContact,
                                 "Reeb solve");
    std::vector<Jet> R(N, Jet::constant(N, order, 0.0));
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < N; ++c) R[c] = R[c] + sol[i] * frame[i][c];
    return R;
  }

  KForm alpha_, dalpha_;
};

class HamiltonianSolver final : public PointSolver {
 public:
  HamiltonianSolver(const KForm& alpha, ScalarField H,
                    std::shared_ptr<PointSolver> reeb)
      : alpha_(alpha), dalpha_(exterior_derivative(alpha)), H_(std::move(H)),
        reeb_(std::move(reeb)) {}

  std::vector<Jet> solve(EvalContext& ctx, int order) const override {
    const ChartedManifold& M = ctx.manifold();
    const int N = M.ncoords();
    auto frame = M.tangent_frame_jets(ctx.point(), order, ctx.tol());
    const int d = static_cast<int>(frame.size());
    const auto& R = ctx.cached_vec(reeb_.get(), order,
                                   [&] { return reeb_->solve(ctx, order); });
    // dH as a jet-valued covector; dH(R) and dH(e_i)
    Jet Hj = field_jet(H_, ctx, order + 1);
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
    Jet dHR = dH_on(R);
    std::vector<Jet> a(d), c(d);
    std::vector<std::vector<Jet>> Mm(d, std::vector<Jet>(d));
    for (int i = 0; i < d; ++i) {
      a[i] = form_on_vectors_jet(alpha_, ctx, {&frame[i]}, order);
      c[i] = dHR * a[i] - dH_on(frame[i]);
      for (int j = 0; j < d; ++j) {
        if (j < i) {
          Mm[i][j] = -Mm[j][i];
          continue;
        }
        if (j == i) {
          Mm[i][j] = Jet::constant(N, order, 0.0);
          continue;
        }
        Mm[i][j] = form_on_vectors_jet(dalpha_, ctx, {&frame[i], &frame[j]}, order);
      }
    }
    // [M a; a^T 0][r; s] = [c; H]; consistency gives s = 0
    std::vector<std::vector<Jet>> A(d + 1, std::vector<Jet>(d + 1, Jet::constant(N, order, 0.0)));
    std::vector<Jet> b(d + 1, Jet::constant(N, order, 0.0));
    // dalpha(X, e_j) rows: M r = i_X dalpha evaluated against frame; note
    // Mm[i][j] = dalpha(e_i, e_j), and X = sum r_j e_j, so row i is
    // sum_j dalpha(e_j, e_i)... keep orientation consistent below.
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) A[i][j] = Mm[j][i];  // dalpha(X, e_i) = sum_j r_j dalpha(e_j, e_i)
      A[i][d] = a[i];
      A[d][i] = a[i];
      b[i] = c[i];
    }
    b[d] = field_jet(H_, ctx, order);
    auto sol = solve_linear_jets(std::move(A), std::move(b), ErrorCode::NotContact,
                                 "contact Hamiltonian solve");
    std::vector<Jet> X(N, Jet::constant(N, order, 0.0));
    for (int i = 0; i < d; ++i)
      for (int cdx = 0; cdx < N; ++cdx) X[cdx] = X[cdx] + sol[i] * frame[i][cdx];
    return X;
  }

  KForm alpha_, dalpha_;
  ScalarField H_;
  std::shared_ptr<PointSolver> reeb_;
};

class SolveComponentNode final : public FieldNode {
 public:
  SolveComponentNode(std::shared_ptr<PointSolver> s, int comp)
      : s_(std::move(s)), comp_(comp) {}
  Jet eval(EvalContext& ctx, int order) const override {
    const auto& sol = ctx.cached_vec(s_.get(), order,
                                     [&] { return s_->solve(ctx, order); });
    return sol[comp_];
  }
  int max_order() const override { return 1; }
  std::shared_ptr<PointSolver> s_;
  int comp_;
};

}  // namespace

std::shared_ptr<PointSolver> make_reeb_solver(const KForm& alpha) {
  return std::make_shared<ReebSolver>(alpha);
}

std::shared_ptr<PointSolver> make_hamiltonian_solver(
    const KForm& alpha, ScalarField H, std::shared_ptr<PointSolver> reeb) {
  return std::make_shared<HamiltonianSolver>(alpha, std::move(H), std::move(reeb));
}

VectorField solver_vector_field(const ChartedManifold& M,
                                std::shared_ptr<PointSolver> s) {
  VectorField X = VectorField::zero(M);
  for (int i = 0; i < M.ncoords(); ++i)
    X.comp[i] = std::make_shared<SolveComponentNode>(s, i);
  return X;
}

VectorField reeb_vector_field(const KForm& alpha) {
  return solver_vector_field(alpha.manifold(), make_reeb_solver(alpha));
}

VectorField contact_hamiltonian_field(const KForm& alpha, ScalarField H) {
  auto reeb = make_reeb_solver(alpha);
  return solver_vector_field(alpha.manifold(),
                             make_hamiltonian_solver(alpha, std::move(H), reeb));
}

}  // namespace contactlab

#include "contactlab/field.hpp"

#include <algorithm>
#include <cmath>

#include "contactlab/error.hpp"

namespace contactlab {

Jet EvalContext::cached(const void* key, int order,
                        const std::function<Jet()>& compute) {
  auto it = memo_.find({key, order});
  if (it != memo_.end()) return it->second;
  Jet j = compute();
  memo_.emplace(std::make_pair(key, order), j);
  return j;
}

const std::vector<Jet>& EvalContext::cached_vec(
    const void* key, int order, const std::function<std::vector<Jet>()>& compute) {
  auto it = memo_vec_.find({key, order});
  if (it != memo_vec_.end()) return it->second;
  auto r = compute();
  return memo_vec_.emplace(std::make_pair(key, order), std::move(r)).first->second;
}

Jet field_jet(const ScalarField& f, EvalContext& ctx, int order) {
  return ctx.cached(f.get(), order, [&] { return f->eval(ctx, order); });
}

double field_value(const ScalarField& f, EvalContext& ctx) {
  return field_jet(f, ctx, 0).v;
}

namespace {

class ConstNode final : public FieldNode {
 public:
  explicit ConstNode(double v) : v_(v) {}
  Jet eval(EvalContext& ctx, int order) const override {
    return Jet::constant(ctx.manifold().ncoords(), order, v_);
  }
  int max_order() const override { return 2; }
  double v_;
};

class ExprNodeField final : public FieldNode {
 public:
  explicit ExprNodeField(Expr e) : e_(std::move(e)) {}
  ExprNodeField(Expr e,
                std::shared_ptr<const std::unordered_map<std::string, double>> params)
      : e_(std::move(e)), params_(std::move(params)) {
    if (params_) {
      for (const auto& [k, v] : *params_) param_names_.push_back(k);
      std::sort(param_names_.begin(), param_names_.end());
    }
  }
  Jet eval(EvalContext& ctx, int order) const override {
    const auto& M = ctx.manifold();
    const int n = M.ncoords();
    std::vector<std::string> vars = M.coords();
    std::vector<Jet> vals;
    vals.reserve(n + param_names_.size());
    for (int i = 0; i < n; ++i)
      vals.push_back(Jet::variable(n, order, i, ctx.point()[i]));
    for (const auto& name : param_names_) {
      vars.push_back(name);
      vals.push_back(Jet::constant(n, order, params_->at(name)));
    }
    return e_.eval(vars, vals);
  }
  int max_order() const override { return 2; }
  Expr e_;
  std::shared_ptr<const std::unordered_map<std::string, double>> params_;
  std::vector<std::string> param_names_;
};

class PartialNode final : public FieldNode {
 public:
  PartialNode(ScalarField f, int coord) : f_(std::move(f)), coord_(coord) {}
  Jet eval(EvalContext& ctx, int order) const override {
    if (order + 1 > f_->max_order())
      throw Error(ErrorCode::DepthExceeded,
                  "derivative depth beyond second order requested");
    Jet p = field_jet(f_, ctx, order + 1);
    Jet r(p.nvars, order, p.g[coord_]);
    if (order >= 1)
      for (int k = 0; k < p.nvars; ++k) r.g[k] = p.hess(coord_, k);
    return r;
  }
  int max_order() const override { return std::max(0, f_->max_order() - 1); }
  ScalarField f_;
  int coord_;
};

class SumNode final : public FieldNode {
 public:
  SumNode(std::vector<std::pair<double, ScalarField>> terms, double c)
      : terms_(std::move(terms)), c_(c) {}
  Jet eval(EvalContext& ctx, int order) const override {
    Jet r = Jet::constant(ctx.manifold().ncoords(), order, c_);
    for (const auto& [w, f] : terms_) r = r + field_jet(f, ctx, order) * w;
    return r;
  }
  int max_order() const override {
    int m = 2;
    for (const auto& [w, f] : terms_) m = std::min(m, f->max_order());
    return m;
  }
  std::vector<std::pair<double, ScalarField>> terms_;
  double c_;
};

class ProductNode final : public FieldNode {
 public:
  ProductNode(ScalarField a, ScalarField b) : a_(std::move(a)), b_(std::move(b)) {}
  Jet eval(EvalContext& ctx, int order) const override {
    return field_jet(a_, ctx, order) * field_jet(b_, ctx, order);
  }
  int max_order() const override {
    return std::min(a_->max_order(), b_->max_order());
  }
  ScalarField a_, b_;
};

class QuotientNode final : public FieldNode {
 public:
  QuotientNode(ScalarField a, ScalarField b) : a_(std::move(a)), b_(std::move(b)) {}
  Jet eval(EvalContext& ctx, int order) const override {
    return field_jet(a_, ctx, order) / field_jet(b_, ctx, order);
  }
  int max_order() const override {
    return std::min(a_->max_order(), b_->max_order());
  }
  ScalarField a_, b_;
};

class CallbackNode final : public FieldNode {
 public:
  explicit CallbackNode(std::function<double(const std::vector<double>&)> fn)
      : fn_(std::move(fn)) {}
  Jet eval(EvalContext& ctx, int order) const override {
    if (order > 0)
      throw Error(ErrorCode::DepthExceeded, "callback field has no derivatives");
    return Jet::constant(ctx.manifold().ncoords(), 0, fn_(ctx.point()));
  }
  int max_order() const override { return 0; }
  std::function<double(const std::vector<double>&)> fn_;
};

class ComposeNode final : public FieldNode {
 public:
  ComposeNode(ScalarField outer, const ChartedManifold* target,
              std::vector<ScalarField> map)
      : outer_(std::move(outer)), target_(target), map_(std::move(map)) {}

  Jet eval(EvalContext& ctx, int order) const override {
    const int ns = ctx.manifold().ncoords();
    const int nt = target_->ncoords();
    std::vector<Jet> mj;
    mj.reserve(map_.size());
    for (const auto& m : map_) mj.push_back(field_jet(m, ctx, order));
    std::vector<double> ty(nt);
    for (int t = 0; t < nt; ++t) ty[t] = mj[t].v;
    EvalContext tctx(*target_, ty, ctx.tol());
    Jet oj = field_jet(outer_, tctx, order);
    Jet r(ns, order, oj.v);
    if (order >= 1) {
      for (int s = 0; s < ns; ++s) {
        double g = 0.0;
        for (int t = 0; t < nt; ++t) g += oj.g[t] * mj[t].g[s];
        r.g[s] = g;
      }
    }
    if (order >= 2) {
      for (int s1 = 0; s1 < ns; ++s1)
        for (int s2 = 0; s2 < ns; ++s2) {
          double h = 0.0;
          for (int t1 = 0; t1 < nt; ++t1)
            for (int t2 = 0; t2 < nt; ++t2)
              h += oj.hess(t1, t2) * mj[t1].g[s1] * mj[t2].g[s2];
          for (int t = 0; t < nt; ++t) h += oj.g[t] * mj[t].hess(s1, s2);
          r.hess(s1, s2) = h;
        }
    }
    return r;
  }
  int max_order() const override {
    int m = outer_->max_order();
    for (const auto& f : map_) m = std::min(m, f->max_order());
    return m;
  }
  ScalarField outer_;
  const ChartedManifold* target_;
  std::vector<ScalarField> map_;
};

class AverageNode final : public FieldNode {
 public:
  AverageNode(ScalarField f, std::vector<int> axes, std::vector<double> periods,
              int Q)
      : f_(std::move(f)), axes_(std::move(axes)), periods_(std::move(periods)), Q_(Q) {}

  Jet eval(EvalContext& ctx, int order) const override {
    const int n = ctx.manifold().ncoords();
    Jet acc = Jet::constant(n, order, 0.0);
    std::vector<double> p = ctx.point();
    std::vector<int> q(axes_.size(), 0);
    const double w = 1.0 / std::pow(double(Q_), double(axes_.size()));
    for (;;) {
      for (size_t a = 0; a < axes_.size(); ++a)
        p[axes_[a]] = q[a] * periods_[a] / Q_;
      EvalContext sub(ctx.manifold(), p, ctx.tol());
      acc = acc + field_jet(f_, sub, order) * w;
      int a = static_cast<int>(axes_.size()) - 1;
      while (a >= 0) {
        if (++q[a] < Q_) break;
        q[a] = 0;
        --a;
      }
      if (a < 0) break;
    }
    // constant in the averaged coordinates by construction
    if (order >= 1)
      for (int ai : axes_) acc.g[ai] = 0.0;
    if (order >= 2)
      for (int ai : axes_)
        for (int k = 0; k < n; ++k) {
          acc.hess(ai, k) = 0.0;
          acc.hess(k, ai) = 0.0;
        }
    return acc;
  }
  int max_order() const override { return f_->max_order(); }

  ScalarField f_;
  std::vector<int> axes_;
  std::vector<double> periods_;
  int Q_;
};

// h(sqrt(u^2+v^2)) for a radial profile h with h'(0) = 0; exact jets away
// from the axis, series limits on it.
class RadialNode final : public FieldNode {
 public:
  RadialNode(Expr h, int u, int v) : h_(std::move(h)), u_(u), v_(v) {}

  Jet eval(EvalContext& ctx, int order) const override {
    const int n = ctx.manifold().ncoords();
    const double u = ctx.point()[u_], v = ctx.point()[v_];
    const double r = std::sqrt(u * u + v * v);
    static const std::vector<std::string> rv = {"r"};
    std::vector<Jet> at = {Jet::variable(1, 2, 0, r)};
    Jet h = h_.eval(rv, at);
    const double hr = h.v, dh = h.g[0], ddh = h.hess(0, 0);
    Jet out(n, order, hr);
    if (order == 0) return out;
    // dh_over_r extends as h''(0) on the axis (requires h'(0)=0)
    const double dh_over_r = (r > 1e-8) ? dh / r : ddh;
    out.g[u_] = dh_over_r * u;
    out.g[v_] = dh_over_r * v;
    if (order >= 2) {
      const double r2 = std::max(r * r, 1e-300);
      const double a = (r > 1e-8) ? (ddh - dh_over_r) / r2 : 0.0;
      out.hess(u_, u_) = a * u * u + dh_over_r;
      out.hess(v_, v_) = a * v * v + dh_over_r;
      out.hess(u_, v_) = a * u * v;
      out.hess(v_, u_) = a * u * v;
    }
    return out;
  }
  int max_order() const override { return 2; }

  Expr h_;
  int u_, v_;
};

// h(r)/r^2 for profiles with h(0)=h'(0)=0; used to store h(r) dphi terms as
// Cartesian coefficients. Exact jets away from the axis; on the axis the
// value is h''(0)/2 and first derivatives vanish for even profiles.
class RadialQuotientNode final : public FieldNode {
 public:
  RadialQuotientNode(Expr h, int u, int v) : h_(std::move(h)), u_(u), v_(v) {}

  Jet eval(EvalContext& ctx, int order) const override {
    const int n = ctx.manifold().ncoords();
    const double u = ctx.point()[u_], v = ctx.point()[v_];
    const double r = std::sqrt(u * u + v * v);
    static const std::vector<std::string> rv = {"r"};
    std::vector<Jet> at = {Jet::variable(1, 2, 0, r)};
    Jet h = h_.eval(rv, at);
    Jet out(n, order, 0.0);
    if (r > 1e-6) {
      const double w = h.v / (r * r);
      const double dw = h.g[0] / (r * r) - 2.0 * h.v / (r * r * r);  // w'(r)
      out.v = w;
      if (order >= 1) {
        out.g[u_] = dw * u / r;
        out.g[v_] = dw * v / r;
      }
      if (order >= 2) {
        const double ddw =
            (h.hess(0, 0) - 4.0 * h.g[0] / r + 6.0 * h.v / (r * r)) / (r * r);
        const double a = (ddw - dw / r) / (r * r);
        out.hess(u_, u_) = a * u * u + dw / r;
        out.hess(v_, v_) = a * v * v + dw / r;
        out.hess(u_, v_) = a * u * v;
        out.hess(v_, u_) = a * u * v;
      }
    } else {
      out.v = 0.5 * h.hess(0, 0);
      // first and second derivatives vanish on the axis for even profiles;
      // the O(r^2) error of this truncation is below rounding here
    }
    return out;
  }
  int max_order() const override { return 2; }

  Expr h_;
  int u_, v_;
};

class JetFnNode final : public FieldNode {
 public:
  JetFnNode(ScalarField a, std::function<Jet(const Jet&)> fn)
      : a_(std::move(a)), fn_(std::move(fn)) {}
  Jet eval(EvalContext& ctx, int order) const override {
    return fn_(field_jet(a_, ctx, order));
  }
  int max_order() const override { return a_->max_order(); }
  ScalarField a_;
  std::function<Jet(const Jet&)> fn_;
};

}  // namespace

ScalarField sqrt_field(ScalarField a) {
  return std::make_shared<JetFnNode>(std::move(a),
                                     [](const Jet& j) { return jet_sqrt(j); });
}

ScalarField exp_field(ScalarField a) {
  return std::make_shared<JetFnNode>(std::move(a),
                                     [](const Jet& j) { return jet_exp(j); });
}

ScalarField smoothstep_field(double a, double b, ScalarField t) {
  return std::make_shared<JetFnNode>(std::move(t), [a, b](const Jet& j) {
    return jet_smoothstep(Jet::constant(j.nvars, j.order, a),
                          Jet::constant(j.nvars, j.order, b), j);
  });
}

ScalarField const_field(double v) { return std::make_shared<ConstNode>(v); }
ScalarField expr_field(Expr e) { return std::make_shared<ExprNodeField>(std::move(e)); }
ScalarField expr_field(const std::string& source) {
  return expr_field(Expr::parse(source));
}
ScalarField expr_field(
    Expr e, std::shared_ptr<const std::unordered_map<std::string, double>> params) {
  return std::make_shared<ExprNodeField>(std::move(e), std::move(params));
}
ScalarField partial_field(ScalarField f, int coord) {
  return std::make_shared<PartialNode>(std::move(f), coord);
}
ScalarField sum_field(std::vector<std::pair<double, ScalarField>> terms,
                      double constant) {
  return std::make_shared<SumNode>(std::move(terms), constant);
}
ScalarField product_field(ScalarField a, ScalarField b) {
  return std::make_shared<ProductNode>(std::move(a), std::move(b));
}
ScalarField quotient_field(ScalarField a, ScalarField b) {
  return std::make_shared<QuotientNode>(std::move(a), std::move(b));
}
ScalarField scale_field(ScalarField a, double s) {
  return sum_field({{s, std::move(a)}}, 0.0);
}
ScalarField callback_field(std::function<double(const std::vector<double>&)> fn) {
  return std::make_shared<CallbackNode>(std::move(fn));
}
ScalarField compose_field(ScalarField outer, const ChartedManifold* target,
                          std::vector<ScalarField> map) {
  return std::make_shared<ComposeNode>(std::move(outer), target, std::move(map));
}
ScalarField average_field(ScalarField f, std::vector<int> axes,
                          std::vector<double> periods, int Q) {
  return std::make_shared<AverageNode>(std::move(f), std::move(axes),
                                       std::move(periods), Q);
}
ScalarField radial_field(Expr f_of_r, int u_coord, int v_coord) {
  return std::make_shared<RadialNode>(std::move(f_of_r), u_coord, v_coord);
}
ScalarField radial_quotient_field(Expr f_of_r, int u_coord, int v_coord) {
  return std::make_shared<RadialQuotientNode>(std::move(f_of_r), u_coord, v_coord);
}

bool is_zero_field(const ScalarField& f) {
  if (!f) return true;
  if (auto c = dynamic_cast<const ConstNode*>(f.get())) return c->v_ == 0.0;
  return false;
}

VectorField VectorField::zero(const ChartedManifold& M) {
  VectorField X;
  X.M = &M;
  X.comp.assign(M.ncoords(), nullptr);
  return X;
}

std::vector<double> vector_values(const VectorField& X, EvalContext& ctx) {
  std::vector<double> out(X.comp.size(), 0.0);
  for (size_t i = 0; i < X.comp.size(); ++i)
    if (X.comp[i]) out[i] = field_value(X.comp[i], ctx);
  return out;
}

int comb_count(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return static_cast<int>(r);
}

int comb_rank(const std::vector<int>& idx, int n) {
  // colexicographic-free: standard combinatorial number system (lexicographic)
  const int k = static_cast<int>(idx.size());
  int rank = 0;
  int prev = -1;
  for (int pos = 0; pos < k; ++pos) {
    for (int c = prev + 1; c < idx[pos]; ++c) rank += comb_count(n - 1 - c, k - 1 - pos);
    prev = idx[pos];
  }
  return rank;
}

std::vector<int> comb_unrank(int rank, int n, int k) {
  std::vector<int> idx(k);
  int prev = -1;
  for (int pos = 0; pos < k; ++pos) {
    int c = prev + 1;
    for (;;) {
      const int block = comb_count(n - 1 - c, k - 1 - pos);
      if (rank < block) break;
      rank -= block;
      ++c;
    }
    idx[pos] = c;
    prev = c;
  }
  return idx;
}

KForm::KForm(const ChartedManifold& M, int degree) : M_(&M), degree_(degree) {
  if (degree < 0) throw Error(ErrorCode::DegreeUnderflow, "negative form degree");
  // degree > ncoords is the zero form: no coefficient slots
  coeff_.assign(comb_count(M.ncoords(), degree), nullptr);
}

ScalarField& KForm::coeff(const std::vector<int>& idx) {
  return coeff_[comb_rank(idx, M_->ncoords())];
}
const ScalarField& KForm::coeff(const std::vector<int>& idx) const {
  return coeff_[comb_rank(idx, M_->ncoords())];
}

void KForm::set(const std::vector<int>& idx, ScalarField f) {
  coeff(idx) = std::move(f);
}

void KForm::add(const std::vector<int>& idx, double weight, ScalarField f) {
  ScalarField& slot = coeff(idx);
  if (!slot) {
    slot = weight == 1.0 ? std::move(f) : scale_field(std::move(f), weight);
  } else {
    slot = sum_field({{1.0, slot}, {weight, std::move(f)}});
  }
}

}  // namespace contactlab

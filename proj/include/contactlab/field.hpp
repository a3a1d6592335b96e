#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "contactlab/manifold.hpp"

namespace contactlab {

class FieldNode;
using ScalarField = std::shared_ptr<const FieldNode>;

// Per-point evaluation state with memoization across a shared expression DAG.
class EvalContext {
 public:
  EvalContext(const ChartedManifold& M, std::vector<double> point,
              Tolerances tol = {})
      : M_(&M), x_(std::move(point)), tol_(tol) {}

  const ChartedManifold& manifold() const { return *M_; }
  const std::vector<double>& point() const { return x_; }
  const Tolerances& tol() const { return tol_; }

  void move_to(const std::vector<double>& p) {
    x_ = p;
    memo_.clear();
    memo_vec_.clear();
  }

  Jet cached(const void* key, int order, const std::function<Jet()>& compute);
  const std::vector<Jet>& cached_vec(const void* key, int order,
                                     const std::function<std::vector<Jet>()>& compute);

 private:
  struct KeyHash {
    size_t operator()(const std::pair<const void*, int>& k) const {
      return std::hash<const void*>()(k.first) * 31u + static_cast<size_t>(k.second);
    }
  };
  const ChartedManifold* M_;
  std::vector<double> x_;
  Tolerances tol_;
  std::unordered_map<std::pair<const void*, int>, Jet, KeyHash> memo_;
  std::unordered_map<std::pair<const void*, int>, std::vector<Jet>, KeyHash> memo_vec_;
};

class FieldNode : public std::enable_shared_from_this<FieldNode> {
 public:
  virtual ~FieldNode() = default;
  // Jet with respect to the manifold's flattened coordinates.
  virtual Jet eval(EvalContext& ctx, int order) const = 0;
  virtual int max_order() const = 0;
};

Jet field_jet(const ScalarField& f, EvalContext& ctx, int order);
double field_value(const ScalarField& f, EvalContext& ctx);

// Constructors.
ScalarField const_field(double v);
ScalarField expr_field(Expr e);
ScalarField expr_field(const std::string& source);
// Expression field with named scene parameters bound as constants.
ScalarField expr_field(Expr e,
                       std::shared_ptr<const std::unordered_map<std::string, double>> params);
// d/dx_i of f (costs one jet level).
ScalarField partial_field(ScalarField f, int coord);
ScalarField sum_field(std::vector<std::pair<double, ScalarField>> terms,
                      double constant = 0.0);
ScalarField product_field(ScalarField a, ScalarField b);
ScalarField quotient_field(ScalarField a, ScalarField b);
ScalarField scale_field(ScalarField a, double s);
// Value-only native field (no derivatives available).
ScalarField callback_field(std::function<double(const std::vector<double>&)> fn);
// outer is a field over `target` coordinates; map[i] gives target coordinate i
// as a field over the source chart the context runs on.
ScalarField compose_field(ScalarField outer, const ChartedManifold* target,
                          std::vector<ScalarField> map);
// Average over the torus coordinates listed in `axes` with an equispaced
// Q-point-per-axis periodic grid (trapezoid rule); the result is constant in
// those coordinates.
ScalarField average_field(ScalarField f, std::vector<int> axes,
                          std::vector<double> periods, int Q);

ScalarField sqrt_field(ScalarField a);
ScalarField exp_field(ScalarField a);
ScalarField smoothstep_field(double a, double b, ScalarField t);

// f(r) with r = sqrt(u^2+v^2): smooth whenever f'(0) = 0. `f_of_r` is a field
// over the auxiliary 1-d chart with coordinate "r".
ScalarField radial_field(Expr f_of_r, int u_coord, int v_coord);
// f(r)/r^2 for profiles with f(0) = f'(0) = 0 (finite limit at r = 0).
ScalarField radial_quotient_field(Expr f_of_r, int u_coord, int v_coord);

bool is_zero_field(const ScalarField& f);

struct VectorField {
  const ChartedManifold* M = nullptr;
  std::vector<ScalarField> comp;  // per flattened coordinate

  static VectorField zero(const ChartedManifold& M);
};

std::vector<double> vector_values(const VectorField& X, EvalContext& ctx);

class KForm {
 public:
  KForm() = default;
  KForm(const ChartedManifold& M, int degree);

  const ChartedManifold& manifold() const { return *M_; }
  int degree() const { return degree_; }
  int dim() const { return M_->ncoords(); }

  // Index tuples are strictly increasing coordinate index lists.
  ScalarField& coeff(const std::vector<int>& idx);
  const ScalarField& coeff(const std::vector<int>& idx) const;
  ScalarField& coeff_by_rank(int rank) { return coeff_[rank]; }
  const ScalarField& coeff_by_rank(int rank) const { return coeff_[rank]; }
  int ncoeffs() const { return static_cast<int>(coeff_.size()); }

  void set(const std::vector<int>& idx, ScalarField f);
  void add(const std::vector<int>& idx, double weight, ScalarField f);

 private:
  const ChartedManifold* M_ = nullptr;
  int degree_ = 0;
  std::vector<ScalarField> coeff_;  // by combination rank; null == zero
};

// Combination rank/unrank for strictly increasing k-tuples out of n.
int comb_count(int n, int k);
int comb_rank(const std::vector<int>& idx, int n);
std::vector<int> comb_unrank(int rank, int n, int k);

}  // namespace contactlab

#pragma once

#include "contactlab/field.hpp"

namespace contactlab {

KForm wedge(const KForm& a, const KForm& b);
KForm wedge_power(const KForm& a, int k);  // repeated wedge
KForm exterior_derivative(const KForm& a);
KForm interior_product(const VectorField& X, const KForm& a);
VectorField lie_bracket(const VectorField& X, const VectorField& Y);
// alpha(X) as a scalar field (degree-1 pairing).
ScalarField pairing(const KForm& alpha, const VectorField& X);
// df of a scalar field, as a 1-form.
KForm differential(const ChartedManifold& M, const ScalarField& f);
// Cartan formula: L_X a = i_X da + d i_X a.
KForm lie_derivative_form(const VectorField& X, const KForm& a);
VectorField add_fields(const VectorField& X, double wx, const VectorField& Y,
                       double wy);
VectorField scale_vector(const VectorField& X, ScalarField s);

// Pullback under the map `source -> target` whose target coordinates are the
// given fields over the source chart.
KForm pullback(const ChartedManifold& source, const ChartedManifold& target,
               const std::vector<ScalarField>& map, const KForm& a);
std::vector<ScalarField> map_from_exprs(const std::vector<Expr>& exprs);

// Evaluate a k-form on k numeric tangent vectors.
double form_on_vectors(const KForm& a, EvalContext& ctx,
                       const std::vector<const std::vector<double>*>& vectors);
double form_on_frame(const KForm& a, EvalContext& ctx, const TangentFrame& frame);
// Degree-1/2 evaluation on jet-valued vectors (enough for the solvers).
Jet form_on_vectors_jet(const KForm& a, EvalContext& ctx,
                        const std::vector<const std::vector<Jet>*>& vectors,
                        int order);

// Sup over coefficient tuples of |(a-b)(frame tuple)|; used for form
// comparisons on a frame.
double form_deviation_on_frame(const KForm& a, const KForm& b, EvalContext& ctx,
                               const TangentFrame& frame);

// Pointwise linear solves, differentiable through jet arithmetic.
class PointSolver {
 public:
  virtual ~PointSolver() = default;
  // ambient components at the context point
  virtual std::vector<Jet> solve(EvalContext& ctx, int order) const = 0;
};

// Reeb field of a contact form: alpha(R) = 1, i_R dalpha = 0.
std::shared_ptr<PointSolver> make_reeb_solver(const KForm& alpha);
// Contact Hamiltonian field: alpha(X_H) = H, i_{X_H} dalpha = (dH(R)) alpha - dH.
std::shared_ptr<PointSolver> make_hamiltonian_solver(
    const KForm& alpha, ScalarField H, std::shared_ptr<PointSolver> reeb);
VectorField solver_vector_field(const ChartedManifold& M,
                                std::shared_ptr<PointSolver> s);

VectorField reeb_vector_field(const KForm& alpha);
VectorField contact_hamiltonian_field(const KForm& alpha, ScalarField H);

// Gaussian elimination over jets; throws Error(code, what) on a singular pivot.
std::vector<Jet> solve_linear_jets(std::vector<std::vector<Jet>> A,
                                   std::vector<Jet> b, ErrorCode code,
                                   const char* what);

}  // namespace contactlab

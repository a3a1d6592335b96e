#pragma once

#include "contactlab/positivity.hpp"

namespace contactlab {

// A K_z circle family near the binding, used by the rescaling lemma checks:
// for each offset z in the disk, samples and frames of K_z plus z itself.
struct TubeFamily {
  std::vector<std::array<double, 2>> offsets;
  std::vector<std::vector<std::vector<double>>> samples;  // per offset
  std::vector<std::vector<TangentFrame>> frames;          // per offset
  double radius = 0.0;
};

struct OpenBookMap {
  ScalarField phi1, phi2;
  double r_bind = 0.05;
  bool has_binding = false;
  SubmanifoldSpec binding;  // built-ins register their binding locus exactly
  bool has_tube = false;
  TubeFamily tube;
};

struct ObdReport {
  PositivityReport binding;
  PositivityReport page;
  double min_transversality = 0.0;  // Gram determinant of projected gradients
  long near_binding_samples = 0;
  bool empty_binding = false;
  bool pass = false;
  std::string note;
};

ObdReport obd_check(const OpenBookMap& ob, const KForm& alpha,
                    const ChartedManifold& M, const std::vector<int>& resolution,
                    const Tolerances& tol = {}, int threads = 0);

struct FieldPair {
  VectorField X, Y;
  ScalarField H1, H2;  // contact Hamiltonians: alpha(X) = H1, alpha(Y) = H2
};

struct FieldsFromObdResult {
  FieldPair pair;
  ScalarField phi1_resc, phi2_resc;
  double max_alpha_bracket = 0.0;      // max alpha([X,Y]); must be < -tau_pos
  std::vector<double> witness;         // point achieving the max
  double max_contract_residual = 0.0;  // |alpha(X)-phi1_resc|, |alpha(Y)+phi2_resc|
};

// Open book to field pair: rescale the defining map, take the contact
// Hamiltonian fields of (phi1, -phi2) and audit negative transversality of
// their bracket.
FieldsFromObdResult fields_from_obd(const OpenBookMap& ob, const KForm& alpha,
                                    const ChartedManifold& M,
                                    const std::vector<int>& resolution,
                                    double rescale_eps = 0.25,
                                    const Tolerances& tol = {});

struct ObdFromFieldsResult {
  OpenBookMap recovered;
  double max_alpha_bracket = 0.0;
  double max_identity_residual = 0.0;  // |d(alpha(X_t))(Y_t) + alpha([X,Y])| on zero sets
  double min_zero_transversality = 0.0;  // |d(alpha(X_t))(Y_t)| on zero sets
  long refined_zero_points = 0;
  std::vector<double> k_set_distances;  // between K estimates at angle pairs
};

// Field pair to open book: phi = (alpha(X), -alpha(Y)) plus the identity
// audits d(alpha(X_theta))(Y_theta) = -alpha([X,Y]) near the zero sets.
ObdFromFieldsResult obd_from_fields(const FieldPair& pair, const KForm& alpha,
                                    const ChartedManifold& M,
                                    const std::vector<int>& resolution,
                                    const Tolerances& tol = {});

struct RescaleResult {
  int k = 0;
  KForm rescaled;
  double page_margin = 0.0;         // at the returned k, over all samples
  double pre_margin_outside = 0.0;  // page margin outside the tube before rescale
  double post_margin_outside = 0.0; // same region after rescale (f = 1 there)
  PositivityReport page;
};

// Searches k (doubling from 1) so that the page condition for the rescaled
// form f alpha, f = 1 + e^{-k r^2} bridged to 1 outside the tube, holds at
// every sample.
RescaleResult adapt_rescaling(const KForm& alpha, const OpenBookMap& ob,
                              double tube_radius, const ChartedManifold& M,
                              const std::vector<int>& resolution,
                              const Tolerances& tol = {}, int k_max_pow = 10);

// Zero-crossing refinement along grid edges: points with |g| <= 1e-10.
std::vector<std::vector<double>> refine_zero_points(const ChartedManifold& M,
                                                    const std::vector<SamplePoint>& grid,
                                                    const ScalarField& g,
                                                    const Tolerances& tol,
                                                    size_t max_points = 400);

// Helpers shared with other modules.
ScalarField rho_field(const OpenBookMap& ob);  // |phi|
KForm angle_differential(const ChartedManifold& M, const OpenBookMap& ob);  // d(phi/|phi|) * rho^2
PositivityReport restriction_contact_margin(const KForm& alpha,
                                            const ChartedManifold& M,
                                            const SubmanifoldSpec& Z,
                                            const Tolerances& tol);

}  // namespace contactlab

#pragma once

#include "contactlab/positivity.hpp"

namespace contactlab {

struct FlowOptions {
  double error_target = 1e-10;  // per unit time
  double max_step = 0.05;
  double min_step = 1e-12;
  // tube-interior trajectories are truncated once the radial coordinate of a
  // disk pair reaches the disk radius
  bool stop_on_domain_exit = true;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;  // unwrapped coordinates
  bool left_domain = false;
  double alpha_drift = 0.0;  // max |alpha(X)-1| seen, when alpha supplied
};

struct ReebResidual {
  double worst_alpha = 0.0;   // |alpha(R)-1|
  double worst_dalpha = 0.0;  // |dalpha(R, e_i)|
};

// Pointwise residuals of the defining equations over a grid.
ReebResidual reeb_residuals(const KForm& alpha, const VectorField& R,
                            const std::vector<SamplePoint>& grid,
                            const Tolerances& tol = {});

Trajectory integrate_flow(const VectorField& X, const std::vector<double>& seed,
                          double t_max, const FlowOptions& opt = {},
                          const KForm* alpha_audit = nullptr);

struct OrbitRecord {
  std::vector<double> seed;
  double period = 0.0;
  double residual = 0.0;  // closure distance modulo torus periods
  std::vector<int> winding;
  std::vector<std::vector<double>> points;  // sampled trajectory over one period
  bool refined = false;
};

struct OrbitSearchOptions {
  double t_max = 100.0;
  double catch_radius = 1e-3;
  double orbit_tol = 1e-6;
  FlowOptions flow;
};

std::vector<OrbitRecord> closed_orbit_search(const VectorField& X,
                                             const std::vector<std::vector<double>>& seeds,
                                             const OrbitSearchOptions& opt = {});

struct ContractibleAuditReport {
  bool pass = true;
  long zero_winding_orbits = 0;
  double max_binding_distance = 0.0;
  double max_torus_spread = 0.0;
  std::string note;
};

// Checks every zero-torus-winding closed orbit against the registered binding
// locus: it must lie on the locus and be constant in the torus coordinates.
ContractibleAuditReport contractible_orbit_audit(
    const std::vector<OrbitRecord>& records, const ChartedManifold& M,
    const ScalarField& binding_distance, const std::vector<int>& torus_coords,
    double tau_bind = 1e-4, double tau_orbit = 1e-6);

// ---------------------------------------------------------------------------
// Binding normal form and the predicted Bourgeois Reeb field
// ---------------------------------------------------------------------------

struct ReebNormalFormData {
  Expr h1, h2;       // radial profiles (variable "r")
  double delta = 1.0;  // tube radius
  int n_index = 1;     // tube sits inside a (2n-1)-manifold; H uses h1^(n-1)
};

struct ProfileReport {
  bool valid = false;
  int violated = 0;           // 0 = none, else 1..4 per the profile conditions
  double witness_r = 0.0;
  std::string note;
};

// Checks h1(0) > 0, h2 ~ r^2, H/r > 0 and h1' < 0 for r > 0 on a radial
// sample set including the r = 0 limits.
ProfileReport binding_profile_check(const ReebNormalFormData& nf,
                                    int radial_samples = 64);

// The tube S^1 x D^2_delta with beta = h1(r) dtheta + h2(r) dphi stored in
// Cartesian coefficients (smooth across r = 0).
struct TubeModel {
  std::shared_ptr<ChartedManifold> tube;       // (theta, u, v)
  std::shared_ptr<ChartedManifold> tube_torus; // (theta, u, v, x, y)
  KForm beta;        // on tube_torus chart (fiber part)
  KForm alpha;       // Bourgeois form beta + phi1 dx - phi2 dy
  ScalarField phi1, phi2;
  ScalarField rho;   // radial bump profile rho(r)
};

TubeModel build_tube_model(const ReebNormalFormData& nf);

struct NormalFormComparison {
  double max_deviation = 0.0;
  std::vector<double> argmax_point;
  double lambda0 = 0.0;            // measured multiple of R_B on the binding
  double max_torus_component_at_binding = 0.0;
  double max_outer_region_error = 0.0;  // vs (cos phi, -sin phi) where rho = 1
  bool pass = false;
};

// lambda(r), mu(r) from the normal-form data (finite limits at r = 0).
double normal_form_lambda(const ReebNormalFormData& nf, double r);
double normal_form_mu(const ReebNormalFormData& nf, double r);

// Assembles the predicted field lambda R_B + mu cos(phi) dx - mu sin(phi) dy
// and compares it against the pointwise Reeb solve on a tube x T^2 grid.
NormalFormComparison predicted_reeb_bourgeois(const ReebNormalFormData& nf,
                                              const std::vector<int>& resolution,
                                              const Tolerances& tol = {},
                                              double mismatch_tol = 1e-6);

}  // namespace contactlab

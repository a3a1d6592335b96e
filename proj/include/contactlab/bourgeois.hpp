#pragma once

#include "contactlab/openbook.hpp"
#include "contactlab/positivity.hpp"

namespace contactlab {

// The Bourgeois construction over a trivial torus bundle: base contact data
// (M, beta), an open book map phi = (phi1, phi2), torus coordinates (x, y)
// with period 2 pi, and a scale eps.
struct BourgeoisModel {
  std::shared_ptr<ChartedManifold> base;
  std::shared_ptr<ChartedManifold> total;  // base x T^2, torus coords "x","y"
  KForm beta_base;
  KForm beta_total;
  KForm alpha;  // beta + eps phi1 dx - eps phi2 dy
  ScalarField phi1, phi2;  // over base coordinate names (valid on both charts)
  double eps = 1.0;
  int ix = -1, iy = -1;  // torus coordinate indices on the total chart
};

BourgeoisModel make_bourgeois(std::shared_ptr<ChartedManifold> base,
                              const std::vector<std::pair<std::string, Expr>>& beta,
                              Expr phi1, Expr phi2, double eps = 1.0);
// Rebuild alpha for a different eps (same charts and data).
KForm bourgeois_alpha(const BourgeoisModel& m, double eps);

struct BourgeoisFormReport {
  PositivityReport contact;
  double domain_condition_min = 0.0;  // min of gamma^dgamma^{n-2}^dphi1^dphi2
  bool domain_condition_checked = false;
  bool pass = false;
};

// Assembles alpha_eps, audits the domain condition (n >= 2) on base frames,
// and runs the contact check on the product grid.
BourgeoisFormReport bourgeois_form(const BourgeoisModel& m,
                                   const std::vector<int>& base_resolution,
                                   const std::vector<int>& total_resolution,
                                   const Tolerances& tol = {}, int threads = 0);

struct Potential {
  VectorField A_x, A_y;  // vertical fields on the total chart
};

// Potential of alpha_total with respect to the product splitting, by the
// pointwise horizontal-lift solve: A_u = (eta-horizontal lift of d_u) - d_u.
Potential potential_of(const BourgeoisModel& m, const KForm& alpha_total,
                       const std::vector<int>& total_resolution,
                       const Tolerances& tol = {});
// The contact-Hamiltonian characterization of the Bourgeois potential:
// A_x = X_{-phi1}, A_y = X_{phi2} with respect to beta on the base.
Potential potential_hamiltonian(const BourgeoisModel& m);
// Max componentwise deviation of the two characterizations at base samples.
double potential_cross_check(const BourgeoisModel& m, const Potential& split,
                             const Potential& ham,
                             const std::vector<int>& total_resolution,
                             const Tolerances& tol = {});

struct CurvatureTerms {
  VectorField dnabla;   // d_nabla A (dx, dy) = d_x A_y - d_y A_x
  VectorField bracket;  // [A_x, A_y] fiberwise
};

CurvatureTerms curvature_terms(const BourgeoisModel& m, const Potential& A);

struct BourgeoisCriterion {
  double max_dnabla = 0.0;          // sup norm of d_nabla A components
  double max_beta_total = 0.0;      // max beta(d_nabla A + [A,A]) (Lerman margin)
  double max_beta_bracket = 0.0;    // max beta([A_x, A_y])
  bool bourgeois = false;           // flat and bracket negative
  bool lerman_contact = false;      // combined field negative
};

BourgeoisCriterion bourgeois_criterion(const BourgeoisModel& m, const Potential& A,
                                       const std::vector<int>& total_resolution,
                                       const Tolerances& tol = {},
                                       double tau_flat = 1e-8);

struct AveragedPotential {
  Potential averaged;
  double max_identity_residual = 0.0;  // avg([A_x,A_y]) vs [avg A_x, avg A_y]
  BourgeoisCriterion criterion;
};

AveragedPotential average_potential(const BourgeoisModel& m, const Potential& A,
                                    int Q, const std::vector<int>& total_resolution,
                                    const Tolerances& tol = {},
                                    double tau_flat = 1e-8, double tau_quad = 1e-8);

struct WeakFillingResult {
  double eps = 0.0;
  WeakDominationReport base;
  WeakDominationReport total;
  std::vector<std::pair<double, double>> eps_history;  // (eps, min margin)
};

// Weak filling of the product: omega_total = omega_M + dx ^ dy; halve eps
// until the product weak-domination check passes.
WeakFillingResult bourgeois_weak_filling_check(
    const BourgeoisModel& m, const KForm& omega_base, const KForm& omega_base_on_total,
    const std::vector<int>& base_resolution, const std::vector<int>& total_resolution,
    const Tolerances& tol = {}, double eps_min = std::pow(2.0, -30), int threads = 0);

}  // namespace contactlab

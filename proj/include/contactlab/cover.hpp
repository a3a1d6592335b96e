#pragma once

#include "contactlab/positivity.hpp"

namespace contactlab {

// A cyclic branched covering with explicitly charted source and target, the
// covering map and deck transformations as coordinate expressions, and the
// upstairs branching locus with its tube data.
struct BranchedCoverSpec {
  std::string name;
  std::shared_ptr<ChartedManifold> source;  // V-hat
  std::shared_ptr<ChartedManifold> target;  // V
  std::vector<ScalarField> map;             // target coords over source chart
  int k = 1;                                // branching index
  double delta = 1.0;                       // tube radius
  ScalarField radial;                       // r, distance to the upstairs locus
  int tube_u = -1, tube_v = -1;             // Cartesian normal coordinates
  SubmanifoldSpec upstairs_locus;
  SubmanifoldSpec downstairs_locus;
  std::vector<std::vector<ScalarField>> deck_maps;  // source -> source
};

// Built-in (a): the local model S^1 x D^2 -> S^1 x D^2, (theta, z) -> (theta, z^k).
BranchedCoverSpec local_model_cover(int k, double delta = 1.0);
// Built-in (b): the cyclic S^3 cover (z1, z2) -> normalize(z1, z2^k), branched
// over the unknot {z2 = 0}.
BranchedCoverSpec s3_cyclic_cover(int k);

struct PullbackResult {
  KForm pulled;  // alpha-hat_0 on the source chart
  AdjustedReport adjusted;
  PositivityReport downstairs_restriction;  // alpha on the downstairs locus
};

// pi^* alpha together with the adjustedness report with respect to the
// upstairs locus; adjusted but not contact is the expected outcome for k >= 2.
PullbackResult pullback_branched(const BranchedCoverSpec& spec, const KForm& alpha,
                                 const std::vector<int>& source_resolution,
                                 const std::vector<int>& target_resolution,
                                 const Tolerances& tol = {});

// alpha-hat_s = alpha-hat_0 + s eps g(r) (u dv - v du); s = 0 returns the
// pullback bitwise.
KForm contactize(const KForm& pulled, const BranchedCoverSpec& spec, double eps,
                 double s);

struct EpsilonSearchResult {
  double eps = 0.0;
  // min contact margin per s value at the returned eps
  std::vector<std::pair<double, double>> margins;
  std::vector<double> s_grid;
};

EpsilonSearchResult epsilon_search(const KForm& pulled, const BranchedCoverSpec& spec,
                                   const std::vector<int>& resolution,
                                   const std::vector<double>& s_grid = {},
                                   const Tolerances& tol = {},
                                   double eps_min = std::pow(2.0, -30),
                                   int threads = 0);

struct DeckInvarianceReport {
  double max_deviation = 0.0;
  std::vector<double> argmax_point;
  int worst_deck = -1;
  bool pass = false;
};

DeckInvarianceReport deck_invariance_check(const KForm& form,
                                           const BranchedCoverSpec& spec,
                                           const std::vector<int>& resolution,
                                           const Tolerances& tol = {});

struct BoundaryFillingResult {
  double eps_contact = 0.0;
  double eps_filling = 0.0;
  KForm omega_hat;
  WeakDominationReport upstairs;
  WeakDominationReport downstairs;
};

// omega-hat = pi^* omega_V + eps d(g(r)(u dv - v du)); halves the two eps
// values jointly until the contactized form is weakly dominated upstairs.
BoundaryFillingResult boundary_filling_form(const KForm& omega_target,
                                            const KForm& alpha_target,
                                            const BranchedCoverSpec& spec,
                                            const std::vector<int>& source_resolution,
                                            const std::vector<int>& target_resolution,
                                            const Tolerances& tol = {},
                                            double eps_min = std::pow(2.0, -30),
                                            int threads = 0);

// g((r/delta)) cutoff of the contactization term, exposed for tests.
ScalarField cover_cutoff(const BranchedCoverSpec& spec);

}  // namespace contactlab

#pragma once

#include <optional>
#include <string>

#include "contactlab/calculus.hpp"

namespace contactlab {

struct GridSpec {
  std::vector<int> resolution;
  long points = 0;
};

struct RefinementStep {
  std::vector<int> resolution;
  double min_margin = 0.0;
};

struct PositivityReport {
  std::string condition;
  GridSpec grid;
  double min_margin = 0.0;
  std::vector<double> argmin_point;
  std::vector<int> argmin_index;
  bool pass = false;
  bool warning = false;
  std::string note;
  std::vector<RefinementStep> history;
  // weak-domination extras
  long degenerate_top_count = 0;  // points whose top tau-coefficient vanished
};

struct RayPolynomial {
  std::vector<double> coeff;  // c0..cn, trailing zeros trimmed on normalize

  void trim(double rel_eps = 1e-14);
  int degree() const { return static_cast<int>(coeff.size()) - 1; }
  double eval(double tau) const;
  RayPolynomial derivative() const;
};

struct RayVerdict {
  bool positive = false;
  double min_value = 0.0;           // inf over tau >= 0 (capped if unbounded below)
  double witness_tau = 0.0;         // where a non-positive value occurs (on failure)
  bool degenerate_top = false;      // top coefficient vanished before decision
  bool capped = false;              // min reported over [0, tau_cap]
};

// Exact decision of P(tau) > 0 for all tau >= 0 (Sturm real-root isolation;
// Chebyshev-sampling fallback near degeneracies raises NumericallyIndeterminate
// on disagreement).
RayVerdict ray_positive(const RayPolynomial& p);

// Dense-sampling oracle used by the tests: tau in {0, 0.01, ..., 100} plus
// the sign of the leading coefficient.
bool ray_positive_dense_oracle(const RayPolynomial& p);

using FrameQuantity =
    std::function<double(EvalContext&, const SamplePoint&, const TangentFrame&)>;

// Shared driver: minimize a frame quantity over a sample grid. Deterministic
// argmin (smallest lexicographic grid index wins ties).
PositivityReport minimize_over_grid(const ChartedManifold& M,
                                    const std::vector<SamplePoint>& grid,
                                    const std::vector<int>& resolution,
                                    const std::string& condition,
                                    const FrameQuantity& quantity,
                                    const Tolerances& tol, int threads = 0);

PositivityReport contact_check(const KForm& alpha, const ChartedManifold& M,
                               const std::vector<int>& resolution,
                               const Tolerances& tol = {}, int threads = 0);

// Runs contact_check at each resolution in turn; the returned report is the
// finest level and carries the full refinement history.
PositivityReport contact_check_refined(const KForm& alpha, const ChartedManifold& M,
                                       const std::vector<std::vector<int>>& levels,
                                       const Tolerances& tol = {}, int threads = 0);

// A codimension-2 zero set given by a distance-like field, its own sample
// family and tangent frames there (built-ins know their loci exactly).
struct SubmanifoldSpec {
  std::string name;
  ScalarField distance;                      // >= 0, zero exactly on Z
  std::vector<std::vector<double>> samples;  // points on Z
  std::vector<TangentFrame> frames;          // oriented frames of TZ
  double exclusion_radius = 0.05;
};

struct AdjustedReport {
  PositivityReport away;         // contact margin at distance >= r_excl from Z
  PositivityReport restriction;  // contact margin of alpha|TZ on Z's frames
  bool pass = false;
};

AdjustedReport adjusted_check(const KForm& alpha, const ChartedManifold& M,
                              const SubmanifoldSpec& Z,
                              const std::vector<int>& resolution,
                              const Tolerances& tol = {}, int threads = 0);

struct WeakDominationReport {
  PositivityReport report;
  long failed_points = 0;
  double worst_witness_tau = 0.0;
};

WeakDominationReport weak_domination_check(const KForm& alpha, const KForm& omega,
                                           const ChartedManifold& M,
                                           const std::vector<int>& resolution,
                                           const Tolerances& tol = {},
                                           int threads = 0);

// The per-point tau-polynomial of alpha ^ (omega + tau dalpha)^power on the
// oriented frame, via the binomial expansion.
RayPolynomial domination_polynomial(const std::vector<KForm>& binomial_terms,
                                    EvalContext& ctx, const TangentFrame& frame);
std::vector<KForm> domination_binomial_terms(const KForm& alpha, const KForm& omega,
                                             int power);

}  // namespace contactlab

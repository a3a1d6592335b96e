#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "contactlab/expr.hpp"
#include "contactlab/jet.hpp"

namespace contactlab {

struct Tolerances {
  double level = 1e-10;   // level-set constraint residual
  double rank = 1e-8;     // relative Jacobian rank threshold
  double tangent = 1e-10; // tangency residual
  double pos = 1e-9;      // strict-positivity margin threshold
};

enum class FactorKind { Box, LevelSet };

// One factor of a (possibly product) manifold. A Box factor is a product of
// circles (periodic) and open intervals (non-periodic); an optional disk pair
// restricts sampling of two non-periodic coordinates to u^2+v^2 < radius^2.
struct BoxFactor {
  std::vector<std::string> names;
  std::vector<bool> periodic;
  std::vector<double> period;  // for periodic coordinates
  std::vector<double> lo, hi;  // for non-periodic coordinates
  std::optional<std::pair<int, int>> disk_pair;  // local coordinate indices
  double disk_radius = 0.0;
};

struct LevelSetFactor {
  std::vector<std::string> names;        // ambient coordinates
  std::vector<Expr> constraints;         // zero set of these
  std::string recipe;                    // sampling parametrization name
};

struct Factor {
  FactorKind kind;
  BoxFactor box;
  LevelSetFactor level;
  int coord_offset = 0;  // offset into the flattened coordinate list
  int ncoords() const;
  int dim() const;
};

struct SamplePoint {
  std::vector<double> x;          // flattened ambient/box coordinates
  std::vector<int> grid_index;    // lexicographic multi-index
  long flat_index = 0;
};

struct TangentFrame {
  std::vector<std::vector<double>> vectors;  // dim() vectors of ncoords() entries
  int orientation_sign = 1;
  double condition = 1.0;
};

class ChartedManifold {
 public:
  static ChartedManifold box(BoxFactor f);
  static ChartedManifold level_set(LevelSetFactor f);
  static ChartedManifold product(std::vector<ChartedManifold> parts);

  // Built-in charts used across the test suite and scenes.
  static ChartedManifold torus(int d, double period = 2.0 * M_PI);
  static ChartedManifold sphere3();  // S^3 in R^4, Hopf-angle sampling recipe
  static ChartedManifold disk2(double radius, const std::string& u = "u",
                               const std::string& v = "v");

  const std::vector<Factor>& factors() const { return factors_; }
  const std::vector<std::string>& coords() const { return coords_; }
  int ncoords() const { return static_cast<int>(coords_.size()); }
  int dim() const;
  int coord_index(const std::string& name) const;

  bool has_level_set() const;
  // Residual of the worst constraint at x (0 for pure boxes).
  double constraint_residual(const std::vector<double>& x) const;
  void check_on_manifold(const std::vector<double>& x, const Tolerances& tol) const;
  // Newton-project x back onto all level-set factors.
  void project(std::vector<double>& x, const Tolerances& tol) const;

  bool coord_periodic(int i) const { return periodic_flat_[i]; }
  double coord_period(int i) const { return period_flat_[i]; }
  // Distance accounting for periodic identifications.
  double distance(const std::vector<double>& a, const std::vector<double>& b) const;

  std::vector<SamplePoint> sample_grid(const std::vector<int>& resolution,
                                       const Tolerances& tol = {}) const;
  int sample_axes() const;  // number of resolution entries expected

  TangentFrame tangent_frame(const SamplePoint& p, const Tolerances& tol = {}) const;
  TangentFrame tangent_frame_at(const std::vector<double>& x,
                                const Tolerances& tol = {}) const;
  // Same frame with jet-valued entries (for differentiating through solves).
  std::vector<std::vector<Jet>> tangent_frame_jets(const std::vector<double>& x,
                                                   int order,
                                                   const Tolerances& tol = {}) const;
  // Alternate deterministic frame (different seed order); used by tests to
  // confirm frame-independence of pointwise solves.
  TangentFrame tangent_frame_alt(const std::vector<double>& x,
                                 const Tolerances& tol = {}) const;

 private:
  std::vector<Factor> factors_;
  std::vector<std::string> coords_;
  std::vector<bool> periodic_flat_;
  std::vector<double> period_flat_;
  void rebuild_flat();
};

}  // namespace contactlab

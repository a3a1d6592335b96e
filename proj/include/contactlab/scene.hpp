#pragma once

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "contactlab/bourgeois.hpp"
#include "contactlab/cover.hpp"
#include "contactlab/openbook.hpp"
#include "contactlab/reeb.hpp"

namespace contactlab {

// Parsed scene file. Sections declare named objects; `command` names the
// default operation run by `contactlab run`.
struct Scene {
  std::string name;
  std::string default_command;
  std::string source_text;

  std::shared_ptr<std::unordered_map<std::string, double>> params =
      std::make_shared<std::unordered_map<std::string, double>>();

  std::map<std::string, std::shared_ptr<ChartedManifold>> manifolds;

  struct FormDecl {
    std::string manifold;
    int degree = 1;
    std::vector<std::pair<std::vector<std::string>, Expr>> coeffs;
  };
  std::map<std::string, FormDecl> forms;

  struct ObdDecl {
    std::string manifold;
    Expr phi1, phi2;
    double r_bind = 0.05;
    std::string binding;  // registered locus name
  };
  std::map<std::string, ObdDecl> openbooks;

  struct BourgeoisDecl {
    std::string base;
    std::vector<std::pair<std::string, Expr>> beta;
    Expr phi1, phi2;
    double eps = 1.0;
    std::vector<std::pair<std::vector<std::string>, Expr>> omega;  // on base
  };
  std::map<std::string, BourgeoisDecl> bourgeois;

  struct CoverDecl {
    std::string model;  // "local" or "s3"
    int k = 2;
    double delta = 1.0;
  };
  std::map<std::string, CoverDecl> covers;

  struct NormalFormDecl {
    Expr h1, h2;
    double delta = 1.0;
    int n = 1;
  };
  std::map<std::string, NormalFormDecl> normal_forms;

  // flat options from the check section plus scene-level defaults
  std::map<std::string, std::string> options;

  std::vector<int> grid;  // scene-level default grid
};

Scene parse_scene_file(const std::string& path);
Scene parse_scene_text(const std::string& text, const std::string& name);

// Build a KForm from a declaration (coefficients may use scene parameters).
KForm build_form(const Scene& scene, const Scene::FormDecl& decl);
ScalarField scene_expr_field(const Scene& scene, const Expr& e);

// Registered binding loci for built-in geometries.
SubmanifoldSpec named_locus(const std::string& name, const ChartedManifold& M);

struct RunOverrides {
  std::vector<int> grid;
  double tol = -1.0;
  double eps = -1.0;
  double eps_min = -1.0;
  int k = -1;
  double delta = -1.0;
  double tmax = -1.0;
  int seeds = -1;
  int threads = 0;
};

// Executes one command against a scene and returns the JSON report text.
// Exit status convention: 0 pass, 1 checked-and-failed, 2 input error,
// 3 numerically indeterminate.
struct RunResult {
  std::string report_json;
  int exit_code = 0;
  bool pass = false;
};

RunResult run_scene(const Scene& scene, const std::string& command,
                    const RunOverrides& overrides = {});

// CSV extraction from a report (header row always present).
std::string emit_plot_data(const std::string& report_json, const std::string& selector);

// Minimal JSON-schema conformance check (type/required/properties/items/enum
// subset); returns an empty string when valid, else the first violation.
std::string validate_report_against_schema(const std::string& report_json,
                                           const std::string& schema_json);

}  // namespace contactlab

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "contactlab/scene.hpp"

namespace py = pybind11;
using namespace contactlab;

namespace {

// Small owning wrapper so python holds the manifold alive alongside forms.
struct PyForm {
  std::shared_ptr<ChartedManifold> M;
  KForm form;
};

PyForm make_form(std::shared_ptr<ChartedManifold> M,
                 const std::map<std::vector<std::string>, std::string>& coeffs,
                 int degree) {
  PyForm f{M, KForm(*M, degree)};
  for (const auto& [names, src] : coeffs) {
    std::vector<int> idx;
    for (const auto& n : names) idx.push_back(M->coord_index(n));
    f.form.set(idx, expr_field(src));
  }
  return f;
}

}  // namespace

PYBIND11_MODULE(_contactlab, m) {
  m.doc() = "numerical verification of explicit contact-geometric constructions";

  py::register_exception<Error>(m, "ContactlabError");

  py::class_<Jet2>(m, "Jet2")
      .def_readonly("value", &Jet2::value)
      .def_readonly("gradient", &Jet2::gradient)
      .def_readonly("hessian", &Jet2::hessian);

  py::class_<Expr>(m, "Expr")
      .def_static("parse", &Expr::parse)
      .def("pretty", &Expr::pretty)
      .def("free_variables", &Expr::free_variables)
      .def("value",
           [](const Expr& e, const std::map<std::string, double>& vars) {
             std::unordered_map<std::string, double> m2(vars.begin(), vars.end());
             return e.value(m2);
           })
      .def("jet2", &Expr::jet2);

  py::class_<ChartedManifold, std::shared_ptr<ChartedManifold>>(m, "ChartedManifold")
      .def_static("torus",
                  [](int d) {
                    return std::make_shared<ChartedManifold>(ChartedManifold::torus(d));
                  })
      .def_static("sphere3",
                  [] {
                    return std::make_shared<ChartedManifold>(ChartedManifold::sphere3());
                  })
      .def("dim", &ChartedManifold::dim)
      .def("coords", &ChartedManifold::coords)
      .def("sample_count",
           [](const ChartedManifold& M, const std::vector<int>& res) {
             return M.sample_grid(res).size();
           });

  py::class_<PyForm>(m, "Form");
  m.def("form", &make_form, py::arg("manifold"), py::arg("coeffs"),
        py::arg("degree") = 1);

  py::class_<PositivityReport>(m, "PositivityReport")
      .def_readonly("condition", &PositivityReport::condition)
      .def_readonly("min_margin", &PositivityReport::min_margin)
      .def_readonly("argmin_point", &PositivityReport::argmin_point)
      .def_readonly("pass_flag", &PositivityReport::pass);

  m.def(
      "contact_check",
      [](const PyForm& f, const std::vector<int>& res) {
        return contact_check(f.form, f.form.manifold(), res);
      },
      py::arg("form"), py::arg("grid"));

  m.def(
      "weak_domination_check",
      [](const PyForm& alpha, const PyForm& omega, const std::vector<int>& res) {
        return weak_domination_check(alpha.form, omega.form, alpha.form.manifold(), res)
            .report;
      },
      py::arg("alpha"), py::arg("omega"), py::arg("grid"));

  m.def(
      "reeb_values",
      [](const PyForm& alpha, const std::vector<double>& point) {
        VectorField R = reeb_vector_field(alpha.form);
        EvalContext ctx(alpha.form.manifold(), point);
        return vector_values(R, ctx);
      },
      py::arg("alpha"), py::arg("point"));

  m.def(
      "ray_positive",
      [](const std::vector<double>& coeffs) {
        RayPolynomial p{coeffs};
        RayVerdict v = ray_positive(p);
        py::dict d;
        d["positive"] = v.positive;
        d["min_value"] = v.min_value;
        d["witness_tau"] = v.witness_tau;
        return d;
      },
      py::arg("coefficients"));

  m.def(
      "run_scene_file",
      [](const std::string& path, const std::string& command, int threads) {
        Scene scene = parse_scene_file(path);
        RunOverrides ov;
        ov.threads = threads;
        const std::string cmd =
            command.empty() ? (scene.default_command.empty() ? "check-contact"
                                                             : scene.default_command)
                            : command;
        RunResult r = run_scene(scene, cmd, ov);
        py::dict d;
        d["report"] = r.report_json;
        d["exit_code"] = r.exit_code;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("path"), py::arg("command") = std::string(), py::arg("threads") = 0);

  m.def("emit_plot_data", &emit_plot_data, py::arg("report_json"), py::arg("selector"));

  m.attr("__version__") = "0.1.0";
}

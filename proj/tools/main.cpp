#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "contactlab/scene.hpp"

using namespace contactlab;

namespace {

struct CliOptions {
  std::string scene_path;
  std::vector<int> grid;
  double tol = -1.0;
  double eps = -1.0;
  double eps_min = -1.0;
  int k = -1;
  double delta = -1.0;
  double tmax = -1.0;
  int seeds = -1;
  int threads = 0;
  std::string report_path;
  std::vector<std::string> csv;  // SELECTOR=PATH
};

void add_common(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("scene", opt.scene_path, "scene file")->required();
  cmd->add_option("--grid", opt.grid, "grid resolution (one value per axis, or a single value for all axes)");
  cmd->add_option("--tol", opt.tol, "strict-positivity threshold override");
  cmd->add_option("--eps", opt.eps, "epsilon override");
  cmd->add_option("--eps-min", opt.eps_min, "epsilon search floor");
  cmd->add_option("--k", opt.k, "branching index override");
  cmd->add_option("--delta", opt.delta, "tube radius override");
  cmd->add_option("--tmax", opt.tmax, "flow horizon for orbit search");
  cmd->add_option("--seeds", opt.seeds, "number of orbit seeds");
  cmd->add_option("--threads", opt.threads, "worker threads (0 = hardware)");
  cmd->add_option("--report", opt.report_path, "write the JSON report here");
  cmd->add_option("--csv", opt.csv, "emit a CSV table: SELECTOR=PATH");
}

int run(const std::string& command, const CliOptions& opt) {
  RunResult result;
  try {
    Scene scene = parse_scene_file(opt.scene_path);
    const std::string cmd =
        command == "run" ? (scene.default_command.empty() ? "check-contact"
                                                          : scene.default_command)
                         : command;
    RunOverrides ov;
    ov.grid = opt.grid;
    ov.tol = opt.tol;
    ov.eps = opt.eps;
    ov.eps_min = opt.eps_min;
    ov.k = opt.k;
    ov.delta = opt.delta;
    ov.tmax = opt.tmax;
    ov.seeds = opt.seeds;
    ov.threads = opt.threads;
    result = run_scene(scene, cmd, ov);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::SceneParseError ? 2 : 2;
  }

  if (!opt.report_path.empty()) {
    std::ofstream out(opt.report_path);
    out << result.report_json << "\n";
  }
  for (const auto& sel : opt.csv) {
    const size_t eq = sel.find('=');
    if (eq == std::string::npos) {
      std::cerr << "--csv expects SELECTOR=PATH\n";
      return 2;
    }
    try {
      const std::string data = emit_plot_data(result.report_json, sel.substr(0, eq));
      std::ofstream out(sel.substr(eq + 1));
      out << data;
    } catch (const Error& e) {
      std::cerr << e.what() << "\n";
      return 2;
    }
  }
  std::cout << result.report_json << "\n";
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contactlab: sampled verification of explicit contact-geometric constructions"};
  app.require_subcommand(1);

  static const char* commands[] = {
      "run",            "check-contact", "check-adjusted", "check-weak",
      "obd-check",      "obd-roundtrip", "bourgeois",      "bourgeois-fill",
      "cover-contactize", "cover-fill",  "reeb",           "orbits",
      "normal-form"};

  std::map<std::string, CliOptions> opts;
  for (const char* c : commands) {
    CLI::App* sub = app.add_subcommand(c);
    add_common(sub, opts[c]);
  }

  CLI11_PARSE(app, argc, argv);

  for (const char* c : commands)
    if (app.got_subcommand(c)) return run(c, opts[c]);
  std::cerr << "no command\n";
  return 2;
}

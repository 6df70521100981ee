#include "cli.hpp"

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "vpsfem/analysis.hpp"
#include "vpsfem/io.hpp"
#include "vpsfem/parallel.hpp"

namespace vpsfem::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kCheckFailed = 2;

struct Problem {
  SpacePtr space;
  InitialData initial;
  ModelCoefficients coeffs;
};

Problem setup_problem(const RunConfig& cfg) {
  auto mesh = std::make_shared<const PeriodicMesh>(build_periodic_unit_square_mesh(cfg.mesh_n));
  auto space = std::make_shared<const FESpace>(mesh);
  InitialData init = initial_data_for(cfg, space);
  ModelCoefficients coeffs = coefficients_for(cfg, init.phi);
  return {std::move(space), std::move(init), std::move(coeffs)};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out.flush()) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string snapshot_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%06d.vtk", step);
  return buf;
}

int cmd_simulate(const std::string& config_path, const std::string& out_override) {
  const RunConfig cfg = load_config(config_path);
  const fs::path out = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
  fs::create_directories(out);
  write_text(out / "config.json", serialize_config(cfg));

  const Problem prob = setup_problem(cfg);
  const TimeGrid grid = cfg.grid();
  SimulationOptions opts;
  opts.store_fields = false;
  opts.threads = thread_count_from_env();
  opts.on_step = [&](const StepView& v) {
    const bool at_stride = cfg.snapshot_stride > 0 && v.step % cfg.snapshot_stride == 0;
    if (v.step == 0 || v.step == grid.N || at_stride) {
      write_snapshot_vtk(out / snapshot_name(v.step), v.phi, v.q, v.mu);
    }
  };
  const Trajectory traj = run_simulation(prob.space, prob.coeffs, grid, prob.initial.phi,
                                         prob.initial.q, cfg.newton, opts);
  write_diagnostics_csv(out / "diagnostics.csv", traj.diagnostics);

  const StructureReport rep = structure_report(traj);
  std::cout << "simulated " << grid.N << " steps on n=" << cfg.mesh_n << " ("
            << prob.space->dof_count() << " dofs per field), output in " << out.string() << '\n'
            << rep.to_string();
  return kOk;
}

int cmd_check(const std::string& config_path) {
  const RunConfig cfg = load_config(config_path);
  const Problem prob = setup_problem(cfg);
  SimulationOptions opts;
  opts.store_fields = false;
  opts.threads = thread_count_from_env();
  const Trajectory traj = run_simulation(prob.space, prob.coeffs, cfg.grid(), prob.initial.phi,
                                         prob.initial.q, cfg.newton, opts);
  const StructureReport rep = structure_report(traj);
  std::cout << rep.to_string();
  return rep.passed() ? kOk : kCheckFailed;
}

int cmd_validate(const std::string& config_path) {
  const RunConfig cfg = load_config(config_path);
  const Problem prob = setup_problem(cfg);
  const ValidationReport rep = validate_assumptions(prob.coeffs, 0.0, 1.0, 2001);
  std::cout << "coefficients '" << prob.coeffs.name << "' on [0, 1]: f1 = " << prob.coeffs.f1
            << ", alpha = " << prob.coeffs.alpha << '\n'
            << rep.to_string();
  return rep.passed() ? kOk : kCheckFailed;
}

int cmd_converge(const std::string& config_path, int levels, const std::string& out_override) {
  const RunConfig cfg = load_config(config_path);
  const fs::path out = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
  fs::create_directories(out);

  ConvergenceSetup setup;
  setup.base_n = cfg.convergence_base_n;
  setup.k_max = levels;
  setup.T = cfg.T;
  setup.threads = thread_count_from_env();
  setup.simulate = [&cfg, &setup](const SpacePtr& space, const TimeGrid& grid) {
    const InitialData init = initial_data_for(cfg, space);
    const ModelCoefficients coeffs = coefficients_for(cfg, init.phi);
    SimulationOptions opts;
    opts.threads = setup.threads > 1 ? 0 : setup.threads;
    return run_simulation(space, coeffs, grid, init.phi, init.q, cfg.newton, opts);
  };
  setup.on_level = [](const ConvergenceLevel& lv) {
    std::cerr << "level k=" << lv.k << " n=" << lv.n << " steps=" << lv.steps << " done\n";
  };
  const ConvergenceReport rep = run_convergence_study(setup);
  write_text(out / "convergence.txt", rep.to_text());
  write_text(out / "convergence.csv", rep.to_csv());
  std::cout << rep.to_text();
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Structure-preserving P2 finite element simulator for viscoelastic phase separation",
               "vpsfem"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  int levels = 3;

  auto* simulate = app.add_subcommand("simulate", "Run a simulation and export CSV and VTK");
  simulate->add_option("--config", config, "JSON run configuration")->required();
  simulate->add_option("--out", out, "Output directory (overrides output_dir)");

  auto* converge = app.add_subcommand("converge", "Refinement study with error and eoc tables");
  converge->add_option("--config", config, "JSON run configuration")->required();
  converge->add_option("--levels", levels, "Finest level index k_max")
      ->check(CLI::PositiveNumber);
  converge->add_option("--out", out, "Output directory (overrides output_dir)");

  auto* check = app.add_subcommand("check", "Run and verify mass conservation and energy identity");
  check->add_option("--config", config, "JSON run configuration")->required();

  auto* validate = app.add_subcommand("validate", "Check the coefficient assumptions");
  validate->add_option("--config", config, "JSON run configuration")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kRuntimeError;
  }

  try {
    if (*simulate) return cmd_simulate(config, out);
    if (*converge) return cmd_converge(config, levels, out);
    if (*check) return cmd_check(config);
    if (*validate) return cmd_validate(config);
  } catch (const NewtonFailure& e) {
    std::cerr << "error: " << e.what() << " (step " << e.step() << ", residual " << e.residual()
              << ", " << e.iterations() << " iterations)\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kRuntimeError;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace vpsfem::cli

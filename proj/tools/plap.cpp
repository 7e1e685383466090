// plap: command-line front end. Exit codes: 0 ok, 1 usage or input error,
// 2 non-convergence, 3 acceptance failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plap/config.hpp"
#include "plap/field_io.hpp"
#include "plap/geometry.hpp"
#include "plap/kernels.hpp"
#include "plap/pipeline.hpp"
#include "plap/poincare.hpp"
#include "plap/solver.hpp"
#include "plap/stability.hpp"

namespace fs = std::filesystem;
using namespace plap;

namespace {

struct Args {
  std::string config;
  std::string in;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string phis;
  std::vector<double> radii;
  std::string bound;
};

ExperimentConfig config_or_default(const Args& a) {
  return a.config.empty() ? ExperimentConfig{} : load_config(a.config);
}

// Writes to --out when given, stdout otherwise.
void emit(const Args& a, const std::string& text) {
  if (a.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + a.out + " for writing");
  out << text;
}

// Model from the config, rebuilt on the grid of the input field.
ModelBundle model_for(const ExperimentConfig& c, const ScalarField& u) {
  return make_experiment(c, u.grid()).model;
}

int cmd_make_example(const Args& a) {
  if (a.out.empty()) throw CLI::ValidationError("--out", "required");
  const ExperimentConfig c = config_or_default(a);
  const Experiment e = make_experiment(c, c.make_grid());
  write_field(fs::path(a.out), e.reference);
  return exit_ok;
}

int cmd_solve(const Args& a) {
  if (a.out.empty()) throw CLI::ValidationError("--out", "required");
  ExperimentConfig c = load_config(a.config);
  c.stages = {"make-model", "solve"};
  const fs::path dir = fs::path(a.out).parent_path().empty() ? fs::path(".") : fs::path(a.out).parent_path();
  const fs::path work = dir / (fs::path(a.out).filename().string() + ".run");
  PipelineOptions po;
  po.out_dir = work;
  po.threads = a.threads;
  const PipelineResult r = run_pipeline(c, po);
  if (fs::exists(work / "u.plapfield")) fs::copy_file(work / "u.plapfield", a.out, fs::copy_options::overwrite_existing);
  if (fs::exists(work / "solve.csv")) {
    std::ifstream in(work / "solve.csv");
    std::cout << in.rdbuf();
  }
  fs::remove_all(work);
  if (r.exit_code != exit_ok) std::cerr << "plap solve: " << r.message << '\n';
  return r.exit_code;
}

int cmd_stability(const Args& a) {
  const ExperimentConfig c = config_or_default(a);
  const ScalarField u = read_field(fs::path(a.in));
  const StencilMatrix A = quadratic_form(u, model_for(c, u));
  StabilityReport r = min_rayleigh(A, c.eigen);
  r.monotone_direction_found = monotone_direction(u);
  const double tol = c.tolerances.tol_stability > 0.0 ? c.tolerances.tol_stability : default_tol_stability(A);
  emit(a, stability_table(r, tol).str());
  return r.converged ? exit_ok : exit_nonconvergence;
}

int cmd_geometry(const Args& a) {
  const ExperimentConfig c = config_or_default(a);
  const ScalarField u = read_field(fs::path(a.in));
  GeometryOptions go;
  go.theta_grad = c.tolerances.theta_grad;
  const GeometryFields geo = compute_geometry(u, go);
  const GeometrySummary s = summarize_geometry(u, geo, c.tolerances);
  const fs::path dir = a.out.empty() ? fs::path(".") : fs::path(a.out);
  fs::create_directories(dir);
  write_geometry_fields(geo, dir / "geometry_", c.output.fields);
  geometry_table(s).write(dir / "geometry.csv");
  std::cout << geometry_table(s).str();
  return exit_ok;
}

int cmd_verify_poincare(const Args& a) {
  ExperimentConfig c = config_or_default(a);
  if (a.seed) c.poincare.seed = *a.seed;
  if (!a.phis.empty()) c.poincare.phis = a.phis;
  const ScalarField u = read_field(fs::path(a.in));
  const auto suite = parse_phi_suite(c.poincare.phis, u.grid(), c.poincare.seed);
  PoincareOptions po;
  po.geometry.theta_grad = c.tolerances.theta_grad;
  po.tol_stability = c.tolerances.tol_stability;
  po.tol_poincare = c.tolerances.tol_poincare;
  const PoincareSuiteResult r = verify_poincare(u, model_for(c, u), suite, po);
  emit(a, poincare_table(r, c.tolerances.tol_poincare).str());
  if (!r.hypothesis_holds) std::cerr << "plap verify-poincare: stability hypothesis failed\n";
  return r.all_pass && r.hypothesis_holds ? exit_ok : exit_acceptance;
}

int cmd_energy_growth(const Args& a) {
  ExperimentConfig c = config_or_default(a);
  if (!a.radii.empty()) c.growth.radii = a.radii;
  if (!a.bound.empty()) c.growth.bound = parse_growth_bound(a.bound);
  const ScalarField u = read_field(fs::path(a.in));
  const GrowthReport r =
      energy_growth(u, model_for(c, u), c.growth.radii, c.growth.bound, c.growth.sigma, c.growth.slope_tol);
  emit(a, growth_table(r).str());
  if (!a.out.empty()) {
    std::ofstream dat(fs::path(a.out).replace_extension(".dat"), std::ios::binary);
    dat << growth_gnuplot(r);
  }
  return r.violates ? exit_acceptance : exit_ok;
}

int cmd_pipeline(const Args& a) {
  const ExperimentConfig c = load_config(a.config);
  PipelineOptions po;
  if (!a.out.empty()) po.out_dir = fs::path(a.out);
  po.seed = a.seed;
  po.threads = a.threads;
  const PipelineResult r = run_pipeline(c, po);
  for (const auto& row : r.acceptance) {
    std::cout << (row.pass ? "PASS " : "FAIL ") << row.stage << ": " << row.check << " (value "
              << csv_number(row.value) << ", threshold " << csv_number(row.threshold) << ")\n";
  }
  for (const auto& note : r.notes) std::cout << "INFO " << note << '\n';
  std::cout << "output: " << r.out_dir.string() << '\n';
  if (r.exit_code != exit_ok) std::cerr << "plap pipeline: stage " << r.failed_stage << ": " << r.message << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p(x)-Laplacian fibered-nonlinearity laboratory"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);
  Args a;
  app.add_option("--threads", a.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);

  auto add_common = [&](CLI::App* sub, bool needs_config, bool needs_in) {
    auto* c = sub->add_option("--config", a.config, "experiment config file")->check(CLI::ExistingFile);
    if (needs_config) c->required();
    if (needs_in) sub->add_option("--in", a.in, "input field dump")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a.out, "output path");
    sub->add_option("--threads", a.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  };

  auto* solve = app.add_subcommand("solve", "solve the configured problem, write the field dump");
  add_common(solve, true, false);
  auto* stability = app.add_subcommand("stability", "smallest eigenvalue of the second variation (CSV row)");
  add_common(stability, true, true);
  auto* geometry = app.add_subcommand("geometry", "S, T, U, K^2 and mask dumps plus a CSV summary");
  add_common(geometry, false, true);
  auto* poincare = app.add_subcommand("verify-poincare", "weighted Poincare inequality, one CSV row per phi");
  add_common(poincare, true, true);
  poincare->add_option("--phis", a.phis, "phi suite, e.g. 'random:20; cutoff:4,8'");
  poincare->add_option("--seed", a.seed, "seed of random phi suites");
  auto* growth = app.add_subcommand("energy-growth", "energy on balls B_R and fitted growth exponent");
  add_common(growth, false, true);
  growth->add_option("--radii", a.radii, "radii r1,r2,...")->delimiter(',');
  growth->add_option("--bound", a.bound, "R^2, R^(n-1) or R^(n-sigma)");
  auto* example = app.add_subcommand("make-example", "write the configured reference field");
  add_common(example, true, false);
  auto* pipeline = app.add_subcommand("pipeline", "run every stage and write a manifest");
  add_common(pipeline, true, false);
  pipeline->add_option("--seed", a.seed, "seed of random phi suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }
  kernels::set_threads(a.threads);

  try {
    if (*solve) return cmd_solve(a);
    if (*stability) return cmd_stability(a);
    if (*geometry) return cmd_geometry(a);
    if (*poincare) return cmd_verify_poincare(a);
    if (*growth) return cmd_energy_growth(a);
    if (*example) return cmd_make_example(a);
    if (*pipeline) return cmd_pipeline(a);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "plap: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "plap: " << e.what() << '\n';
    return exit_usage;
  }
  return exit_usage;
}

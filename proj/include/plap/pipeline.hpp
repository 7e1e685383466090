#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plap/config.hpp"
#include "plap/geometry.hpp"
#include "plap/grid.hpp"
#include "plap/model.hpp"
#include "plap/poincare.hpp"
#include "plap/solver.hpp"
#include "plap/stability.hpp"

namespace plap {

std::string tool_version();

/// Lower-case hex SHA-256 of a byte string / file.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Model and reference field built from a config on a given grid.
struct Experiment {
  ModelBundle model;
  /// Dirichlet data (example, nonlinearity) or the prescribed field
  /// (counterexample).
  ScalarField reference;
  /// Closed-form solution (example source only).
  std::function<double(std::span<const double>)> exact;
  /// False for the counterexample, which solves no PDE.
  bool has_pde = true;
  std::string description;
};

/// Throws std::invalid_argument when the model is inadmissible (for instance
/// p(x) < 2 somewhere).
Experiment make_experiment(const ExperimentConfig& config, const Grid& grid);

// Fixed-format CSV. Numbers are printed with %.17g so identical doubles give
// identical bytes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;
};
std::string csv_number(double v);
std::string csv_bool(bool v);

struct AcceptanceRow {
  std::string stage;
  std::string check;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// Per-stage results, each paired with a CSV rendering.
CsvTable solve_table(const SolveReport& report, std::optional<double> max_error);
CsvTable stability_table(const StabilityReport& report, double tol_stability);
CsvTable poincare_table(const PoincareSuiteResult& result, double tol_poincare);
CsvTable growth_table(const GrowthReport& report);
std::string growth_gnuplot(const GrowthReport& report);

struct GeometrySummary {
  std::size_t region_points = 0;
  std::size_t core_points = 0;
  double theta_grad = 0.0;
  double h = 0.0;
  double min_S = 0.0;
  double min_T = 0.0;
  IdentityReport identity;
  ParallelismReport parallelism;
  OmegaFit omega;
  bool omega_constant = false;
};
GeometrySummary summarize_geometry(const ScalarField& u, const GeometryFields& geo,
                                   const ToleranceSection& tolerances);
CsvTable geometry_table(const GeometrySummary& summary);
/// Writes S, T, U, Ksq and mask (1 on the region, 0 elsewhere) as
/// `<prefix>S.plapfield` etc. in the requested formats; returns the paths.
std::vector<std::filesystem::path> write_geometry_fields(const GeometryFields& geo,
                                                         const std::filesystem::path& prefix,
                                                         FieldFormat format);
std::vector<std::filesystem::path> write_field_as(const ScalarField& field, const std::filesystem::path& stem,
                                                  FieldFormat format);

struct PipelineOptions {
  /// Overrides output.dir when set.
  std::optional<std::filesystem::path> out_dir;
  /// Overrides poincare.seed when set.
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

enum ExitCode { exit_ok = 0, exit_usage = 1, exit_nonconvergence = 2, exit_acceptance = 3 };

struct PipelineResult {
  int exit_code = exit_ok;
  std::vector<AcceptanceRow> acceptance;
  std::vector<std::string> stages_run;
  /// Informational `key=value` findings (parallelism, ω constancy).
  std::vector<std::string> notes;
  /// Stage that stopped the run, empty on success.
  std::string failed_stage;
  std::string message;
  std::filesystem::path out_dir;
};

/// make-model → solve → stability → geometry → verify-poincare → energy-growth
/// (the counterexample runs make-model and geometry only). Every stage writes
/// its CSVs before the next starts, so a failing run keeps partial output.
/// The manifest (manifest.json) records the tool version, the SHA-256 of the
/// canonical config text and of every file written, per stage.
PipelineResult run_pipeline(const ExperimentConfig& config, const PipelineOptions& options = {});

}  // namespace plap

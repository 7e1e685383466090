#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plap/geometry.hpp"
#include "plap/grid.hpp"
#include "plap/model.hpp"
#include "plap/poincare.hpp"
#include "plap/solver.hpp"
#include "plap/stability.hpp"

namespace plap {

// Sectioned `key = value` text (INI). Lists are comma-separated, functions use
// the Profile / XFunction grammar of profile.hpp. Unknown sections or keys are
// errors. The full key list is in docs/formats.md.

struct GridSection {
  int m = 1;
  int fiber_dims = 1;
  std::vector<int> sizes{129, 129};
  std::vector<Interval> extents{{-8.0, 8.0}, {-8.0, 8.0}};
  bool operator==(const GridSection&) const = default;
};

enum class ModelSource { example, nonlinearity, counterexample };
std::string to_string(ModelSource source);
ModelSource parse_model_source(const std::string& name);

struct ModelSection {
  /// example: manufactured pair from example.*; nonlinearity: f(x,u) =
  /// f_scale(x) f(u) with Dirichlet data β γ(ω·y) from example.*;
  /// counterexample: the prescribed τ(x) tanh(ω(x)·y) field (no PDE).
  ModelSource source = ModelSource::example;
  XFunction alpha = XFunction::constant(1.0);
  XFunction p = XFunction::constant(2.0);
  Profile f = Profile::constant(0.0);
  XFunction f_scale = XFunction::constant(1.0);
  XFunction beta = XFunction::constant(1.0);
  Profile gamma = Profile::tanh();
  std::vector<double> omega{1.0};
  double t0 = 0.0;
  bool operator==(const ModelSection&) const = default;
};

struct ToleranceSection {
  /// <= 0: relative threshold 1e-4 max |∇_y u|.
  double theta_grad = 0.0;
  /// <= 0: default_tol_stability of the form.
  double tol_stability = 0.0;
  double tol_poincare = 1e-6;
  /// S, T >= -tol_geom · h on the core.
  double tol_geom = 1.0;
  double tol_identity = 5e-2;
  double tol_par = 1e-2;
  /// fit_omega constancy score (radians) below which ω counts as constant.
  double tol_omega = 1e-3;
  bool operator==(const ToleranceSection&) const = default;
};

struct PoincareSection {
  std::string phis = "random:20";
  std::uint64_t seed = 1;
  bool operator==(const PoincareSection&) const = default;
};

struct GrowthSection {
  std::vector<double> radii{2.0, 4.0, 8.0};
  GrowthBound bound = GrowthBound::n_minus_1;
  double sigma = 1.0;
  double slope_tol = 0.1;
  bool operator==(const GrowthSection&) const = default;
};

enum class FieldFormat { binary, csv, both };
std::string to_string(FieldFormat format);

struct OutputSection {
  std::string dir = "plap-out";
  FieldFormat fields = FieldFormat::binary;
  bool operator==(const OutputSection&) const = default;
};

struct ExperimentConfig {
  GridSection grid;
  ModelSection model;
  SolverOptions solver;
  EigenOptions eigen;
  ToleranceSection tolerances;
  PoincareSection poincare;
  GrowthSection growth;
  OutputSection output;
  /// Pipeline stages in order; empty means all that apply to the source.
  std::vector<std::string> stages;

  Grid make_grid() const;
  /// Throws std::invalid_argument naming the key on out-of-range values.
  void validate() const;
};

bool operator==(const SolverOptions& a, const SolverOptions& b);
bool operator==(const EigenOptions& a, const EigenOptions& b);
bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Throws std::invalid_argument with the section and key on any error.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Canonical text: every key, fixed order, doubles with 17 significant digits.
std::string emit_config(const ExperimentConfig& config);

}  // namespace plap

#include "plap/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <openssl/evp.h>

#include "plap/field_io.hpp"
#include "plap/kernels.hpp"

#ifndef PLAP_VERSION
#define PLAP_VERSION "0.0.0"
#endif

namespace plap {
namespace fs = std::filesystem;

std::string tool_version() { return "plap " PLAP_VERSION; }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return sha256_hex(bytes.str());
}

Experiment make_experiment(const ExperimentConfig& config, const Grid& grid) {
  const ModelSection& ms = config.model;
  Experiment e;
  Coefficients coefficients{ms.alpha, ms.p};
  if (ms.source == ModelSource::counterexample) {
    coefficients.validate(grid);
    e.reference = counterexample(grid).u;
    e.model = ModelBundle{coefficients, Nonlinearity::zero(), grid, config.solver.eps_reg};
    e.has_pde = false;
    e.description = "counterexample tau(x) tanh(omega(x).y)";
    return e;
  }
  ExampleSpec spec;
  spec.beta = ms.beta;
  spec.gamma = ms.gamma;
  spec.omega = ms.omega;
  spec.coefficients = coefficients;
  spec.t0 = ms.t0;
  if (ms.source == ModelSource::example) {
    ExactExample ex = exact_example(spec, grid);
    e.model = std::move(ex.model);
    e.model.eps_reg = config.solver.eps_reg;
    e.reference = std::move(ex.u);
    e.exact = std::move(ex.u_exact);
    e.description = "manufactured beta(x) gamma(omega.y)";
  } else {
    coefficients.validate(grid);
    e.model = ModelBundle{coefficients, Nonlinearity::from_profile(ms.f, ms.f_scale, ms.t0), grid,
                          config.solver.eps_reg};
    e.model.validate();
    const int m = grid.m();
    e.reference = ScalarField::sample(grid, [&](std::span<const double> X) { return spec.value(X, m); });
    e.description = "f(x,u) = " + ms.f_scale.to_string() + " * " + ms.f.to_string();
  }
  return e;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_bool(bool v) { return v ? "true" : "false"; }

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      // Quote cells holding separators; descriptors may contain commas.
      if (cells[i].find_first_of(",\"\n") != std::string::npos) {
        out += '"';
        for (char c : cells[i]) out += c == '"' ? std::string("\"\"") : std::string(1, c);
        out += '"';
      } else {
        out += cells[i];
      }
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

void CsvTable::write(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << str();
}

CsvTable solve_table(const SolveReport& report, std::optional<double> max_error) {
  CsvTable t{{"iterations", "linear_iterations", "final_residual", "converged", "max_error", "energy"}, {}};
  t.add({std::to_string(report.iterations), std::to_string(report.linear_iterations),
         csv_number(report.final_residual_norm), csv_bool(report.converged),
         max_error ? csv_number(*max_error) : std::string(),
         report.energy_trace.empty() ? std::string() : csv_number(report.energy_trace.back())});
  return t;
}

CsvTable stability_table(const StabilityReport& report, double tol_stability) {
  std::string verdict = "unconverged";
  if (report.converged) verdict = is_stable(report, tol_stability) ? "stable" : "unstable";
  CsvTable t{{"lambda_min", "iterations", "residual", "verdict", "tol_stability", "monotone_axis"}, {}};
  t.add({csv_number(report.min_rayleigh), std::to_string(report.eigen_iterations),
         csv_number(report.residual_of_eigenpair), verdict, csv_number(tol_stability),
         report.monotone_direction_found ? std::to_string(*report.monotone_direction_found) : std::string()});
  return t;
}

CsvTable poincare_table(const PoincareSuiteResult& result, double tol_poincare) {
  CsvTable t{{"phi", "lhs", "rhs", "slack", "scale", "S_term", "K_term", "L_term", "T_term", "rhs_outside_region",
              "hypothesis_failed", "pass"},
             {}};
  for (const auto& r : result.reports) {
    t.add({r.phi_descriptor, csv_number(r.lhs), csv_number(r.rhs), csv_number(r.slack), csv_number(r.scale()),
           csv_number(r.breakdown.S_term), csv_number(r.breakdown.K_term), csv_number(r.breakdown.L_term),
           csv_number(r.breakdown.T_term), csv_number(r.rhs_outside_region), csv_bool(r.hypothesis_failed),
           csv_bool(r.slack >= -tol_poincare * r.scale())});
  }
  return t;
}

CsvTable growth_table(const GrowthReport& report) {
  CsvTable t{{"R", "energy", "fitted_slope", "bound", "bound_exponent", "violates"}, {}};
  for (std::size_t k = 0; k < report.radii.size(); ++k) {
    t.add({csv_number(report.radii[k]), csv_number(report.energies[k]),
           report.slope_defined ? csv_number(report.fitted_slope) : std::string("undefined"),
           to_string(report.bound_kind), csv_number(report.bound_exponent), csv_bool(report.violates)});
  }
  return t;
}

std::string growth_gnuplot(const GrowthReport& report) {
  std::string out = "# log(R) log(E)\n";
  for (std::size_t k = 0; k < report.radii.size(); ++k) {
    out += csv_number(std::log(report.radii[k])) + " " + csv_number(std::log(report.energies[k])) + "\n";
  }
  return out;
}

GeometrySummary summarize_geometry(const ScalarField& u, const GeometryFields& geo,
                                   const ToleranceSection& tolerances) {
  GeometrySummary s;
  s.region_points = geo.region_mask.count();
  s.core_points = geo.core_mask.count();
  s.theta_grad = geo.theta_grad;
  s.h = u.grid().max_spacing();
  s.min_S = core_min(geo.S, geo);
  s.min_T = core_min(geo.T, geo);
  s.identity = verify_identity_SZ(u, geo);
  s.parallelism = check_parallelism(u, geo, tolerances.tol_par);
  s.omega = fit_omega(u, geo);
  s.omega_constant = s.omega.constancy_score <= tolerances.tol_omega;
  return s;
}

CsvTable geometry_table(const GeometrySummary& s) {
  CsvTable t{{"metric", "value"}, {}};
  t.add({"region_points", std::to_string(s.region_points)});
  t.add({"core_points", std::to_string(s.core_points)});
  t.add({"theta_grad", csv_number(s.theta_grad)});
  t.add({"h", csv_number(s.h)});
  t.add({"min_S", csv_number(s.min_S)});
  t.add({"min_T", csv_number(s.min_T)});
  t.add({"identity_max_relative_defect", csv_number(s.identity.max_relative_defect)});
  t.add({"identity_max_abs_defect", csv_number(s.identity.max_abs_defect)});
  t.add({"parallelism", csv_bool(s.parallelism.verdict)});
  t.add({"parallelism_max_ratio", csv_number(s.parallelism.max_ratio)});
  t.add({"omega_constancy_score", csv_number(s.omega.constancy_score)});
  t.add({"omega_constant", csv_bool(s.omega_constant)});
  t.add({"omega_symmetry_defect", csv_number(s.omega.symmetry_defect)});
  t.add({"omega_skipped_slices", std::to_string(s.omega.skipped_slices)});
  return t;
}

std::vector<fs::path> write_field_as(const ScalarField& field, const fs::path& stem, FieldFormat format) {
  std::vector<fs::path> written;
  if (format != FieldFormat::csv) {
    fs::path p = stem;
    p += ".plapfield";
    write_field(p, field);
    written.push_back(p);
  }
  if (format != FieldFormat::binary) {
    fs::path p = stem;
    p += ".csv";
    write_field_csv(p, field);
    written.push_back(p);
  }
  return written;
}

std::vector<fs::path> write_geometry_fields(const GeometryFields& geo, const fs::path& prefix, FieldFormat format) {
  ScalarField mask(geo.S.grid());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = geo.region_mask.contains(i) ? 1.0 : 0.0;
  std::vector<fs::path> written;
  const std::pair<const char*, const ScalarField*> fields[] = {
      {"S", &geo.S}, {"T", &geo.T}, {"U", &geo.U}, {"Ksq", &geo.Ksq}, {"mask", &mask}};
  for (const auto& [name, field] : fields) {
    fs::path stem = prefix;
    stem += name;
    for (auto& p : write_field_as(*field, stem, format)) written.push_back(p);
  }
  return written;
}

namespace {

struct StageRecord {
  std::string name;
  std::string status;
  std::vector<fs::path> files;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& dir, const std::string& config_text, const std::vector<StageRecord>& stages,
                    const PipelineResult& result) {
  nlohmann::ordered_json j;
  j["tool"] = tool_version();
  j["created_utc"] = utc_now();
  j["threads"] = kernels::max_threads();
  j["config_sha256"] = sha256_hex(config_text);
  j["exit_code"] = result.exit_code;
  j["failed_stage"] = result.failed_stage;
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& s : stages) {
    nlohmann::ordered_json js;
    js["name"] = s.name;
    js["status"] = s.status;
    js["files"] = nlohmann::ordered_json::array();
    for (const auto& f : s.files) {
      js["files"].push_back({{"path", f.filename().string()}, {"sha256", sha256_file(f)}});
    }
    j["stages"].push_back(js);
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << j.dump(2) << '\n';
}

CsvTable acceptance_table(const std::vector<AcceptanceRow>& rows) {
  CsvTable t{{"stage", "check", "value", "threshold", "pass"}, {}};
  for (const auto& r : rows) {
    t.add({r.stage, r.check, csv_number(r.value), csv_number(r.threshold), csv_bool(r.pass)});
  }
  return t;
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& config_in, const PipelineOptions& options) {
  ExperimentConfig config = config_in;
  if (options.seed) config.poincare.seed = *options.seed;
  config.validate();
  kernels::set_threads(options.threads);

  PipelineResult result;
  result.out_dir = options.out_dir ? *options.out_dir : fs::path(config.output.dir);
  fs::create_directories(result.out_dir);
  const fs::path& dir = result.out_dir;
  const std::string config_text = emit_config(config);
  {
    std::ofstream out(dir / "config.cfg", std::ios::binary);
    out << config_text;
  }

  std::vector<std::string> stages = config.stages;
  if (stages.empty()) {
    if (config.model.source == ModelSource::counterexample) {
      stages = {"make-model", "geometry"};
    } else {
      stages = {"make-model", "solve", "stability", "geometry", "verify-poincare", "energy-growth"};
    }
  }

  std::vector<StageRecord> records;
  const Grid grid = config.make_grid();
  std::optional<Experiment> experiment;
  std::optional<ScalarField> u;
  bool stability_passed = false;
  const FieldFormat ff = config.output.fields;

  auto need_u = [&](const std::string& stage) -> const ScalarField& {
    if (!u) throw std::invalid_argument(stage + " needs a field; run make-model (and solve) first");
    return *u;
  };

  for (const std::string& stage : stages) {
    StageRecord rec{stage, "ok", {}};
    try {
      if (stage == "make-model") {
        experiment = make_experiment(config, grid);
        CsvTable t{{"key", "value"}, {}};
        t.add({"source", to_string(config.model.source)});
        t.add({"description", experiment->description});
        t.add({"grid", grid.describe()});
        t.add({"alpha", config.model.alpha.to_string()});
        t.add({"p", config.model.p.to_string()});
        t.add({"eps_reg", csv_number(experiment->model.eps_reg)});
        t.write(dir / "model.csv");
        rec.files.push_back(dir / "model.csv");
        for (auto& p : write_field_as(experiment->reference, dir / "reference", ff)) rec.files.push_back(p);
        if (!experiment->has_pde) u = experiment->reference;
      } else if (stage == "solve") {
        if (!experiment) throw std::invalid_argument("solve needs make-model");
        if (!experiment->has_pde) throw std::invalid_argument("the counterexample field is prescribed, not solved");
        const Experiment& e = *experiment;
        std::function<double(std::span<const double>)> boundary;
        std::function<ModelBundle(const Grid&)> make_model;
        const ExperimentConfig& c = config;
        make_model = [&c](const Grid& g) { return make_experiment(c, g).model; };
        if (e.exact) {
          boundary = e.exact;
        } else {
          ExampleSpec spec;
          spec.beta = c.model.beta;
          spec.gamma = c.model.gamma;
          spec.omega = c.model.omega;
          const int m = grid.m();
          boundary = [spec, m](std::span<const double> X) { return spec.value(X, m); };
        }
        SolveResult r = solve_nested(make_model, boundary, grid, config.solver);
        std::optional<double> err;
        if (e.exact) err = (r.u - e.reference).max_abs();
        solve_table(r.report, err).write(dir / "solve.csv");
        rec.files.push_back(dir / "solve.csv");
        for (auto& p : write_field_as(r.u, dir / "u", ff)) rec.files.push_back(p);
        u = std::move(r.u);
        if (!r.report.converged) {
          rec.status = "nonconvergence";
          result.exit_code = exit_nonconvergence;
          result.failed_stage = stage;
          result.message = r.report.message;
        }
      } else if (stage == "stability") {
        const ScalarField& uu = need_u(stage);
        const StencilMatrix A = quadratic_form(uu, experiment->model);
        StabilityReport r = min_rayleigh(A, config.eigen);
        r.monotone_direction_found = monotone_direction(uu);
        const double tol = config.tolerances.tol_stability > 0.0 ? config.tolerances.tol_stability
                                                                  : default_tol_stability(A);
        stability_table(r, tol).write(dir / "stability.csv");
        rec.files.push_back(dir / "stability.csv");
        stability_passed = r.converged && is_stable(r, tol);
        result.acceptance.push_back({stage, "lambda_min >= -tol_stability", r.min_rayleigh, -tol, stability_passed});
        if (!r.converged) {
          rec.status = "nonconvergence";
          result.exit_code = exit_nonconvergence;
          result.failed_stage = stage;
          result.message = r.message;
        }
      } else if (stage == "geometry") {
        const ScalarField& uu = need_u(stage);
        GeometryOptions go;
        go.theta_grad = config.tolerances.theta_grad;
        const GeometryFields geo = compute_geometry(uu, go);
        const GeometrySummary s = summarize_geometry(uu, geo, config.tolerances);
        geometry_table(s).write(dir / "geometry.csv");
        rec.files.push_back(dir / "geometry.csv");
        for (auto& p : write_geometry_fields(geo, dir / "geometry_", ff)) rec.files.push_back(p);
        result.notes.push_back("parallelism=" + csv_bool(s.parallelism.verdict));
        result.notes.push_back("omega-constancy=" + csv_bool(s.omega_constant));
        const double floor = -config.tolerances.tol_geom * s.h;
        result.acceptance.push_back({stage, "min_S >= -tol_geom*h", s.min_S, floor, s.min_S >= floor});
        result.acceptance.push_back({stage, "min_T >= -tol_geom*h", s.min_T, floor, s.min_T >= floor});
        result.acceptance.push_back({stage, "identity defect <= tol_identity", s.identity.max_relative_defect,
                                     config.tolerances.tol_identity,
                                     s.identity.max_relative_defect <= config.tolerances.tol_identity});
      } else if (stage == "verify-poincare") {
        const ScalarField& uu = need_u(stage);
        const auto suite = parse_phi_suite(config.poincare.phis, grid, config.poincare.seed);
        PoincareOptions po;
        po.geometry.theta_grad = config.tolerances.theta_grad;
        po.tol_stability = config.tolerances.tol_stability;
        po.tol_poincare = config.tolerances.tol_poincare;
        po.assume_stable = stability_passed;
        const PoincareSuiteResult r = verify_poincare(uu, experiment->model, suite, po);
        poincare_table(r, config.tolerances.tol_poincare).write(dir / "poincare.csv");
        rec.files.push_back(dir / "poincare.csv");
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& rep : r.reports) worst = std::min(worst, rep.slack / rep.scale());
        result.acceptance.push_back({stage, "min slack/scale >= -tol_poincare", worst, -config.tolerances.tol_poincare,
                                     r.all_pass && r.hypothesis_holds});
      } else if (stage == "energy-growth") {
        const ScalarField& uu = need_u(stage);
        const GrowthReport r = energy_growth(uu, experiment->model, config.growth.radii, config.growth.bound,
                                             config.growth.sigma, config.growth.slope_tol);
        growth_table(r).write(dir / "growth.csv");
        {
          std::ofstream out(dir / "growth.dat", std::ios::binary);
          out << growth_gnuplot(r);
        }
        rec.files.push_back(dir / "growth.csv");
        rec.files.push_back(dir / "growth.dat");
        result.acceptance.push_back({stage, "slope <= bound_exponent + slope_tol", r.fitted_slope,
                                     r.bound_exponent + config.growth.slope_tol, r.slope_defined && !r.violates});
      }
    } catch (const std::exception& ex) {
      rec.status = "error";
      result.exit_code = exit_usage;
      result.failed_stage = stage;
      result.message = ex.what();
    }
    result.stages_run.push_back(stage);
    records.push_back(std::move(rec));
    if (!result.failed_stage.empty()) break;
  }

  acceptance_table(result.acceptance).write(dir / "acceptance.csv");
  records.push_back({"acceptance", "ok", {dir / "acceptance.csv"}});
  if (result.exit_code == exit_ok) {
    for (const auto& row : result.acceptance) {
      if (!row.pass) {
        result.exit_code = exit_acceptance;
        result.failed_stage = row.stage;
        result.message = row.check + " failed";
        break;
      }
    }
  }
  write_manifest(dir, config_text, records, result);
  return result;
}

}  // namespace plap

#include "plap/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace plap {
namespace {

namespace pt = boost::property_tree;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  const std::string t = boost::algorithm::trim_copy(s);
  if (t.empty()) return items;
  boost::algorithm::split(items, t, boost::algorithm::is_any_of(","));
  for (auto& item : items) boost::algorithm::trim(item);
  return items;
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt17(values[i]);
    } else if constexpr (std::is_same_v<T, std::string>) {
      s += values[i];
    } else {
      s += std::to_string(values[i]);
    }
  }
  return s;
}

// Keys of one section, consumed as they are read; leftovers are errors.
class Section {
 public:
  Section(std::string name, std::map<std::string, std::string> keys) : name_(std::move(name)), keys_(std::move(keys)) {}

  bool has(const std::string& key) const { return keys_.count(key) != 0; }

  template <class F>
  void read(const std::string& key, F&& assign) {
    const auto it = keys_.find(key);
    if (it == keys_.end()) return;
    const std::string value = it->second;
    keys_.erase(it);
    try {
      assign(value);
    } catch (const std::exception& e) {
      throw std::invalid_argument("[" + name_ + "] " + key + " = '" + value + "': " + e.what());
    }
  }

  void finish() const {
    if (!keys_.empty()) throw std::invalid_argument("[" + name_ + "] unknown key '" + keys_.begin()->first + "'");
  }

 private:
  std::string name_;
  std::map<std::string, std::string> keys_;
};

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("not a number");
  return v;
}

long long to_integer(const std::string& s) {
  std::size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw std::invalid_argument("not an integer");
  return v;
}

int to_int(const std::string& s) { return static_cast<int>(to_integer(s)); }

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_double(item));
  return out;
}

}  // namespace

std::string to_string(FieldFormat f) {
  switch (f) {
    case FieldFormat::binary: return "binary";
    case FieldFormat::csv: return "csv";
    case FieldFormat::both: return "both";
  }
  return "binary";
}

namespace {

FieldFormat parse_field_format(const std::string& s) {
  if (s == "binary") return FieldFormat::binary;
  if (s == "csv") return FieldFormat::csv;
  if (s == "both") return FieldFormat::both;
  throw std::invalid_argument("expected binary, csv or both");
}

void put(pt::ptree& section, const std::string& key, const std::string& value) {
  section.push_back(pt::ptree::value_type(key, pt::ptree(value)));
}

}  // namespace

std::string to_string(ModelSource source) {
  switch (source) {
    case ModelSource::example: return "example";
    case ModelSource::nonlinearity: return "nonlinearity";
    case ModelSource::counterexample: return "counterexample";
  }
  return "example";
}

ModelSource parse_model_source(const std::string& name) {
  if (name == "example") return ModelSource::example;
  if (name == "nonlinearity") return ModelSource::nonlinearity;
  if (name == "counterexample") return ModelSource::counterexample;
  throw std::invalid_argument("unknown model source '" + name + "'");
}

bool operator==(const SolverOptions& a, const SolverOptions& b) {
  return a.eps_reg == b.eps_reg && a.tol_residual == b.tol_residual && a.max_iters == b.max_iters &&
         a.damping == b.damping && a.continuation_steps == b.continuation_steps &&
         a.max_backtracks == b.max_backtracks && a.preconditioner == b.preconditioner;
}

bool operator==(const EigenOptions& a, const EigenOptions& b) {
  return a.tol == b.tol && a.krylov_dim == b.krylov_dim && a.max_restarts == b.max_restarts &&
         a.inner_tol == b.inner_tol && a.preconditioner == b.preconditioner;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.grid == b.grid && a.model == b.model && a.solver == b.solver && a.eigen == b.eigen &&
         a.tolerances == b.tolerances && a.poincare == b.poincare && a.growth == b.growth &&
         a.output == b.output && a.stages == b.stages;
}

Grid ExperimentConfig::make_grid() const {
  return Grid(grid.m, grid.fiber_dims, grid.sizes, grid.extents);
}

void ExperimentConfig::validate() const {
  if (grid.m < 0 || grid.fiber_dims < 1) throw std::invalid_argument("[grid] need m >= 0 and fiber_dims >= 1");
  const auto n = static_cast<std::size_t>(grid.m + grid.fiber_dims);
  if (grid.sizes.size() != n || grid.extents.size() != n) {
    throw std::invalid_argument("[grid] sizes and extents need m + fiber_dims entries");
  }
  make_grid();
  if (model.source == ModelSource::counterexample && (grid.m != 1 || grid.fiber_dims != 2)) {
    throw std::invalid_argument("[model] the counterexample lives in R^1 x R^2");
  }
  if (model.source != ModelSource::counterexample &&
      static_cast<int>(model.omega.size()) != grid.fiber_dims) {
    throw std::invalid_argument("[model] example.omega needs fiber_dims entries");
  }
  solver.validate();
  if (!(eigen.tol > 0.0) || eigen.krylov_dim < 2 || eigen.max_restarts < 1 || !(eigen.inner_tol > 0.0)) {
    throw std::invalid_argument("[eigen] tol, inner_tol must be positive, krylov_dim >= 2, max_restarts >= 1");
  }
  if (!(tolerances.tol_poincare >= 0.0) || !(tolerances.tol_geom >= 0.0) || !(tolerances.tol_identity > 0.0) ||
      !(tolerances.tol_par > 0.0) || !(tolerances.tol_omega > 0.0)) {
    throw std::invalid_argument("[tolerances] tolerances must be non-negative");
  }
  if (growth.radii.size() < 3) throw std::invalid_argument("[growth] radii needs at least 3 entries");
  static const std::set<std::string> known{"make-model", "solve", "stability", "geometry", "verify-poincare",
                                           "energy-growth"};
  for (const auto& s : stages) {
    if (!known.count(s)) throw std::invalid_argument("[pipeline] unknown stage '" + s + "'");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  std::map<std::string, std::map<std::string, std::string>> raw;
  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty()) {
      throw std::invalid_argument("config: key '" + name + "' outside a section");
    }
    for (const auto& [key, value] : section) raw[name][key] = boost::algorithm::trim_copy(value.data());
  }
  static const std::set<std::string> known{"grid",     "model",  "solver", "eigen",   "tolerances",
                                           "poincare", "growth", "output", "pipeline"};
  for (const auto& [name, keys] : raw) {
    if (!known.count(name)) throw std::invalid_argument("config: unknown section [" + name + "]");
  }

  ExperimentConfig c;
  {
    Section s("grid", raw["grid"]);
    s.read("m", [&](const std::string& v) { c.grid.m = to_int(v); });
    s.read("fiber_dims", [&](const std::string& v) { c.grid.fiber_dims = to_int(v); });
    s.read("extents", [&](const std::string& v) {
      c.grid.extents.clear();
      for (const auto& item : split_list(v)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("extent needs lo:hi");
        c.grid.extents.push_back({to_double(item.substr(0, colon)), to_double(item.substr(colon + 1))});
      }
    });
    if (s.has("sizes") && s.has("h")) throw std::invalid_argument("[grid] give either sizes or h, not both");
    s.read("sizes", [&](const std::string& v) {
      c.grid.sizes.clear();
      for (const auto& item : split_list(v)) c.grid.sizes.push_back(to_int(item));
    });
    s.read("h", [&](const std::string& v) {
      const Grid g = Grid::with_spacing(c.grid.m, c.grid.fiber_dims, c.grid.extents, to_double(v));
      c.grid.sizes = g.sizes();
    });
    s.finish();
  }
  {
    Section s("model", raw["model"]);
    s.read("source", [&](const std::string& v) { c.model.source = parse_model_source(v); });
    s.read("alpha", [&](const std::string& v) { c.model.alpha = XFunction::parse(v); });
    s.read("p", [&](const std::string& v) { c.model.p = XFunction::parse(v); });
    s.read("f", [&](const std::string& v) { c.model.f = Profile::parse(v); });
    s.read("f_scale", [&](const std::string& v) { c.model.f_scale = XFunction::parse(v); });
    s.read("example.beta", [&](const std::string& v) { c.model.beta = XFunction::parse(v); });
    s.read("example.gamma", [&](const std::string& v) { c.model.gamma = Profile::parse(v); });
    s.read("example.omega", [&](const std::string& v) { c.model.omega = to_doubles(v); });
    s.read("t0", [&](const std::string& v) { c.model.t0 = to_double(v); });
    s.finish();
  }
  {
    Section s("solver", raw["solver"]);
    s.read("eps_reg", [&](const std::string& v) { c.solver.eps_reg = to_double(v); });
    s.read("tol_residual", [&](const std::string& v) { c.solver.tol_residual = to_double(v); });
    s.read("max_iters", [&](const std::string& v) { c.solver.max_iters = to_int(v); });
    s.read("damping", [&](const std::string& v) { c.solver.damping = to_double(v); });
    s.read("continuation_steps", [&](const std::string& v) { c.solver.continuation_steps = to_int(v); });
    s.read("max_backtracks", [&](const std::string& v) { c.solver.max_backtracks = to_int(v); });
    s.read("preconditioner", [&](const std::string& v) { c.solver.preconditioner = parse_preconditioner(v); });
    s.finish();
  }
  {
    Section s("eigen", raw["eigen"]);
    s.read("tol", [&](const std::string& v) { c.eigen.tol = to_double(v); });
    s.read("krylov_dim", [&](const std::string& v) { c.eigen.krylov_dim = to_int(v); });
    s.read("max_restarts", [&](const std::string& v) { c.eigen.max_restarts = to_int(v); });
    s.read("inner_tol", [&](const std::string& v) { c.eigen.inner_tol = to_double(v); });
    s.read("preconditioner", [&](const std::string& v) { c.eigen.preconditioner = parse_preconditioner(v); });
    s.finish();
  }
  {
    Section s("tolerances", raw["tolerances"]);
    s.read("theta_grad", [&](const std::string& v) { c.tolerances.theta_grad = to_double(v); });
    s.read("tol_stability", [&](const std::string& v) { c.tolerances.tol_stability = to_double(v); });
    s.read("tol_poincare", [&](const std::string& v) { c.tolerances.tol_poincare = to_double(v); });
    s.read("tol_geom", [&](const std::string& v) { c.tolerances.tol_geom = to_double(v); });
    s.read("tol_identity", [&](const std::string& v) { c.tolerances.tol_identity = to_double(v); });
    s.read("tol_par", [&](const std::string& v) { c.tolerances.tol_par = to_double(v); });
    s.read("tol_omega", [&](const std::string& v) { c.tolerances.tol_omega = to_double(v); });
    s.finish();
  }
  {
    Section s("poincare", raw["poincare"]);
    s.read("phis", [&](const std::string& v) { c.poincare.phis = v; });
    s.read("seed", [&](const std::string& v) {
      const long long seed = to_integer(v);
      if (seed < 0) throw std::invalid_argument("seed must be non-negative");
      c.poincare.seed = static_cast<std::uint64_t>(seed);
    });
    s.finish();
  }
  {
    Section s("growth", raw["growth"]);
    s.read("radii", [&](const std::string& v) { c.growth.radii = to_doubles(v); });
    s.read("bound", [&](const std::string& v) { c.growth.bound = parse_growth_bound(v); });
    s.read("sigma", [&](const std::string& v) { c.growth.sigma = to_double(v); });
    s.read("slope_tol", [&](const std::string& v) { c.growth.slope_tol = to_double(v); });
    s.finish();
  }
  {
    Section s("output", raw["output"]);
    s.read("dir", [&](const std::string& v) { c.output.dir = v; });
    s.read("fields", [&](const std::string& v) { c.output.fields = parse_field_format(v); });
    s.finish();
  }
  {
    Section s("pipeline", raw["pipeline"]);
    s.read("stages", [&](const std::string& v) { c.stages = split_list(v); });
    s.finish();
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string emit_config(const ExperimentConfig& c) {
  pt::ptree tree;
  pt::ptree grid, model, solver, eigen, tol, poincare, growth, output, pipeline;
  put(grid, "m", std::to_string(c.grid.m));
  put(grid, "fiber_dims", std::to_string(c.grid.fiber_dims));
  put(grid, "sizes", join(c.grid.sizes));
  std::vector<std::string> extents;
  for (const auto& e : c.grid.extents) extents.push_back(fmt17(e.lo) + ":" + fmt17(e.hi));
  put(grid, "extents", join(extents));

  put(model, "source", to_string(c.model.source));
  put(model, "alpha", c.model.alpha.to_string());
  put(model, "p", c.model.p.to_string());
  put(model, "f", c.model.f.to_string());
  put(model, "f_scale", c.model.f_scale.to_string());
  put(model, "example.beta", c.model.beta.to_string());
  put(model, "example.gamma", c.model.gamma.to_string());
  put(model, "example.omega", join(c.model.omega));
  put(model, "t0", fmt17(c.model.t0));

  put(solver, "eps_reg", fmt17(c.solver.eps_reg));
  put(solver, "tol_residual", fmt17(c.solver.tol_residual));
  put(solver, "max_iters", std::to_string(c.solver.max_iters));
  put(solver, "damping", fmt17(c.solver.damping));
  put(solver, "continuation_steps", std::to_string(c.solver.continuation_steps));
  put(solver, "max_backtracks", std::to_string(c.solver.max_backtracks));
  put(solver, "preconditioner", to_string(c.solver.preconditioner));

  put(eigen, "tol", fmt17(c.eigen.tol));
  put(eigen, "krylov_dim", std::to_string(c.eigen.krylov_dim));
  put(eigen, "max_restarts", std::to_string(c.eigen.max_restarts));
  put(eigen, "inner_tol", fmt17(c.eigen.inner_tol));
  put(eigen, "preconditioner", to_string(c.eigen.preconditioner));

  put(tol, "theta_grad", fmt17(c.tolerances.theta_grad));
  put(tol, "tol_stability", fmt17(c.tolerances.tol_stability));
  put(tol, "tol_poincare", fmt17(c.tolerances.tol_poincare));
  put(tol, "tol_geom", fmt17(c.tolerances.tol_geom));
  put(tol, "tol_identity", fmt17(c.tolerances.tol_identity));
  put(tol, "tol_par", fmt17(c.tolerances.tol_par));
  put(tol, "tol_omega", fmt17(c.tolerances.tol_omega));

  put(poincare, "phis", c.poincare.phis);
  put(poincare, "seed", std::to_string(c.poincare.seed));

  put(growth, "radii", join(c.growth.radii));
  put(growth, "bound", to_string(c.growth.bound));
  put(growth, "sigma", fmt17(c.growth.sigma));
  put(growth, "slope_tol", fmt17(c.growth.slope_tol));

  put(output, "dir", c.output.dir);
  put(output, "fields", to_string(c.output.fields));

  put(pipeline, "stages", join(c.stages));

  for (const auto& [name, section] :
       std::initializer_list<std::pair<const char*, pt::ptree*>>{{"grid", &grid},
                                                                  {"model", &model},
                                                                  {"solver", &solver},
                                                                  {"eigen", &eigen},
                                                                  {"tolerances", &tol},
                                                                  {"poincare", &poincare},
                                                                  {"growth", &growth},
                                                                  {"output", &output},
                                                                  {"pipeline", &pipeline}}) {
    tree.push_back(pt::ptree::value_type(name, *section));
  }
  std::ostringstream out;
  pt::write_ini(out, tree);
  return out.str();
}

}  // namespace plap

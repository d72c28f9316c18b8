#pragma once

// YAML scenario files: structure specs, domains, solver settings and the
// experiment list. Parsing is strict; unknown keys are errors that carry the
// line and column of the offending key.

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/expression.hpp"
#include "finsler/norms.hpp"
#include "finsler/pde.hpp"

namespace finsler {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line, int column)
      : std::runtime_error(position(line, column) + message), line_(line), column_(column) {}
  int line() const { return line_; }      // 1-based; 0 when unknown
  int column() const { return column_; }  // 1-based; 0 when unknown

 private:
  static std::string position(int line, int column) {
    if (line <= 0) return "";
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": ";
  }
  int line_, column_;
};

enum class DomainShape { kSquare, kDisk, kBallInSquare };

inline std::string to_string(DomainShape d) {
  switch (d) {
    case DomainShape::kSquare: return "square";
    case DomainShape::kDisk: return "disk";
    case DomainShape::kBallInSquare: return "ball-in-square";
  }
  return "?";
}

struct DomainConfig {
  DomainShape shape = DomainShape::kSquare;
  Point2 center{0.0, 0.0};
  double radius = 1.0;  // half side for squares, forward radius for ball-in-square
};

inline const std::vector<std::string>& experiment_types() {
  static const std::vector<std::string> t = {"solve",   "gradient", "harnack", "liouville", "bochner",
                                             "poincare", "sobolev", "volume",  "curvature", "norm-check"};
  return t;
}

struct ExperimentConfig {
  std::string type;
  std::string name;  // artifact stem; defaults to the type, suffixed on repeats
  std::optional<std::string> boundary;
  std::vector<double> radii;
  std::vector<double> mesh_sizes;
  std::optional<int> samples;
  std::optional<double> nu;
  std::optional<double> r1, r2;
  std::optional<double> tolerance;
  std::optional<int> grid;
  bool control = true;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string description;
  StructureSpec<2> structure;
  DomainConfig domain;
  double h = 1.0 / 16;
  SolverConfig solver;
  std::vector<double> n_list{2.0};
  std::uint64_t seed = 1;
  std::string output = "out";
  std::vector<ExperimentConfig> experiments;
};

namespace detail {

inline ConfigError error_at(const YAML::Node& n, const std::string& msg) {
  const auto m = n.Mark();
  if (m.is_null()) return ConfigError(msg, 0, 0);
  return ConfigError(msg, m.line + 1, m.column + 1);
}

inline void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  if (!map.IsMap()) throw error_at(map, where + " must be a mapping");
  for (auto it = map.begin(); it != map.end(); ++it) {
    const auto key = it->first.as<std::string>();
    if (!allowed.count(key)) throw error_at(it->first, "unknown key '" + key + "' in " + where);
  }
}

inline double number(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) throw error_at(n, what + " must be a number");
  const std::string s = n.Scalar();
  if (s == "inf" || s == ".inf" || s == "infinity" || s == "+inf") return std::numeric_limits<double>::infinity();
  // Fractions such as 1/64 are accepted for mesh sizes.
  try {
    std::size_t pos = 0;
    const double a = std::stod(s, &pos);
    if (pos == s.size()) return a;
    if (s[pos] == '/') {
      std::size_t pos2 = 0;
      const double b = std::stod(s.substr(pos + 1), &pos2);
      if (pos + 1 + pos2 == s.size() && b != 0) return a / b;
    }
  } catch (const std::exception&) {
  }
  throw error_at(n, what + ": cannot parse '" + s + "' as a number");
}

inline int integer(const YAML::Node& n, const std::string& what) {
  const double x = number(n, what);
  if (x != std::floor(x) || std::abs(x) > 1e9) throw error_at(n, what + " must be an integer");
  return static_cast<int>(x);
}

inline std::vector<double> numbers(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) throw error_at(n, what + " must be a list");
  std::vector<double> v;
  for (const auto& e : n) v.push_back(number(e, what));
  return v;
}

inline Expression expression(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) throw error_at(n, what + " must be an expression");
  try {
    return Expression::parse(n.Scalar());
  } catch (const ExpressionError& e) {
    const auto m = n.Mark();
    throw ConfigError(what + ": " + e.what(), m.line + 1, m.column + 1 + static_cast<int>(e.column()));
  }
}

inline bool boolean(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) throw error_at(n, what + " must be true or false");
  const auto& s = n.Scalar();
  if (s == "true") return true;
  if (s == "false") return false;
  throw error_at(n, what + " must be true or false");
}

inline Point2 point(const YAML::Node& n, const std::string& what) {
  const auto v = numbers(n, what);
  if (v.size() != 2) throw error_at(n, what + " must have two coordinates");
  return Point2(v[0], v[1]);
}

}  // namespace detail

inline StructureSpec<2> parse_structure(const YAML::Node& n) {
  detail::check_keys(n, {"family", "metric", "drift", "epsilon", "density", "chart"}, "structure");
  StructureSpec<2> s;
  if (!n["family"]) throw detail::error_at(n, "structure needs a family");
  const auto fam = family_from_string(n["family"].as<std::string>());
  if (!fam) throw detail::error_at(n["family"], "unknown family '" + n["family"].as<std::string>() + "'");
  s.family = *fam;
  if (const auto m = n["metric"]) {
    if (!m.IsSequence() || m.size() != 2) throw detail::error_at(m, "metric must be a 2x2 list");
    for (int i = 0; i < 2; ++i) {
      if (!m[i].IsSequence() || m[i].size() != 2) throw detail::error_at(m[i], "metric rows must have two entries");
      for (int j = 0; j < 2; ++j) s.metric[i][j] = detail::expression(m[i][j], "metric");
    }
  }
  if (const auto d = n["drift"]) {
    if (!d.IsSequence() || d.size() != 2) throw detail::error_at(d, "drift must have two entries");
    for (int i = 0; i < 2; ++i) s.drift[i] = detail::expression(d[i], "drift");
  }
  if (const auto e = n["epsilon"]) s.epsilon = detail::number(e, "epsilon");
  if (const auto d = n["density"]) s.density = detail::expression(d, "density");
  if (const auto c = n["chart"]) {
    detail::check_keys(c, {"lo", "hi"}, "chart");
    if (c["lo"]) s.chart.lo = detail::point(c["lo"], "chart.lo").c;
    if (c["hi"]) s.chart.hi = detail::point(c["hi"], "chart.hi").c;
  }
  return s;
}

/// Canonical YAML text of a structure spec; parse_structure inverts it.
inline std::string emit_structure(const StructureSpec<2>& s) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "family" << YAML::Value << to_string(s.family);
  out << YAML::Key << "metric" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (int i = 0; i < 2; ++i) {
    out << YAML::Flow << YAML::BeginSeq;
    for (int j = 0; j < 2; ++j) out << YAML::DoubleQuoted << s.metric[i][j].to_string();
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "drift" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (int i = 0; i < 2; ++i) out << YAML::DoubleQuoted << s.drift[i].to_string();
  out << YAML::EndSeq;
  out << YAML::Key << "epsilon" << YAML::Value << YAML::Precision(17) << s.epsilon;
  out << YAML::Key << "density" << YAML::Value << YAML::DoubleQuoted << s.density.to_string();
  out << YAML::Key << "chart" << YAML::Value << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "lo" << YAML::Value << YAML::Flow << YAML::BeginSeq << s.chart.lo[0] << s.chart.lo[1] << YAML::EndSeq;
  out << YAML::Key << "hi" << YAML::Value << YAML::Flow << YAML::BeginSeq << s.chart.hi[0] << s.chart.hi[1] << YAML::EndSeq;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline ExperimentConfig parse_experiment(const YAML::Node& n) {
  if (!n.IsMap() || !n["type"]) throw detail::error_at(n, "each experiment needs a type");
  ExperimentConfig e;
  e.type = n["type"].as<std::string>();
  static const std::map<std::string, std::set<std::string>> allowed = {
      {"solve", {"boundary"}},
      {"gradient", {"radii", "mesh_sizes", "samples"}},
      {"harnack", {"radii", "mesh_sizes", "samples", "tolerance"}},
      {"liouville", {"radii", "boundary", "control"}},
      {"bochner", {"boundary", "mesh_sizes"}},
      {"poincare", {"radii", "samples"}},
      {"sobolev", {"radii", "samples", "nu"}},
      {"volume", {"r1", "r2", "tolerance", "mesh_sizes"}},
      {"curvature", {"grid", "samples"}},
      {"norm-check", {"samples"}}};
  const auto it = allowed.find(e.type);
  if (it == allowed.end()) throw detail::error_at(n["type"], "unknown experiment type '" + e.type + "'");
  auto keys = it->second;
  keys.insert({"type", "name"});
  detail::check_keys(n, keys, "experiment '" + e.type + "'");
  e.name = n["name"] ? n["name"].as<std::string>() : e.type;
  if (n["boundary"]) {
    detail::expression(n["boundary"], "boundary");
    e.boundary = n["boundary"].Scalar();
  }
  if (n["radii"]) e.radii = detail::numbers(n["radii"], "radii");
  if (n["mesh_sizes"]) e.mesh_sizes = detail::numbers(n["mesh_sizes"], "mesh_sizes");
  if (n["samples"]) e.samples = detail::integer(n["samples"], "samples");
  if (n["nu"]) e.nu = detail::number(n["nu"], "nu");
  if (n["r1"]) e.r1 = detail::number(n["r1"], "r1");
  if (n["r2"]) e.r2 = detail::number(n["r2"], "r2");
  if (n["tolerance"]) e.tolerance = detail::number(n["tolerance"], "tolerance");
  if (n["grid"]) e.grid = detail::integer(n["grid"], "grid");
  if (n["control"]) e.control = detail::boolean(n["control"], "control");
  for (double r : e.radii)
    if (!(r > 0) || !std::isfinite(r)) throw detail::error_at(n["radii"], "radii must be positive");
  for (double h : e.mesh_sizes)
    if (!(h > 0) || !std::isfinite(h)) throw detail::error_at(n["mesh_sizes"], "mesh sizes must be positive");
  if (e.samples && *e.samples < 1) throw detail::error_at(n["samples"], "samples must be positive");
  if (e.nu && !(*e.nu > 2)) throw detail::error_at(n["nu"], "nu must exceed 2");
  return e;
}

inline ScenarioConfig parse_scenario(const YAML::Node& root) {
  detail::check_keys(root, {"name", "description", "structure", "domain", "h", "solver", "n_list", "seed", "output",
                            "experiments"},
                     "scenario");
  ScenarioConfig c;
  if (root["name"]) c.name = root["name"].as<std::string>();
  if (root["description"]) c.description = root["description"].as<std::string>();
  if (!root["structure"]) throw detail::error_at(root, "scenario needs a structure");
  c.structure = parse_structure(root["structure"]);
  if (const auto d = root["domain"]) {
    detail::check_keys(d, {"shape", "center", "radius"}, "domain");
    if (d["shape"]) {
      const auto s = d["shape"].as<std::string>();
      if (s == "square") c.domain.shape = DomainShape::kSquare;
      else if (s == "disk") c.domain.shape = DomainShape::kDisk;
      else if (s == "ball-in-square") c.domain.shape = DomainShape::kBallInSquare;
      else throw detail::error_at(d["shape"], "unknown domain shape '" + s + "'");
    }
    if (d["center"]) c.domain.center = detail::point(d["center"], "domain.center");
    if (d["radius"]) c.domain.radius = detail::number(d["radius"], "domain.radius");
    if (!(c.domain.radius > 0)) throw detail::error_at(d, "domain radius must be positive");
  }
  if (root["h"]) {
    c.h = detail::number(root["h"], "h");
    if (!(c.h > 0)) throw detail::error_at(root["h"], "h must be positive");
  }
  if (const auto s = root["solver"]) {
    detail::check_keys(s, {"max_iterations", "tolerance", "memory", "refresh"}, "solver");
    if (s["max_iterations"]) c.solver.max_iterations = detail::integer(s["max_iterations"], "max_iterations");
    if (s["tolerance"]) c.solver.tolerance = detail::number(s["tolerance"], "tolerance");
    if (s["memory"]) c.solver.memory = detail::integer(s["memory"], "memory");
    if (s["refresh"]) c.solver.refresh = detail::integer(s["refresh"], "refresh");
  }
  if (root["n_list"]) {
    c.n_list = detail::numbers(root["n_list"], "n_list");
    for (double N : c.n_list)
      if (!(N >= 2)) throw detail::error_at(root["n_list"], "every N must be >= 2 (the dimension)");
  }
  if (root["seed"]) {
    const double s = detail::number(root["seed"], "seed");
    if (s < 0 || s != std::floor(s)) throw detail::error_at(root["seed"], "seed must be a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (root["output"]) c.output = root["output"].as<std::string>();
  if (const auto ex = root["experiments"]) {
    if (!ex.IsSequence()) throw detail::error_at(ex, "experiments must be a list");
    std::map<std::string, int> seen;
    for (const auto& e : ex) {
      auto cfg = parse_experiment(e);
      const int k = seen[cfg.name]++;
      if (k > 0) cfg.name += "-" + std::to_string(k + 1);
      c.experiments.push_back(cfg);
    }
  }
  // Fails fast on inadmissible structures (e.g. Randers drift too large).
  try {
    FinslerStructure<2> check(c.structure);
  } catch (const DomainError& e) {
    throw detail::error_at(root["structure"], e.what());
  }
  return c;
}

inline ScenarioConfig load_scenario_string(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  return parse_scenario(root);
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path, 0, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario_string(ss.str());
}

}  // namespace finsler

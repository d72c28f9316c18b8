#pragma once

// Executes a scenario: every listed experiment in order, then writes the
// artifacts (CSV, JSON, SVG), summary.txt and manifest.json in one pass.

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/balls.hpp"
#include "finsler/config.hpp"
#include "finsler/identities.hpp"
#include "finsler/pde.hpp"
#include "finsler/svg.hpp"
#include "finsler/verify.hpp"

#ifndef FINSLER_VERSION
#define FINSLER_VERSION "0.0.0"
#endif

namespace finsler {

struct Artifact {
  std::string file;
  std::string content;
};

struct ExperimentOutcome {
  std::string name;
  std::string type;
  std::vector<Artifact> artifacts;
  std::vector<std::string> summary;
  std::vector<std::string> red_flags;  // inequality sides out of order beyond tolerance
  std::vector<std::string> failures;   // broken hard invariants
  std::string error;                   // execution error, if any
  double seconds = 0.0;                // wall time; reported on the console only
};

struct RunOptions {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> h;
  int threads = 1;
  bool timestamps = false;
  std::string config_path;
};

struct RunResult {
  int exit_code = 0;  // 0 clean, 2 red flags or failed checks, 1 execution error
  std::string out_dir;
  std::vector<ExperimentOutcome> outcomes;
};

namespace run_detail {

inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline nlohmann::ordered_json finite_or_string(double x) {
  if (std::isfinite(x)) return x;
  return fmt(x);
}

inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

inline Mesh domain_mesh(const ScenarioConfig& c, const FinslerStructure<2>& s, double h) {
  switch (c.domain.shape) {
    case DomainShape::kSquare: return square_mesh(c.domain.center, c.domain.radius, h);
    case DomainShape::kDisk: return disk_mesh(c.domain.center, c.domain.radius, h);
    case DomainShape::kBallInSquare: return rectangle_mesh(forward_ball_bounding_box(s, c.domain.center, c.domain.radius), h);
  }
  throw DomainError("unknown domain");
}

inline Box<2> domain_box(const ScenarioConfig& c, const FinslerStructure<2>& s) {
  if (c.domain.shape == DomainShape::kBallInSquare) return forward_ball_bounding_box(s, c.domain.center, c.domain.radius);
  Box<2> b;
  b.lo = c.domain.center.c - VecN<2>::Constant(c.domain.radius);
  b.hi = c.domain.center.c + VecN<2>::Constant(c.domain.radius);
  return b;
}

inline BoundaryData boundary_function(const std::string& text) {
  const Expression e = Expression::parse(text);
  return [e](const Point2& x) {
    const std::array<double, 2> a{x[0], x[1]};
    return e(std::span<const double>(a));
  };
}

inline bool certainly_flat(const FinslerStructure<2>& s) { return s.is_locally_minkowski() && s.has_constant_density(); }

inline double largest_n(const std::vector<double>& n_list) { return *std::max_element(n_list.begin(), n_list.end()); }

inline std::optional<double> smallest_finite_n(const std::vector<double>& n_list) {
  std::optional<double> best;
  for (double N : n_list)
    if (std::isfinite(N) && (!best || N < *best)) best = N;
  return best;
}

inline std::string pretty(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

class Runner {
 public:
  Runner(const ScenarioConfig& cfg, const RunOptions& opt) : cfg_(cfg), opt_(opt), s_(cfg.structure) {}

  ExperimentOutcome run(const ExperimentConfig& e) {
    ExperimentOutcome out;
    out.name = e.name;
    out.type = e.type;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (e.type == "norm-check") norm_check(e, out);
      else if (e.type == "solve") solve(e, out);
      else if (e.type == "gradient") gradient(e, out);
      else if (e.type == "harnack") harnack(e, out);
      else if (e.type == "liouville") liouville(e, out);
      else if (e.type == "bochner") bochner(e, out);
      else if (e.type == "poincare" || e.type == "sobolev") functional(e, out);
      else if (e.type == "volume") volume(e, out);
      else if (e.type == "curvature") curvature(e, out);
      else throw DomainError("unknown experiment type " + e.type);
    } catch (const std::exception& ex) {
      out.error = ex.what();
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  nlohmann::ordered_json manifest_constants() {
    const Box<2> box = domain_box(cfg_, s_);
    const auto uc = estimate_uniform_constants(s_, box, 4096, cfg_.seed);
    nlohmann::ordered_json j;
    j["lambda"] = uc.lambda;
    j["Lambda"] = uc.Lambda;
    j["rho"] = uc.rho;
    j["dual_lambda"] = uc.dual_lambda;
    j["dual_Lambda"] = uc.dual_Lambda;
    j["samples"] = uc.samples;
    auto& kh = j["K_hat"] = nlohmann::ordered_json::array();
    const auto bounds = measure_curvature_bounds(s_, box, cfg_.n_list);
    for (std::size_t k = 0; k < bounds.size(); ++k)
      kh.push_back({{"N", finite_or_string(cfg_.n_list[k])},
                    {"K_hat", finite_or_string(bounds[k].K)},
                    {"min_ricci", finite_or_string(bounds[k].min_ricci)},
                    {"sentinels", bounds[k].sentinels},
                    {"samples", bounds[k].samples}});
    return j;
  }

 private:
  double h() const { return cfg_.h; }

  // -- norm-check ----------------------------------------------------------
  void norm_check(const ExperimentConfig& e, ExperimentOutcome& out) {
    const int samples = e.samples.value_or(1000);
    const auto checks = identity_suite(s_, domain_box(cfg_, s_), samples, cfg_.seed);
    std::ostringstream csv;
    csv << "check,max_error,tolerance,samples,passed\n";
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
      csv << c.name << ',' << fmt(c.max_error) << ',' << fmt(c.tolerance) << ',' << c.samples << ','
          << (c.passed() ? 1 : 0) << '\n';
      j.push_back({{"check", c.name}, {"max_error", c.max_error}, {"tolerance", c.tolerance}, {"passed", c.passed()}});
      if (!c.passed()) out.failures.push_back(c.name + " error " + pretty(c.max_error));
    }
    out.artifacts.push_back({e.name + ".csv", csv.str()});
    out.artifacts.push_back({e.name + ".json", dump(j)});
    out.summary.push_back(std::to_string(checks.size() - out.failures.size()) + "/" + std::to_string(checks.size()) +
                          " identities hold over " + std::to_string(samples) + " samples");
  }

  // -- solve ---------------------------------------------------------------
  void solve(const ExperimentConfig& e, ExperimentOutcome& out) {
    const Mesh mesh = domain_mesh(cfg_, s_, h());
    const std::string bexpr = e.boundary.value_or("2 + x");
    const auto sol = solve_dirichlet(s_, mesh, boundary_function(bexpr), cfg_.solver);
    std::ostringstream field, log;
    write_field_csv(mesh, sol.u, field);
    sol.write_log_csv(log);
    nlohmann::ordered_json j;
    j["boundary"] = bexpr;
    j["nodes"] = mesh.num_nodes();
    j["h"] = mesh.h;
    j["converged"] = sol.converged;
    j["iterations"] = sol.iterations;
    j["residual"] = sol.residual;
    j["energy"] = sol.energy;
    j["maximum_principle"] = sol.maximum_principle;
    j["max_principle_violation"] = sol.max_principle_violation;
    j["stop_reason"] = sol.stop_reason;
    out.artifacts.push_back({e.name + "_solution.csv", field.str()});
    out.artifacts.push_back({e.name + "_log.csv", log.str()});
    out.artifacts.push_back({e.name + ".json", dump(j)});
    svg::Plot plot;
    plot.title = "solver residual";
    plot.x_label = "iteration";
    plot.y_label = "max |residual|";
    plot.log_y = true;
    svg::Series sr{"residual", {}, true};
    for (const auto& l : sol.log) sr.points.emplace_back(l.iteration, l.residual);
    plot.series.push_back(sr);
    plot.horizontal_rules.push_back(cfg_.solver.tolerance);
    out.artifacts.push_back({e.name + "_residual.svg", plot.render()});
    if (!sol.converged) out.failures.push_back("solver did not converge (" + sol.stop_reason + ")");
    if (!sol.maximum_principle) out.failures.push_back("maximum principle violated by " + pretty(sol.max_principle_violation));
    out.summary.push_back("nodes " + std::to_string(mesh.num_nodes()) + ", iterations " + std::to_string(sol.iterations) +
                          ", residual " + pretty(sol.residual) + ", energy " + pretty(sol.energy));
  }

  // -- gradient / harnack --------------------------------------------------
  const std::vector<SuiteMember>& suite_for(const ExperimentConfig& e) {
    ExperimentSuite suite;
    suite.families = {{cfg_.name, cfg_.structure}};
    suite.radii = e.radii.empty() ? std::vector<double>{0.5, 1.0} : e.radii;
    suite.mesh_sizes = e.mesh_sizes.empty() ? std::vector<double>{2 * h(), h()} : e.mesh_sizes;
    suite.boundary_samples = e.samples.value_or(3);
    suite.seed = cfg_.seed;
    suite.center = cfg_.domain.center;
    suite.solver = cfg_.solver;
    suite.threads = opt_.threads;
    suite.N = largest_n(cfg_.n_list);
    std::ostringstream key;
    for (double r : suite.radii) key << fmt(r) << ';';
    key << '|';
    for (double x : suite.mesh_sizes) key << fmt(x) << ';';
    key << '|' << suite.boundary_samples;
    auto it = suites_.find(key.str());
    if (it == suites_.end()) it = suites_.emplace(key.str(), run_gradient_suite(suite)).first;
    return it->second;
  }

  void gradient(const ExperimentConfig& e, ExperimentOutcome& out) {
    const auto& members = suite_for(e);
    std::ostringstream csv;
    csv << "family,R,sample,h,K,rho,converged,lhs,sigma\n";
    std::vector<InequalityReport> reps;
    std::map<double, svg::Series> by_h;
    for (const auto& m : members) {
      csv << m.family << ',' << fmt(m.R) << ',' << m.sample << ',' << fmt(m.h) << ',' << fmt(m.K) << ',' << fmt(m.rho)
          << ',' << (m.converged ? 1 : 0) << ',' << fmt(m.gradient.lhs) << ',' << fmt(m.gradient.statistics.at("sigma"))
          << '\n';
      reps.push_back(m.gradient);
      auto& ser = by_h[m.h];
      ser.label = "h = " + pretty(m.h);
      ser.points.emplace_back(m.R, m.gradient.statistics.at("sigma"));
      if (!m.converged) out.failures.push_back("solve failed for R " + pretty(m.R) + " sample " + std::to_string(m.sample));
      if (!std::isfinite(m.gradient.statistics.at("sigma"))) out.failures.push_back("non-finite sigma");
    }
    const auto fit = fit_constant(reps);
    const double change = mesh_stability(members);
    nlohmann::ordered_json j;
    j["fitted_constant"] = fit.value;
    j["reports"] = fit.reports;
    j["underpowered"] = fit.underpowered;
    j["covariates"] = fit.covariates;
    j["max_relative_change_under_refinement"] = change;
    auto& arr = j["members"] = nlohmann::ordered_json::array();
    for (const auto& r : reps) arr.push_back(r.to_json());
    out.artifacts.push_back({e.name + ".csv", csv.str()});
    out.artifacts.push_back({e.name + ".json", dump(j)});
    svg::Plot plot;
    plot.title = "normalized gradient statistic";
    plot.x_label = "R";
    plot.y_label = "sigma";
    for (auto& [hh, ser] : by_h) plot.series.push_back(ser);
    out.artifacts.push_back({e.name + "_sigma.svg", plot.render()});
    if (change > 0.10) out.red_flags.push_back("sigma changes by " + pretty(100 * change) + "% under mesh halving");
    out.summary.push_back("fitted constant " + pretty(fit.value) + " over " + std::to_string(fit.reports) +
                          " reports" + (fit.underpowered ? " (underpowered)" : "") + ", refinement change " +
                          pretty(100 * change) + "%");
  }

  // Largest relative change of sigma between the two finest mesh sizes, per (R, sample).
  static double mesh_stability(const std::vector<SuiteMember>& members) {
    std::map<std::pair<double, int>, std::map<double, double>> table;
    for (const auto& m : members) table[{m.R, m.sample}][m.h] = m.gradient.statistics.at("sigma");
    double worst = 0.0;
    for (const auto& [key, row] : table) {
      if (row.size() < 2) continue;
      auto fine = row.begin();
      auto coarse = std::next(fine);
      const double denom = std::max(std::abs(coarse->second), 1e-300);
      worst = std::max(worst, std::abs(fine->second - coarse->second) / denom);
    }
    return worst;
  }

  void harnack(const ExperimentConfig& e, ExperimentOutcome& out) {
    const auto& members = suite_for(e);
    const double tol = e.tolerance.value_or(5e-2);
    std::ostringstream csv;
    csv << "family,R,sample,h,rho,log_ratio,bound,slack,red_flag\n";
    svg::Plot plot;
    plot.title = "Harnack ratio against its bound";
    plot.x_label = "(rho + 1) R max F(grad log u)";
    plot.y_label = "log(sup u / inf u)";
    svg::Series pts{"members", {}, false};
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    double worst = INFINITY, hi = 0;
    for (const auto& m : members) {
      auto rep = m.harnack;
      rep.tolerance = tol;
      csv << m.family << ',' << fmt(m.R) << ',' << m.sample << ',' << fmt(m.h) << ',' << fmt(m.rho) << ','
          << fmt(rep.lhs) << ',' << fmt(rep.rhs) << ',' << fmt(rep.slack) << ',' << (rep.red_flag() ? 1 : 0) << '\n';
      pts.points.emplace_back(rep.rhs, rep.lhs);
      hi = std::max({hi, rep.rhs, rep.lhs});
      worst = std::min(worst, rep.slack);
      arr.push_back(rep.to_json());
      if (rep.red_flag())
        out.red_flags.push_back("harnack slack " + pretty(rep.slack) + " at R " + pretty(m.R) + ", h " + pretty(m.h));
    }
    plot.series.push_back(pts);
    plot.series.push_back({"equality", {{0.0, 0.0}, {hi, hi}}, true});
    out.artifacts.push_back({e.name + ".csv", csv.str()});
    out.artifacts.push_back({e.name + ".json", dump(arr)});
    out.artifacts.push_back({e.name + ".svg", plot.render()});
    out.summary.push_back("worst slack " + pretty(worst) + " over " + std::to_string(members.size()) + " members");
  }

  // -- liouville -----------------------------------------------------------
  void liouville(const ExperimentConfig& e, ExperimentOutcome& out) {
    if (!certainly_flat(s_)) throw DomainError("liouville needs a locally Minkowski structure with constant density");
    const std::vector<double> radii = e.radii.empty() ? std::vector<double>{2, 4, 8, 16} : e.radii;
    const std::string bexpr = e.boundary.value_or("2 + x");
    const auto g = boundary_function(bexpr);
    // The datum is read on the unit circle, so its oscillation is fixed in R.
    auto boundary = [g](const Point2& x, double) {
      const double r = x.c.norm();
      return r > 0 ? g(Point2(VecN<2>(x.c / r))) : g(x);
    };
    LiouvilleOptions lo;
    lo.h = h();
    lo.solver = cfg_.solver;
    const auto rep = liouville_trend(s_, boundary, radii, lo);
    std::ostringstream csv;
    csv << "series,R,max_gradient\n";
    svg::Plot plot;
    plot.title = "max gradient on the unit ball";
    plot.x_label = "R";
    plot.y_label = "max F(grad u) on B_1";
    plot.log_x = plot.log_y = true;
    svg::Series main{"bounded data, slope " + pretty(rep.lhs), {}, true};
    for (const auto& [R, gmax] : rep.refinement) {
      csv << "bounded," << fmt(R) << ',' << fmt(gmax) << '\n';
      main.points.emplace_back(R, gmax);
    }
    plot.series.push_back(main);
    nlohmann::ordered_json j;
    j["boundary"] = bexpr;
    j["bounded"] = rep.to_json();
    if (rep.red_flag()) out.red_flags.push_back("decay exponent " + pretty(rep.lhs) + " above " + pretty(rep.rhs));
    out.summary.push_back("decay exponent " + pretty(rep.lhs) + " (threshold " + pretty(rep.rhs) + ")");
    if (e.control) {
      const auto ctl = liouville_trend(s_, [](const Point2& x, double) { return x[0]; }, radii, lo);
      svg::Series cs{"u = x (control), slope " + pretty(ctl.lhs), {}, true};
      for (const auto& [R, gmax] : ctl.refinement) {
        csv << "control," << fmt(R) << ',' << fmt(gmax) << '\n';
        cs.points.emplace_back(R, gmax);
      }
      plot.series.push_back(cs);
      j["control"] = ctl.to_json();
      if (ctl.lhs < -0.2) out.failures.push_back("linear control decays with exponent " + pretty(ctl.lhs));
      out.summary.push_back("control exponent " + pretty(ctl.lhs) + " (no decay expected)");
    }
    out.artifacts.push_back({e.name + ".csv", csv.str()});
    out.artifacts.push_back({e.name + ".json", dump(j)});
    out.artifacts.push_back({e.name + ".svg", plot.render()});
  }

  // -- bochner -------------------------------------------------------------
  void bochner(const ExperimentConfig& e, ExperimentOutcome& out) {
    const std::vector<double> sizes = e.mesh_sizes.empty() ? std::vector<double>{2 * h(), h(), h() / 2} : e.mesh_sizes;
    if (sizes.size() < 2) throw DomainError("bochner needs at least two mesh sizes");
    const std::string bexpr = e.boundary.value_or("x^2 - y^2");
    std::vector<Mesh> meshes;
    std::vector<std::vector<double>> sols;
    for (double hh : sizes) {
      meshes.push_back(domain_mesh(cfg_, s_, hh));
      const auto sol = solve_dirichlet(s_, meshes.back(), boundary_function(bexpr), cfg_.solver);
      if (!sol.converged) throw ConvergenceError("bochner: solver failed at h = " + pretty(hh));
      sols.push_back(sol.u);
    }
    std::ostringstream csv;
    csv << "N,h,curvature_side,hessian_side,slack,eps_h,red_flag\n";
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    svg::Plot plot;
    plot.title = "Bochner slack and refinement tolerance";
    plot.x_label = "h";
    plot.y_label = "value";
    plot.log_x = true;
    for (double N : cfg_.n_list) {
      std::vector<InequalityReport> reps;
      for (std::size_t k = 0; k < meshes.size(); ++k) {
        BochnerOptions bo;
        bo.N = N;
        reps.push_back(bochner_check(s_, meshes[k], sols[k], detail::interior_bump(meshes[k]), bo));
      }
      svg::Series slack{"slack, N = " + fmt(N), {}, true}, neg{"-eps_h, N = " + fmt(N), {}, true};
      for (std::size_t k = 0; k < reps.size(); ++k) {
        auto& r = reps[k];
        const bool has_eps = k + 1 < reps.size();
        const double eps = has_eps ? std::abs(r.rhs - reps[k + 1].rhs) + std::abs(r.lhs - reps[k + 1].lhs) : NAN;
        if (has_eps) {
          r.tolerance = eps;
          r.statistics["eps_h"] = eps;
          neg.points.emplace_back(sizes[k], -eps);
        }
        slack.points.emplace_back(sizes[k], r.slack);
        const bool flag = has_eps && r.red_flag();
        csv << fmt(r.parameters.at("N")) << ',' << fmt(sizes[k]) << ',' << fmt(r.lhs) << ',' << fmt(r.rhs) << ','
            << fmt(r.slack) << ',' << fmt(eps) << ',' << (flag ? 1 : 0) << '\n';
        if (flag) out.red_flags.push_back("slack " + pretty(r.slack) + " below -eps_h at h " + pretty(sizes[k]));
        arr.push_back(r.to_json());
      }
      if (reps.size() >= 3) {
        const double ratio = reps[0].tolerance / reps[1].tolerance;
        out.summary.push_back("N = " + fmt(reps[0].parameters.at("N")) + ": eps_h ratio " + pretty(ratio) +
                              ", finest checked slack " + pretty(reps[reps.size() - 2].slack));
      } else {
        out.summary.push_back("N = " + fmt(reps[0].parameters.at("N")) + ": slack " + pretty(reps[0].slack) +
                              ", eps_h " + pretty(reps[0].tolerance));
      }
      for (const auto& note : reps[0].notes) out.summary.push_back(note);
      plot.series.push_back(slack);
      plot.series.push_back(neg);
    }
    out.artifacts.push_back({e.name + ".csv", csv.str()});
    out.artifacts.push_back({e.name + ".json", dump(arr)});
    out.artifacts.push_back({e.name + ".svg", plot.render()});
  }

  // -- poincare / sobolev --------------------------------------------------
  void functional(const ExperimentConfig& e, ExperimentOutcome& out) {
    const bool sob = e.type == "sobolev";
    const std::vector<double> radii = e.radii.empty() ? std::vector<double>{0.5, 1.0, 2.0} : e.radii;
    const double nu = e.nu.value_or(2 * smallest_finite_n(cfg_.n_list).value_or(2.0));
    FunctionalOptions fo;
    fo.samples = e.samples.value_or(60);
    fo.seed = cfg_.seed;
    const double shift = 3.7, scale = -2.5;
    std::ostringstream csv;
    csv << (sob ? "R,nu,C_centered,C_uncentered,shift_error,scale_error\n" : "R,c_hat,shift_error,scale_error\n");
    svg::Plot plot;
    plot.title = sob ? "empirical Sobolev constants" : "empirical Poincare constant";
    plot.x_label = "R";
    plot.y_label = "constant";
    svg::Series main{sob ? "centered" : "c_hat", {}, true}, unc{"uncentered", {}, true};
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    std::vector<double> primary, secondary;
    for (double R : radii) {
      const Mesh mesh = rectangle_mesh(forward_ball_bounding_box(s_, cfg_.domain.center, R, 0.1), h());
      auto eval = [&](double sh, double sc) {
        FunctionalOptions o = fo;
        o.shift = sh;
        o.scale = sc;
        return sob ? sobolev_constant(s_, mesh, cfg_.domain.center, R, nu, o)
                   : poincare_constant(s_, mesh, cfg_.domain.center, R, o);
      };
      const auto base = eval(0.0, 1.0), shifted = eval(shift, 1.0), scaled = eval(0.0, scale);
      const double c = base.lhs;
      const double shift_err = std::abs(shifted.lhs - c) / c;
      double scale_err = std::abs(scaled.lhs - c) / c;
      if (sob) {
        const double u0 = base.statistics.at("C_uncentered");
        scale_err = std::max(scale_err, std::abs(scaled.statistics.at("C_uncentered") - u0) / u0);
        csv << fmt(R) << ',' << fmt(nu) << ',' << fmt(c) << ',' << fmt(u0) << ',' << fmt(shift_err) << ','
            << fmt(scale_err) << '\n';
        unc.points.emplace_back(R, u0);
        secondary.push_back(u0);
      } else {
        csv << fmt(R) << ',' << fmt(c) << ',' << fmt(shift_err) << ',' << fmt(scale_err) << '\n';
      }
      main.points.emplace_back(R, c);
      primary.push_back(c);
      auto j = base.to_json();
      j["shift_error"] = shift_err;
      j["scale_error"] = scale_err;
      arr.push_back(j);
      if (!std::isfinite(c) || !(c > 0)) out.failures.push_back("constant not finite and positive at R " + pretty(R));
      if (shift_err > 1e-10) out.failures.push_back("not invariant under u + const at R " + pretty(R));
      if (scale_err > 1e-10) out.failures.push_back("not invariant under c u at R " + pretty(R));
    }
    plot.series.push_back(main);
    if (sob) plot.series.push_back(unc);
    auto spread = [](const std::vector<double>& v) {
      return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
    };
    const double sp = spread(primary), sp2 = sob ? spread(secondary) : 1.0;
    if (certainly_flat(s_) && std::max(sp, sp2) > 2.0)
      out.red_flags.push_back("constant varies by factor " + pretty(std::max(sp, sp2)) + " across radii");
    out.summary.push_back(std::string(sob ? "centered C" : "c") + " spread across radii " + pretty(sp) +
                          (sob ? ", uncentered spread " + pretty(sp2) + ", nu " + pretty(nu) : std::string()));
    out.artifacts.push_back({e.name + ".csv", csv.str()});
    out.artifacts.push_back({e.name + ".json", dump(arr)});
    out.artifacts.push_back({e.name + ".svg", plot.render()});
  }

  // -- volume --------------------------------------------------------------
  void volume(const ExperimentConfig& e, ExperimentOutcome& out) {
    const double r1 = e.r1.value_or(1.0), r2 = e.r2.value_or(0.5);
    const Box<2> box = forward_ball_bounding_box(s_, cfg_.domain.center, r1, 0.1);
    std::vector<double> finite;
    for (double N : cfg_.n_list)
      if (std::isfinite(N)) finite.push_back(N);
    if (finite.empty()) throw DomainError("volume comparison needs a finite N in n_list");
    const auto bounds = measure_curvature_bounds(s_, box, finite);
    std::size_t pick = 0;
    while (pick < bounds.size() && !std::isfinite(bounds[pick].K)) ++pick;
    if (pick == bounds.size()) throw DomainError("volume comparison: Ric_N sentinel for every finite N");
    const double N = finite[pick], K = bounds[pick].K;
    // Quadrature error of the clipped-element volumes is pinned at h = R2/64.
    const Mesh mesh = rectangle_mesh(box, e.mesh_sizes.empty() ? r2 / 64 : e.mesh_sizes.front());
    const auto rep = bishop_gromov_check(s_, cfg_.domain.center, r1, r2, K, N, mesh, e.tolerance.value_or(0.02));
    std::ostringstream csv;
    csv << InequalityReport::csv_header() << '\n' << rep.csv_row() << '\n';
    out.artifacts.push_back({e.name + ".csv", csv.str()});
    out.artifacts.push_back({e.name + ".json", dump(rep.to_json())});
    if (rep.red_flag()) out.red_flags.push_back("volume ratio exceeds the comparison ratio by " + pretty(-rep.slack));
    out.summary.push_back("ratio " + pretty(rep.lhs) + " vs bound " + pretty(rep.rhs) + " (K " + pretty(K) + ", N " +
                          pretty(N) + ")");
  }

  // -- curvature -----------------------------------------------------------
  void curvature(const ExperimentConfig& e, ExperimentOutcome& out) {
    const int grid = e.grid.value_or(5), dirs = e.samples.value_or(8);
    const Box<2> box = domain_box(cfg_, s_);
    std::ostringstream csv;
    csv << "x,y,vx,vy,method,ricci";
    for (double N : cfg_.n_list) csv << ",ric_N" << fmt(N);
    csv << '\n';
    std::vector<CurvatureBound> bounds(cfg_.n_list.size());
    for (auto& b : bounds) b.min_ricci = INFINITY;
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        const double fx = grid == 1 ? 0.5 : double(i) / (grid - 1), fy = grid == 1 ? 0.5 : double(j) / (grid - 1);
        const Point2 x(box.lo[0] + fx * (box.hi[0] - box.lo[0]), box.lo[1] + fy * (box.hi[1] - box.lo[1]));
        for (int k = 0; k < dirs; ++k) {
          const double th = 2 * std::numbers::pi * k / dirs;
          Vector2 v(std::cos(th), std::sin(th));
          v = v / s_.at(x)(v);
          const auto rep = weighted_ricci(s_, x, v, cfg_.n_list);
          csv << fmt(x[0]) << ',' << fmt(x[1]) << ',' << fmt(v[0]) << ',' << fmt(v[1]) << ',' << to_string(rep.method)
              << ',' << fmt(rep.ricci);
          for (std::size_t n = 0; n < cfg_.n_list.size(); ++n) {
            const auto& w = rep.weighted[n];
            csv << ',' << (w.minus_infinity ? std::string("-inf") : fmt(w.value));
            auto& b = bounds[n];
            ++b.samples;
            if (w.minus_infinity) ++b.sentinels;
            else b.min_ricci = std::min(b.min_ricci, w.value);
          }
          csv << '\n';
        }
      }
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (std::size_t n = 0; n < bounds.size(); ++n) {
      auto& b = bounds[n];
      b.K = b.sentinels ? INFINITY : std::max(0.0, -b.min_ricci);
      arr.push_back({{"N", finite_or_string(cfg_.n_list[n])},
                     {"K_hat", finite_or_string(b.K)},
                     {"min_ricci", finite_or_string(b.min_ricci)},
                     {"sentinels", b.sentinels},
                     {"samples", b.samples}});
      out.summary.push_back("N = " + fmt(cfg_.n_list[n]) + ": K_hat " + fmt(b.K) +
                            (b.sentinels ? " (" + std::to_string(b.sentinels) + " sentinels)" : ""));
    }
    out.artifacts.push_back({e.name + ".csv", csv.str()});
    out.artifacts.push_back({e.name + ".json", dump(arr)});
  }

  const ScenarioConfig& cfg_;
  const RunOptions& opt_;
  FinslerStructure<2> s_;
  std::map<std::string, std::vector<SuiteMember>> suites_;
};

inline std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

}  // namespace run_detail

/// Runs every experiment of the scenario and writes all artifacts into the
/// output directory once the experiments have finished.
inline RunResult run_scenario(ScenarioConfig cfg, const RunOptions& opt) {
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.h) cfg.h = *opt.h;
  if (opt.out) cfg.output = *opt.out;
  RunResult result;
  result.out_dir = cfg.output;

  run_detail::Runner runner(cfg, opt);
  for (const auto& e : cfg.experiments) result.outcomes.push_back(runner.run(e));
  nlohmann::ordered_json constants;
  std::string manifest_error;
  try {
    constants = runner.manifest_constants();
  } catch (const std::exception& ex) {
    manifest_error = ex.what();
  }

  namespace fs = std::filesystem;
  fs::create_directories(cfg.output);
  auto write = [&](const std::string& file, const std::string& content) {
    std::ofstream f(fs::path(cfg.output) / file, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + file);
    f << content;
  };

  bool error = !manifest_error.empty(), flagged = false;
  std::ostringstream summary;
  summary << "scenario: " << cfg.name << '\n';
  if (!cfg.description.empty()) summary << cfg.description << '\n';
  summary << "h " << run_detail::pretty(cfg.h) << ", seed " << cfg.seed << '\n';
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& o : result.outcomes) {
    for (const auto& a : o.artifacts) {
      write(a.file, a.content);
      files.push_back(a.file);
    }
    std::string status = "ok";
    if (!o.error.empty()) status = "ERROR", error = true;
    else if (!o.failures.empty() || !o.red_flags.empty()) status = "FLAGGED", flagged = true;
    summary << '\n' << "[" << status << "] " << o.name << " (" << o.type << ")\n";
    for (const auto& l : o.summary) summary << "  " << l << '\n';
    for (const auto& l : o.failures) summary << "  failed: " << l << '\n';
    for (const auto& l : o.red_flags) summary << "  red flag: " << l << '\n';
    if (!o.error.empty()) summary << "  error: " << o.error << '\n';
  }
  if (!manifest_error.empty()) summary << "\nmanifest constants unavailable: " << manifest_error << '\n';
  result.exit_code = error ? 1 : flagged ? 2 : 0;
  summary << "\nexit status " << result.exit_code << '\n';

  nlohmann::ordered_json m;
  m["scenario"] = cfg.name;
  m["config"] = opt.config_path;
  m["structure"] = emit_structure(cfg.structure);
  m["domain"] = {{"shape", to_string(cfg.domain.shape)},
                 {"center", {cfg.domain.center[0], cfg.domain.center[1]}},
                 {"radius", cfg.domain.radius}};
  m["h"] = cfg.h;
  m["seed"] = cfg.seed;
  m["threads"] = opt.threads;
  auto& nl = m["n_list"] = nlohmann::ordered_json::array();
  for (double N : cfg.n_list) nl.push_back(run_detail::finite_or_string(N));
  m["versions"] = {{"finsler_lab", FINSLER_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) +
                                 "." + std::to_string(BOOST_VERSION % 100)}};
  m["measured"] = constants;
  m["experiments"] = nlohmann::ordered_json::array();
  for (const auto& o : result.outcomes)
    m["experiments"].push_back({{"name", o.name},
                                {"type", o.type},
                                {"red_flags", o.red_flags.size()},
                                {"failures", o.failures.size()},
                                {"error", o.error}});
  m["artifacts"] = files;
  m["exit_status"] = result.exit_code;
  if (opt.timestamps) m["generated_at"] = run_detail::timestamp();
  write("manifest.json", run_detail::dump(m));
  write("summary.txt", summary.str());
  return result;
}

}  // namespace finsler

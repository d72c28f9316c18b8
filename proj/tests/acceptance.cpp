// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/builtins.hpp"
#include "finsler/config.hpp"
#include "finsler/identities.hpp"
#include "finsler/runner.hpp"
#include "finsler/verify.hpp"
#include "support.hpp"

using namespace finsler;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { details.push_back("     " + what); }
};

Mesh square(const Point2& c, double half, double h) { return square_mesh(c, half, h); }

std::vector<double> nodal(const Mesh& m, const std::function<double(const Point2&)>& f) {
  std::vector<double> u(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) u[i] = f(m.nodes[i]);
  return u;
}

FinslerStructure<2> euclid() { return FinslerStructure<2>(builtin::euclidean_spec<2>()); }
FinslerStructure<2> randers(double b) { return FinslerStructure<2>(builtin::randers_spec<2>(VecN<2>(b, 0.0))); }
FinslerStructure<2> quartic(double eps) { return FinslerStructure<2>(builtin::quartic_spec<2>(eps)); }
FinslerStructure<2> gaussian() { return FinslerStructure<2>(builtin::gaussian_spec<2>()); }

std::vector<std::pair<std::string, FinslerStructure<2>>> flat_family() {
  return {{"euclidean", euclid()}, {"randers b=0.5", randers(0.5)}, {"quartic eps=0.1", quartic(0.1)}};
}

// 1. Identity suite over 10^3 samples per family.
Outcome identities() {
  Outcome o;
  const auto t0 = Clock::now();
  auto zoo = finsler::testing::family_zoo<2>();
  zoo.emplace_back("randers constant", randers(0.5));
  zoo.emplace_back("quartic constant", quartic(0.1));
  for (const auto& [name, s] : zoo) {
    for (const auto& c : identity_suite(s, s.chart(), 1000, 7))
      o.require(c.passed() && c.samples >= 1000,
                name + " " + c.name + ": max error " + num(c.max_error) + " (tol " + num(c.tolerance) + ")");
  }
  const double t = seconds_since(t0);
  o.require(t < 30, "runtime " + num(t) + " s < 30 s");
  return o;
}

// 2. Euclidean regression.
Outcome euclidean_regression() {
  Outcome o;
  const auto s = euclid();
  const Mesh disk = disk_mesh(Point2(0.0, 0.0), 1.0, 1.0 / 64);
  const auto sol = solve_dirichlet(s, disk, [](const Point2& x) { return 2 + x[0]; });
  double err = 0.0;
  for (int i = 0; i < disk.num_nodes(); ++i) err = std::max(err, std::abs(sol.u[i] - (2 + disk.nodes[i][0])));
  o.require(sol.converged, "solver converged in " + std::to_string(sol.iterations) + " iterations");
  o.require(err <= 1e-3, "unit disk, boundary 2 + x, h = 1/64: max nodal error " + num(err) + " <= 1e-3");
  Box<2> unit;
  unit.lo = VecN<2>::Constant(0.0);
  unit.hi = VecN<2>::Constant(1.0);
  const Mesh sq = rectangle_mesh(unit, 1.0 / 32);
  const double e = energy(s, sq, nodal(sq, [](const Point2& x) { return x[0]; }));
  o.require(std::abs(e - 1) <= 1e-6, "energy of u = x on the unit square " + num(e) + " = 1 +- 1e-6");
  return o;
}

// 3. Flat-case geometry.
Outcome flat_geometry() {
  Outcome o;
  for (const auto& [name, s] : flat_family()) {
    double drift = 0.0, bend = 0.0, ric = 0.0;
    for (int k = 0; k < 8; ++k) {
      const double th = 2 * std::numbers::pi * k / 8 + 0.3;
      const Point2 p(0.2 * std::cos(3.0 * k), -0.1 * k);
      const Vector2 v(1.3 * std::cos(th), 1.3 * std::sin(th));
      const auto g = shoot_geodesic(s, p, v, 2.0);
      drift = std::max(drift, g.max_speed_drift());
      for (std::size_t i = 0; i < g.points.size(); ++i)
        bend = std::max(bend, (g.points[i].c - p.c - g.times[i] * v.c).norm() / (2.0 * v.c.norm()));
      for (const auto m : {CurvatureMethod::kAuto, CurvatureMethod::kJacobiFd})
        ric = std::max(ric, std::abs(ricci(s, p, v, m).ricci));
    }
    o.require(bend <= 1e-7, name + ": geodesics straight, max relative deviation " + num(bend));
    o.require(drift <= 1e-7, name + ": speed drift " + num(drift) + " <= 1e-7");
    o.require(ric <= 1e-5, name + ": |Ricci| " + num(ric) + " <= 1e-5 (analytic and Jacobi)");
  }
  // Directed distances for the constant drift b = (0.5, 0).
  const auto s = randers(0.5);
  const Mesh m = rectangle_mesh([] {
    Box<2> b;
    b.lo = VecN<2>(-1.0, -1.0);
    b.hi = VecN<2>(2.0, 1.0);
    return b;
  }(), 1.0 / 32);
  const double fwd = distance(s, Point2(0.0, 0.0), Point2(1.0, 0.0), m);
  const double bwd = distance(s, Point2(1.0, 0.0), Point2(0.0, 0.0), m);
  o.note("F((1,0)) = " + num(s.at(Point2(0.0, 0.0))(Vector2(1.0, 0.0))) + ", F((-1,0)) = " +
         num(s.at(Point2(0.0, 0.0))(Vector2(-1.0, 0.0))));
  o.require(std::abs(fwd - 2.0 / 3) <= 1e-3, "randers d((0,0),(1,0)) = " + num(fwd) + ", expected 2/3 +- 1e-3");
  o.require(std::abs(bwd - 2.0) <= 1e-3, "randers d((1,0),(0,0)) = " + num(bwd) + ", expected 2 +- 1e-3");
  return o;
}

// 4. Weighted Ricci of the Gaussian density.
Outcome weighted_ricci_oracle() {
  Outcome o;
  const auto s = gaussian();
  double worst = 0.0, psi_err = 0.0;
  int sentinels = 0, mismatches = 0, total = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 8; ++k) {
        const Point2 x(-1.0 + 0.5 * i, -1.0 + 0.5 * j);
        const double th = 2 * std::numbers::pi * k / 8;
        const Vector2 v(std::cos(th), std::sin(th));  // F-unit
        const auto r = weighted_ricci(s, x, v, {INFINITY, 2.0});
        worst = std::max(worst, std::abs(r.weighted[0].value - 1.0));
        // Psi(t) = |x + t v|^2 / 2 along the straight geodesic.
        psi_err = std::max(psi_err, std::abs(r.psi_prime - x.c.dot(v.c)));
        const bool expect = std::abs(r.psi_prime) > 1e-6;
        sentinels += r.weighted[1].minus_infinity;
        mismatches += r.weighted[1].minus_infinity != expect;
        ++total;
      }
  o.require(worst <= 1e-4, "Ric_inf(V) = 1 at " + std::to_string(total) + " unit vectors, max error " + num(worst));
  o.require(psi_err <= 1e-6, "Psi'(0) against <x, V>, max error " + num(psi_err));
  o.require(mismatches == 0 && sentinels > 0 && sentinels < total,
            "Ric_2 sentinel exactly when |Psi'(0)| > 1e-6: " + std::to_string(sentinels) + " sentinels, " +
                std::to_string(mismatches) + " mismatches");
  return o;
}

// 5. Volume comparison.
Outcome volume_comparison() {
  Outcome o;
  const double r1 = 1.0, r2 = 0.5;
  for (const auto& [name, s] : flat_family()) {
    const Box<2> box = forward_ball_bounding_box(s, Point2(0.0, 0.0), r1, 0.1);
    const auto rep = bishop_gromov_check(s, Point2(0.0, 0.0), r1, r2, 0.0, 2.0, rectangle_mesh(box, r2 / 64));
    o.require(std::abs(rep.lhs - 4) <= 0.02 * 4, name + ": m(B_1)/m(B_1/2) = " + num(rep.lhs) + " within 2% of 4");
  }
  const auto g = gaussian();
  const Box<2> box = forward_ball_bounding_box(g, Point2(0.0, 0.0), r1, 0.1);
  for (const double N : {4.0, 8.0}) {
    const auto bound = measure_curvature_bound(g, box, N);
    const auto rep = bishop_gromov_check(g, Point2(0.0, 0.0), r1, r2, bound.K, N, rectangle_mesh(box, r2 / 64));
    o.require(std::isfinite(bound.K) && rep.slack >= 0,
              "gaussian N = " + num(N) + ", K = " + num(bound.K) + ": ratio " + num(rep.lhs) + " <= bound " +
                  num(rep.rhs) + ", slack " + num(rep.slack));
  }
  return o;
}

// 6 and 7. Gradient suite and Harnack consistency.
std::vector<SuiteMember> run_suite(double& seconds) {
  ExperimentSuite suite;
  suite.families = {{"euclidean", builtin::euclidean_spec<2>()},
                    {"randers b=0.25", builtin::randers_spec<2>(VecN<2>(0.25, 0.0))},
                    {"randers b=0.5", builtin::randers_spec<2>(VecN<2>(0.5, 0.0))},
                    {"quartic eps=0.1", builtin::quartic_spec<2>(0.1)}};
  suite.radii = {0.5, 1.0};
  suite.mesh_sizes = {1.0 / 32, 1.0 / 64};
  suite.boundary_samples = 3;
  const auto t0 = Clock::now();
  auto members = run_gradient_suite(suite);
  seconds = seconds_since(t0);
  return members;
}

Outcome gradient_suite(const std::vector<SuiteMember>& members, double seconds) {
  Outcome o;
  std::vector<InequalityReport> reps;
  double kmax = 0.0;
  bool finite = true, converged = true;
  int solves_per_h = 0;
  std::map<std::tuple<std::string, double, int>, std::map<double, double>> table;
  for (const auto& m : members) {
    reps.push_back(m.gradient);
    kmax = std::max(kmax, std::abs(m.K));
    const double sigma = m.gradient.statistics.at("sigma");
    finite = finite && std::isfinite(sigma) && sigma > 0;
    converged = converged && m.converged;
    table[{m.family, m.R, m.sample}][m.h] = sigma;
    solves_per_h += m.h == 1.0 / 64;
  }
  o.require(solves_per_h >= 20, std::to_string(members.size()) + " solves, " + std::to_string(solves_per_h) +
                                    " per mesh size");
  o.require(converged, "every solve converged");
  o.require(kmax == 0.0, "measured K = " + num(kmax));
  const auto fit = fit_constant(reps);
  o.require(finite && std::isfinite(fit.value), "sigma finite and positive, suite constant " + num(fit.value) +
                                                    " over " + std::to_string(fit.reports) + " reports");
  double worst = 0.0;
  std::string where;
  for (const auto& [key, row] : table) {
    const double c = row.at(1.0 / 32), f = row.at(1.0 / 64);
    const double change = std::abs(f - c) / c;
    if (change > worst) {
      worst = change;
      where = std::get<0>(key) + " R = " + num(std::get<1>(key)) + " sample " + std::to_string(std::get<2>(key));
    }
  }
  o.require(worst <= 0.10, "max sigma change under h = 1/32 -> 1/64: " + num(100 * worst) + "% (" + where + ")");
  o.require(seconds < 600, "runtime " + num(seconds) + " s < 600 s");
  return o;
}

Outcome harnack(const std::vector<SuiteMember>& members) {
  Outcome o;
  int flagged = 0;
  double worst = INFINITY;
  for (const auto& m : members) {
    const bool ok = m.harnack.tolerance == 5e-2 && m.harnack.slack >= -5e-2 && std::isfinite(m.harnack.slack);
    flagged += !ok;
    worst = std::min(worst, m.harnack.slack);
  }
  o.require(!members.empty() && flagged == 0, "log(sup/inf) <= (rho + 1) R grad + 5e-2 for all " +
                                                  std::to_string(members.size()) + " members, smallest slack " +
                                                  num(worst));
  return o;
}

// 8. Liouville trend.
Outcome liouville() {
  Outcome o;
  const std::vector<double> radii{2, 4, 8, 16};
  auto bounded = [](const Point2& x, double) {
    const double th = std::atan2(x[1], x[0]);
    return 2 + 0.7 * std::cos(th) + 0.5 * std::sin(3 * th);
  };
  for (const auto& [name, s] : flat_family()) {
    const auto r = liouville_trend(s, bounded, radii);
    o.require(r.lhs <= -0.8, name + ": fitted exponent " + num(r.lhs) + " <= -0.8");
    const auto c = liouville_trend(s, [](const Point2& x, double) { return x[0]; }, radii);
    o.require(c.lhs > -0.2, name + ": control u = x exponent " + num(c.lhs) + " shows no decay");
  }
  return o;
}

// 9. Bochner inequality.
Outcome bochner() {
  Outcome o;
  const std::vector<double> sizes{1.0 / 32, 1.0 / 64, 1.0 / 128};
  std::vector<Mesh> meshes;
  for (double h : sizes) meshes.push_back(square(Point2(0.0, 0.0), 1.0, h));
  const BoundaryData boundary = [](const Point2& x) { return x[0] * x[0] - x[1] * x[1] + 0.3 * x[0]; };
  auto cases = flat_family();
  cases.emplace_back("gaussian", gaussian());
  for (const auto& [name, s] : cases) {
    const std::vector<double> ns =
        s.has_constant_density() ? std::vector<double>{2.0} : std::vector<double>{INFINITY, 4.0, 2.0};
    for (double N : ns) {
      BochnerOptions bo;
      bo.N = N;
      const auto reps = bochner_refinement(s, meshes, boundary, bo);
      const std::string tag = name + " N = " + num(reps[0].parameters.at("N"));
      for (int k = 0; k < 2; ++k)
        o.require(reps[k].slack >= -reps[k].tolerance, tag + " h = " + num(sizes[k]) + ": slack " +
                                                           num(reps[k].slack) + " >= -eps_h = " +
                                                           num(-reps[k].tolerance));
      const double ratio = reps[0].tolerance / reps[1].tolerance;
      o.require(ratio >= 1.5, tag + ": eps_h ratio " + num(ratio) + " >= 1.5");
    }
  }
  const auto s = euclid();
  const auto u = nodal(meshes[1], [](const Point2& x) { return x[0] * x[0] - x[1] * x[1]; });
  const auto r = bochner_check(s, meshes[1], u, detail::interior_bump(meshes[1]), {0.0, 2.0});
  const double expect = 8 * r.statistics.at("eta_mass");
  o.require(std::abs(r.rhs - expect) <= 0.05 * expect,
            "u = x^2 - y^2 at h = 1/64: Hessian side " + num(r.rhs) + " vs 8 int eta = " + num(expect));
  return o;
}

// 10. Poincare and Sobolev constants.
Outcome functional_constants() {
  Outcome o;
  const Point2 p(0.0, 0.0);
  for (const auto& [name, s] : flat_family()) {
    std::vector<double> c_hat, big_c;
    double inv = 0.0;
    for (double R : {0.5, 1.0, 2.0}) {
      const Mesh mesh = rectangle_mesh(forward_ball_bounding_box(s, p, R, 0.1), 1.0 / 32);
      FunctionalOptions base;
      auto with = [&](double shift, double scale) {
        FunctionalOptions f = base;
        f.shift = shift;
        f.scale = scale;
        return f;
      };
      const double c = poincare_constant(s, mesh, p, R).lhs;
      const double C = sobolev_constant(s, mesh, p, R, 4.0).lhs;
      for (const auto& f : {with(3.7, 1.0), with(0.0, -2.5), with(-11.0, 0.4)}) {
        inv = std::max(inv, std::abs(poincare_constant(s, mesh, p, R, f).lhs - c) / c);
        inv = std::max(inv, std::abs(sobolev_constant(s, mesh, p, R, 4.0, f).lhs - C) / C);
      }
      c_hat.push_back(c);
      big_c.push_back(C);
    }
    auto spread = [](const std::vector<double>& v) {
      return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
    };
    const bool finite = std::all_of(c_hat.begin(), c_hat.end(), [](double x) { return std::isfinite(x) && x > 0; }) &&
                        std::all_of(big_c.begin(), big_c.end(), [](double x) { return std::isfinite(x) && x > 0; });
    o.require(finite, name + ": c = " + num(c_hat[0]) + ", " + num(c_hat[1]) + ", " + num(c_hat[2]) + "; C = " +
                          num(big_c[0]) + ", " + num(big_c[1]) + ", " + num(big_c[2]));
    o.require(inv <= 1e-10, name + ": invariance under u + c and c u, max relative change " + num(inv));
    o.require(spread(c_hat) <= 2 && spread(big_c) <= 2,
              name + ": spread across R = 0.5, 1, 2: c " + num(spread(c_hat)) + ", C " + num(spread(big_c)));
  }
  return o;
}

// 11. Determinism of the CLI pipeline.
std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.path().extension() != ".csv") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(entry.path(), dir).string()] = ss.str();
  }
  return out;
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "finsler_acceptance";
  fs::remove_all(root);
  std::vector<std::map<std::string, std::string>> runs;
  for (const auto& [name, threads] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 1}, {"c", 2}}) {
    auto cfg = load_scenario(std::string(FINSLER_SCENARIO_DIR) + "/randers-const.yaml");
    RunOptions opt;
    opt.out = (root / name).string();
    opt.h = 1.0 / 8;
    opt.threads = threads;
    const auto r = run_scenario(cfg, opt);
    o.require(r.exit_code != 1, "run " + name + " (threads " + std::to_string(threads) + ") exit code " +
                                    std::to_string(r.exit_code));
    runs.push_back(csv_files(root / name));
  }
  o.require(runs[0].size() >= 10, std::to_string(runs[0].size()) + " CSV files per run");
  o.require(runs[0] == runs[1], "repeated runs byte-identical");
  o.require(runs[0] == runs[2], "one and two threads byte-identical");
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  struct Criterion {
    int id;
    std::string title;
    std::function<Outcome()> run;
  };
  std::vector<SuiteMember> members;
  double suite_seconds = 0.0;
  const std::vector<Criterion> criteria = {
      {1, "algebraic identity suite", identities},
      {2, "euclidean regression", euclidean_regression},
      {3, "flat-case geometry", flat_geometry},
      {4, "weighted Ricci oracle", weighted_ricci_oracle},
      {5, "volume comparison", volume_comparison},
      {6, "gradient estimate suite",
       [&] {
         members = run_suite(suite_seconds);
         return gradient_suite(members, suite_seconds);
       }},
      {7, "harnack consistency", [&] { return harnack(members); }},
      {8, "liouville trend", liouville},
      {9, "bochner inequality", bochner},
      {10, "poincare and sobolev constants", functional_constants},
      {11, "determinism", determinism},
  };
  std::vector<std::string> lines;
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("error: ") + e.what());
    }
    const std::string line = std::string(o.pass ? "PASS" : "FAIL") + "  " + std::to_string(c.id) + ". " + c.title +
                             " (" + num(seconds_since(t0)) + " s)";
    std::printf("%s\n", line.c_str());
    for (const auto& d : o.details) std::printf("        %s\n", d.c_str());
    std::fflush(stdout);
    lines.push_back(line);
    failed += !o.pass;
  }
  std::printf("\nsummary\n");
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  std::printf("%d of %zu criteria passed\n", static_cast<int>(lines.size()) - failed, lines.size());
  return failed == 0 ? 0 : 1;
}

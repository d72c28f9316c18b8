#pragma once

// Empirical checks of the gradient estimate and its consequences (Harnack,
// Liouville), the integrated Bochner inequality, and the Poincare and
// Sobolev constants, plus suite bookkeeping.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <array>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "finsler/balls.hpp"
#include "finsler/geometry.hpp"
#include "finsler/mesh.hpp"
#include "finsler/norms.hpp"
#include "finsler/pde.hpp"
#include "finsler/report.hpp"

namespace finsler {

using BoundaryData = std::function<double(const Point2&)>;

/// Elements of the forward ball B+_R(p): centroid distance (mean of the
/// nodal values) below R.
struct BallElements {
  std::vector<double> distance;  // nodal forward distances from p
  std::vector<int> elements;
  std::vector<int> nodes;        // nodes with d < R
  bool truncated = false;        // some boundary node lies within the requested cover radius
};

inline BallElements ball_elements(const FinslerStructure<2>& s, const Mesh& mesh, const Point2& p, double R,
                                  double cover = 0.0) {
  DistanceOptions opt;
  opt.cutoff = 1.15 * std::max(R, cover) + 4 * mesh.h;
  const auto field = forward_distance_field(s, mesh, p, opt);
  BallElements b;
  b.distance = field.value;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    if ((b.distance[tri[0]] + b.distance[tri[1]] + b.distance[tri[2]]) / 3.0 < R) b.elements.push_back(t);
  }
  const double reach = std::max(R, cover);
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (b.distance[i] < R) b.nodes.push_back(i);
    if (mesh.boundary[i] && b.distance[i] < reach * (1 - 1e-9)) b.truncated = true;
  }
  return b;
}

/// Axis-aligned box containing B+_R(p), with a relative margin.
inline Box<2> forward_ball_bounding_box(const FinslerStructure<2>& s, const Point2& p, double R, double margin = 0.05) {
  Box<2> box;
  box.lo = p.c;
  box.hi = p.c;
  const int dirs = 720;
  if (s.is_locally_minkowski()) {
    const auto n = s.at(p);
    for (int k = 0; k < dirs; ++k) {
      const double th = 2 * std::numbers::pi * k / dirs;
      const VecN<2> e(std::cos(th), std::sin(th));
      const VecN<2> q = p.c + R / n(Vector2(e)) * e;
      box.lo = box.lo.cwiseMin(q);
      box.hi = box.hi.cwiseMax(q);
    }
  } else {
    // Any curve leaving the Euclidean disk D_r(p) has length >= r min_{D_r} F,
    // so B+_R(p) lies in D_r once r min_{D_r} F >= R.
    auto min_f = [&](double r) {
      double m = INFINITY;
      for (int i = 0; i <= 8; ++i)
        for (int a = 0; a < (i == 0 ? 1 : 24); ++a) {
          const double rr = r * i / 8, ph = 2 * std::numbers::pi * a / 24;
          const auto n = s.at(Point2(p[0] + rr * std::cos(ph), p[1] + rr * std::sin(ph)));
          for (int k = 0; k < 36; ++k) {
            const double th = 2 * std::numbers::pi * k / 36;
            m = std::min(m, n(Vector2(std::cos(th), std::sin(th))));
          }
        }
      return m;
    };
    double r = R / s.at(p)(Vector2(1.0, 0.0)) * 0.5;
    for (int it = 0; it < 200 && r * min_f(r) < R; ++it) r *= 1.05;
    if (r * min_f(r) < R) throw DomainError("forward_ball_bounding_box: ball does not fit a bounded disk");
    // Directional sampling of F misses the minimum by a few percent; pad.
    r *= 1.03;
    box.lo = p.c - VecN<2>::Constant(r);
    box.hi = p.c + VecN<2>::Constant(r);
  }
  const VecN<2> pad = margin * (box.hi - box.lo);
  box.lo -= pad;
  box.hi += pad;
  return box;
}

// ---------------------------------------------------------------------------
// Gradient estimate and Harnack

struct GradientEstimateOptions {
  double K = 0.0;
  double constant = std::numeric_limits<double>::quiet_NaN();  // supplied C; NaN leaves the RHS to the suite fit
  bool require_cover = true;  // the mesh must contain B+_{2R}(p)
};

/// max over elements of B_R of max{F(grad log u), F(grad(-log u))} and the
/// normalized statistic sigma = LHS R / (1 + sqrt(K) R).
inline InequalityReport gradient_estimate_report(const FinslerStructure<2>& s, const Mesh& mesh, const Point2& p,
                                                 double R, const std::vector<double>& u,
                                                 const GradientEstimateOptions& opt = {},
                                                 const BallElements* ball = nullptr) {
  if (!(R > 0)) throw DomainError("gradient estimate: R must be positive");
  double umin = INFINITY;
  for (double x : u) umin = std::min(umin, x);
  if (!(umin > 0)) throw DomainError("gradient estimate: u must be positive");
  BallElements local;
  if (!ball) {
    local = ball_elements(s, mesh, p, R, opt.require_cover ? 2 * R : 0.0);
    ball = &local;
  }
  if (opt.require_cover && ball->truncated) throw DomainError("gradient estimate: mesh does not cover B+_{2R}(p)");
  std::vector<double> v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = std::log(u[i]);
  double lhs = 0.0;
  for (int t : ball->elements) {
    const Covector2 dv = mesh.differential(t, v);
    if (dv.is_zero()) continue;
    const auto n = s.at(mesh.centroids[t]);
    lhs = std::max({lhs, n.dual_via_legendre(dv), n.dual_via_legendre(-dv)});
  }
  InequalityReport rep;
  rep.tag = "gradient-estimate";
  const double norm = (1 + std::sqrt(opt.K) * R) / R;
  const double sigma = lhs / norm;
  rep.set_sides(lhs, std::isnan(opt.constant) ? lhs : opt.constant * norm);
  rep.parameters = {{"R", R}, {"K", opt.K}, {"h", mesh.h}};
  rep.statistics = {{"sigma", sigma}, {"elements", double(ball->elements.size())}, {"min_u", umin}};
  if (std::isnan(opt.constant)) rep.notes.push_back("constant left to the suite fit; rhs mirrors lhs");
  return rep;
}

/// log(sup_{B_R} u / inf_{B_R} u) against (rho + 1) R max F(grad log u).
inline InequalityReport harnack_report(const FinslerStructure<2>& s, const Mesh& mesh, const Point2& p, double R,
                                       const std::vector<double>& u, double rho, double gradient_lhs,
                                       double tolerance = 5e-2, const BallElements* ball = nullptr) {
  double umin = INFINITY;
  for (double x : u) umin = std::min(umin, x);
  if (!(umin > 0)) throw DomainError("harnack: u must be positive");
  BallElements local;
  if (!ball) {
    local = ball_elements(s, mesh, p, R);
    ball = &local;
  }
  double sup = 0.0, inf = INFINITY;
  for (int i : ball->nodes) sup = std::max(sup, u[i]), inf = std::min(inf, u[i]);
  InequalityReport rep;
  rep.tag = "harnack";
  rep.set_sides(ball->nodes.empty() ? 0.0 : std::log(sup / inf), (rho + 1) * R * gradient_lhs);
  rep.tolerance = tolerance;
  rep.parameters = {{"R", R}, {"rho", rho}, {"h", mesh.h}};
  rep.statistics = {{"sup", sup}, {"inf", inf}, {"gradient_lhs", gradient_lhs}};
  return rep;
}

// ---------------------------------------------------------------------------
// Liouville trend

struct LiouvilleOptions {
  double h = 1.0 / 16;        // spacing inside the fine core
  double core = 1.25;         // radius of the fine core
  double threshold = -0.8;    // decay exponent must not exceed this
  SolverConfig solver;
};

/// Solves on disks B_R(0) (graded meshes) with boundary data
/// boundary(x, R) and fits the decay of max_{B_1} F(grad u) in R.
inline InequalityReport liouville_trend(const FinslerStructure<2>& s,
                                        const std::function<double(const Point2&, double)>& boundary,
                                        const std::vector<double>& radii, const LiouvilleOptions& opt = {}) {
  if (radii.size() < 2) throw DomainError("liouville_trend: need at least two radii");
  InequalityReport rep;
  rep.tag = "liouville";
  std::vector<double> lx, ly;
  double implied = 0.0;
  for (double R : radii) {
    const Mesh mesh = graded_disk_mesh(Point2(0.0, 0.0), R, opt.h, std::min(opt.core, R));
    const auto sol = solve_dirichlet(s, mesh, [&](const Point2& x) { return boundary(x, R); }, opt.solver);
    if (!sol.converged) throw ConvergenceError("liouville_trend: solver failed at R = " + std::to_string(R));
    const auto ball = ball_elements(s, mesh, Point2(0.0, 0.0), 1.0);
    double gmax = 0.0, umax = 0.0;
    for (int t : ball.elements) {
      const Covector2 du = mesh.differential(t, sol.u);
      if (!du.is_zero()) gmax = std::max(gmax, s.at(mesh.centroids[t]).dual_via_legendre(du));
    }
    for (double x : sol.u) umax = std::max(umax, std::abs(x));
    rep.refinement.emplace_back(R, gmax);
    rep.statistics["max_gradient_R" + std::to_string(static_cast<int>(std::lround(R)))] = gmax;
    implied = std::max(implied, gmax * R / (3 * umax));
    lx.push_back(std::log(R));
    ly.push_back(std::log(std::max(gmax, 1e-300)));
  }
  // Least-squares slope of log max|grad u| against log R.
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) mx += lx[k] / n, my += ly[k] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) sxy += (lx[k] - mx) * (ly[k] - my), sxx += (lx[k] - mx) * (lx[k] - mx);
  const double slope = sxy / sxx;
  rep.set_sides(slope, opt.threshold);
  rep.parameters = {{"h", opt.h}, {"K", 0.0}};
  rep.statistics["decay_exponent"] = slope;
  rep.statistics["implied_constant"] = implied;  // max_R max F(grad u) R / (3 max|u|)
  return rep;
}

// ---------------------------------------------------------------------------
// Measured curvature bound

struct CurvatureBound {
  double K = 0.0;              // max(0, -min Ric_N) over unit directions
  double min_ricci = 0.0;
  int samples = 0;
  int sentinels = 0;           // -infinity branches met (N = n)
  Point2 argmin;
  Vector2 direction;
};

/// K-hat = max(0, -min Ric_N) over a grid of points and F-unit directions,
/// one entry per N; a -infinity sentinel anywhere makes K-hat infinite.
inline std::vector<CurvatureBound> measure_curvature_bounds(const FinslerStructure<2>& s, const Box<2>& domain,
                                                            const std::vector<double>& n_list, int grid = 5,
                                                            int directions = 8) {
  std::vector<CurvatureBound> out(n_list.size());
  for (auto& cb : out) cb.min_ricci = INFINITY;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const double fx = grid == 1 ? 0.5 : double(i) / (grid - 1), fy = grid == 1 ? 0.5 : double(j) / (grid - 1);
      const Point2 x(domain.lo[0] + fx * (domain.hi[0] - domain.lo[0]), domain.lo[1] + fy * (domain.hi[1] - domain.lo[1]));
      for (int k = 0; k < directions; ++k) {
        const double th = 2 * std::numbers::pi * k / directions;
        Vector2 v(std::cos(th), std::sin(th));
        v = v / s.at(x)(v);
        const auto rep = weighted_ricci(s, x, v, n_list);
        for (std::size_t n = 0; n < n_list.size(); ++n) {
          auto& cb = out[n];
          ++cb.samples;
          if (rep.weighted[n].minus_infinity) {
            ++cb.sentinels;
            continue;
          }
          if (rep.weighted[n].value < cb.min_ricci) {
            cb.min_ricci = rep.weighted[n].value;
            cb.argmin = x;
            cb.direction = v;
          }
        }
      }
    }
  for (auto& cb : out) cb.K = cb.sentinels > 0 ? INFINITY : std::max(0.0, -cb.min_ricci);
  return out;
}

inline CurvatureBound measure_curvature_bound(const FinslerStructure<2>& s, const Box<2>& domain, double N,
                                              int grid = 5, int directions = 8) {
  return measure_curvature_bounds(s, domain, {N}, grid, directions).front();
}

// ---------------------------------------------------------------------------
// Bochner inequality

struct BochnerOptions {
  double K = 0.0;  // recorded; the right side uses the sampled Ric_N itself
  double N = std::numeric_limits<double>::infinity();
};

/// Integrated Bochner inequality tested with a nonnegative eta:
///   -int D(eta)(grad^{grad u} (F^2(grad u)/2)) dm  >=  int eta Ric_N(grad u) dm
/// (the Delta_m u terms vanish for harmonic u). The report's lhs is the
/// curvature side and its rhs the Hessian side, so slack = hessian - curvature.
inline InequalityReport bochner_check(const FinslerStructure<2>& s, const Mesh& mesh, const std::vector<double>& u,
                                      const std::vector<double>& eta, const BochnerOptions& opt = {}) {
  if (static_cast<int>(eta.size()) != mesh.num_nodes()) throw DomainError("bochner: eta must be nodal");
  for (double e : eta)
    if (e < 0) throw DomainError("bochner: eta must be nonnegative");
  const Discretization disc(s, mesh);
  const auto grad = disc.gradient_field(u);
  // Nodal recovery of f = F^2(grad u)/2 by weighted averaging.
  std::vector<double> f(mesh.num_nodes(), 0.0), wsum(mesh.num_nodes(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double ft = grad[t].is_zero() ? 0.0 : 0.5 * std::pow(disc.norm(t)(grad[t]), 2);
    for (int k : mesh.triangles[t]) f[k] += disc.weight(t) * ft, wsum[k] += disc.weight(t);
  }
  for (int i = 0; i < mesh.num_nodes(); ++i) f[i] /= wsum[i];

  double N = opt.N;
  InequalityReport rep;
  auto curvature_side = [&](double n_value, bool& sentinel) {
    double acc = 0.0;
    sentinel = false;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      if (grad[t].is_zero()) continue;
      const auto& tri = mesh.triangles[t];
      const double eta_c = (eta[tri[0]] + eta[tri[1]] + eta[tri[2]]) / 3.0;
      if (eta_c == 0.0) continue;
      const auto w = weighted_ricci(s, mesh.centroids[t], grad[t], {n_value});
      if (w.weighted[0].minus_infinity) {
        sentinel = true;
        return 0.0;
      }
      acc += eta_c * w.weighted[0].value * disc.weight(t);
    }
    return acc;
  };
  bool sentinel = false;
  double curv = curvature_side(N, sentinel);
  if (sentinel) {
    rep.notes.push_back("Ric_N hit the -infinity branch at N = n; switched to N = n + 1");
    N = 2 + 1.0;
    curv = curvature_side(N, sentinel);
  }
  double hess = 0.0, eta_mass = 0.0, f2_mass = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const VecN<2> deta = mesh.differential(t, eta).c;
    const auto& tri = mesh.triangles[t];
    const double eta_c = (eta[tri[0]] + eta[tri[1]] + eta[tri[2]]) / 3.0;
    eta_mass += eta_c * disc.weight(t);
    if (grad[t].is_zero()) continue;
    f2_mass += eta_c * std::pow(disc.norm(t)(grad[t]), 2) * disc.weight(t);
    const MatN<2> gi = disc.norm(t).fundamental_tensor(grad[t]).inverse;
    const VecN<2> df = mesh.differential(t, f).c;
    hess -= deta.dot(gi * df) * disc.weight(t);
  }
  rep.tag = "bochner";
  rep.set_sides(curv, hess);
  rep.parameters = {{"K", opt.K}, {"N", N}, {"h", mesh.h}};
  rep.statistics = {{"hessian_side", hess}, {"curvature_side", curv}, {"eta_mass", eta_mass},
                    {"eta_f2_mass", f2_mass}, {"lower_bound_side", -opt.K * f2_mass}};
  return rep;
}

/// Runs the Bochner check on a sequence of meshes (coarse to fine) and sets
/// each level's tolerance to eps_h = |hess_h - hess_{h/2}| + |curv_h - curv_{h/2}|.
/// The finest level only serves as the reference for its predecessor.
inline std::vector<InequalityReport> bochner_refinement(const FinslerStructure<2>& s,
                                                        const std::vector<Mesh>& meshes, const BoundaryData& boundary,
                                                        const BochnerOptions& opt = {},
                                                        const SolverConfig& cfg = {}) {
  std::vector<InequalityReport> reps;
  for (const auto& mesh : meshes) {
    const auto sol = solve_dirichlet(s, mesh, boundary, cfg);
    if (!sol.converged) throw ConvergenceError("bochner_refinement: solver failed");
    reps.push_back(bochner_check(s, mesh, sol.u, detail::interior_bump(mesh), opt));
  }
  for (std::size_t k = 0; k + 1 < reps.size(); ++k) {
    const double eps = std::abs(reps[k].rhs - reps[k + 1].rhs) + std::abs(reps[k].lhs - reps[k + 1].lhs);
    reps[k].tolerance = eps;
    reps[k].statistics["eps_h"] = eps;
  }
  for (std::size_t k = 0; k + 1 < reps.size(); ++k) reps[k].refinement.emplace_back(reps[k].parameters["h"], reps[k].rhs);
  return reps;
}

// ---------------------------------------------------------------------------
// Poincare and Sobolev constants

/// Smooth sample fields on B_R(p): random combinations of the ten lowest
/// trigonometric modes in ball-normalized coordinates (x - p)/R, returned
/// in +/- pairs so the sample set is symmetric under u -> -u.
class SampleFields {
 public:
  SampleFields(const Point2& center, double R, int count, std::uint64_t seed) : center_(center), R_(R) {
    // (kx, ky, phase) triples, ordered by frequency.
    const std::vector<std::array<int, 2>> freq = {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 0},
                                                  {0, 2}, {2, 1}, {1, 2}, {2, -1}, {1, -2}};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> ph(0.0, 2 * std::numbers::pi);
    const int pairs = (count + 1) / 2;
    for (int k = 0; k < pairs; ++k) {
      std::vector<Mode> modes;
      for (const auto& f : freq) {
        const double amp = g(rng) / (1.0 + f[0] * f[0] + f[1] * f[1]);
        modes.push_back({f[0] * std::numbers::pi / 2, f[1] * std::numbers::pi / 2, ph(rng), amp});
      }
      samples_.push_back(modes);
    }
  }

  int size() const { return 2 * static_cast<int>(samples_.size()); }

  std::vector<double> nodal(const Mesh& mesh, int k) const {
    const auto& modes = samples_[k / 2];
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    std::vector<double> u(mesh.num_nodes());
    for (int i = 0; i < mesh.num_nodes(); ++i) {
      const VecN<2> xi = (mesh.nodes[i].c - center_.c) / R_;
      double v = 0.0;
      for (const auto& m : modes) v += m.amp * std::cos(m.kx * xi[0] + m.ky * xi[1] + m.phase);
      u[i] = sign * v;
    }
    return u;
  }

 private:
  struct Mode {
    double kx, ky, phase, amp;
  };
  Point2 center_;
  double R_;
  std::vector<std::vector<Mode>> samples_;
};

namespace detail {

// Degree-4 symmetric quadrature on the reference triangle (barycentric
// points, weights summing to one).
inline const std::array<std::pair<std::array<double, 3>, double>, 6>& degree4_rule() {
  static const std::array<std::pair<std::array<double, 3>, double>, 6> rule = [] {
    const double a = 0.445948490915965, wa = 0.223381589678011;
    const double b = 0.091576213509771, wb = 0.109951743655322;
    return std::array<std::pair<std::array<double, 3>, double>, 6>{
        {{{a, a, 1 - 2 * a}, wa}, {{a, 1 - 2 * a, a}, wa}, {{1 - 2 * a, a, a}, wa},
         {{b, b, 1 - 2 * b}, wb}, {{b, 1 - 2 * b, b}, wb}, {{1 - 2 * b, b, b}, wb}}};
  }();
  return rule;
}

struct BallIntegrals {
  double mass = 0, mean = 0, centered_l2 = 0, l2 = 0, dirichlet = 0, centered_lq = 0, lq = 0;
};

inline BallIntegrals ball_integrals(const FinslerStructure<2>& s, const Mesh& mesh, const std::vector<int>& elements,
                                    const std::vector<double>& u, double q) {
  BallIntegrals b;
  std::vector<double> w(elements.size());
  for (std::size_t k = 0; k < elements.size(); ++k) {
    const int t = elements[k];
    w[k] = mesh.areas[t] * s.density(mesh.centroids[t]);
    const auto& tri = mesh.triangles[t];
    b.mass += w[k];
    b.mean += w[k] * (u[tri[0]] + u[tri[1]] + u[tri[2]]) / 3.0;
  }
  b.mean /= b.mass;
  for (std::size_t k = 0; k < elements.size(); ++k) {
    const int t = elements[k];
    const auto& tri = mesh.triangles[t];
    const double a = u[tri[0]], c = u[tri[1]], d = u[tri[2]];
    // Exact integral of a P1 function squared: |T|/6 (sum u^2 + sum_{i<j} u_i u_j).
    auto sq = [&](double x0, double x1, double x2) { return (x0 * x0 + x1 * x1 + x2 * x2 + x0 * x1 + x1 * x2 + x0 * x2) / 6.0; };
    b.l2 += w[k] * sq(a, c, d);
    b.centered_l2 += w[k] * sq(a - b.mean, c - b.mean, d - b.mean);
    for (const auto& [bc, qw] : degree4_rule()) {
      const double val = bc[0] * a + bc[1] * c + bc[2] * d;
      b.lq += w[k] * qw * std::pow(std::abs(val), q);
      b.centered_lq += w[k] * qw * std::pow(std::abs(val - b.mean), q);
    }
    const Covector2 du = mesh.differential(t, u);
    if (!du.is_zero()) b.dirichlet += w[k] * std::pow(s.at(mesh.centroids[t]).dual_via_legendre(du), 2);
  }
  return b;
}

}  // namespace detail

struct FunctionalOptions {
  int samples = 60;
  std::uint64_t seed = 1;
  double shift = 0.0;  // added to every sample
  double scale = 1.0;  // multiplies every sample
  double K = 0.0;
};

/// c(R) = max_samples int |u - mean|^2 dm / (R^2 int F*^2(Du) dm) on B+_R(p).
inline InequalityReport poincare_constant(const FinslerStructure<2>& s, const Mesh& mesh, const Point2& p, double R,
                                          const FunctionalOptions& opt = {}) {
  const auto ball = ball_elements(s, mesh, p, R);
  if (ball.truncated) throw DomainError("poincare: ball truncated by the mesh");
  const SampleFields fields(p, R, opt.samples, opt.seed);
  double best = 0.0;
  int used = 0;
  for (int k = 0; k < fields.size(); ++k) {
    auto u = fields.nodal(mesh, k);
    for (double& x : u) x = opt.scale * x + opt.shift;
    const auto I = detail::ball_integrals(s, mesh, ball.elements, u, 2.0);
    if (!(I.dirichlet > 0)) continue;  // constant sample
    best = std::max(best, I.centered_l2 / (R * R * I.dirichlet));
    ++used;
  }
  InequalityReport rep;
  rep.tag = "poincare";
  rep.set_sides(best, best);
  rep.parameters = {{"R", R}, {"K", opt.K}, {"h", mesh.h}, {"samples", double(used)}};
  rep.statistics = {{"c_hat", best}};
  rep.notes.push_back("empirical constant; rhs mirrors lhs");
  return rep;
}

/// Sobolev constants with exponent 2nu/(nu-2): the centered form
///   (int |u - mean|^q)^{2/q} <= C R^2 m(B)^{-2/nu} int F*^2(Du)
/// and the uncentered form with int F*^2(Du) + R^{-2} u^2 on the right.
inline InequalityReport sobolev_constant(const FinslerStructure<2>& s, const Mesh& mesh, const Point2& p, double R,
                                         double nu, const FunctionalOptions& opt = {},
                                         const std::function<bool(const Point2&)>& support = nullptr) {
  if (!(nu > 2)) throw DomainError("sobolev: nu must exceed 2");
  const auto ball = ball_elements(s, mesh, p, R);
  if (ball.truncated) throw DomainError("sobolev: ball truncated by the mesh");
  const double q = 2 * nu / (nu - 2);
  const SampleFields fields(p, R, opt.samples, opt.seed);
  double centered = 0.0, uncentered = 0.0, mass = 0.0;
  int used = 0;
  for (int k = 0; k < fields.size(); ++k) {
    auto u = fields.nodal(mesh, k);
    for (int i = 0; i < mesh.num_nodes(); ++i) {
      u[i] = opt.scale * u[i] + opt.shift;
      if (support && !support(mesh.nodes[i])) u[i] = 0.0;
    }
    const auto I = detail::ball_integrals(s, mesh, ball.elements, u, q);
    mass = I.mass;
    if (!(I.dirichlet > 0)) continue;
    const double scale = R * R * std::pow(I.mass, -2.0 / nu);
    centered = std::max(centered, std::pow(I.centered_lq, 2.0 / q) / (scale * I.dirichlet));
    uncentered = std::max(uncentered, std::pow(I.lq, 2.0 / q) / (scale * (I.dirichlet + I.l2 / (R * R))));
    ++used;
  }
  InequalityReport rep;
  rep.tag = "sobolev";
  rep.set_sides(centered, centered);
  rep.parameters = {{"R", R}, {"K", opt.K}, {"h", mesh.h}, {"nu", nu}, {"samples", double(used)}};
  rep.statistics = {{"C_centered", centered}, {"C_uncentered", uncentered}, {"ball_measure", mass}};
  rep.notes.push_back("empirical constant; rhs mirrors lhs");
  return rep;
}

// ---------------------------------------------------------------------------
// Constant fitting and suites

struct ConstantFit {
  double value = 0.0;  // max sigma
  int reports = 0;
  bool underpowered = false;  // fewer than 10 reports
  std::map<std::string, double> covariates;  // parameters of the maximizing report
};

inline ConstantFit fit_constant(const std::vector<InequalityReport>& reports, const std::string& statistic = "sigma") {
  if (reports.empty()) throw DomainError("fit_constant: empty suite");
  ConstantFit fit;
  fit.value = -INFINITY;
  for (const auto& r : reports) {
    if (r.tag != reports.front().tag) throw DomainError("fit_constant: mixed inequality tags");
    const auto it = r.statistics.find(statistic);
    if (it == r.statistics.end()) throw DomainError("fit_constant: report lacks statistic " + statistic);
    if (it->second > fit.value) {
      fit.value = it->second;
      fit.covariates = r.parameters;
    }
  }
  fit.reports = static_cast<int>(reports.size());
  fit.underpowered = fit.reports < 10;
  return fit;
}

struct SuiteFamily {
  std::string name;
  StructureSpec<2> spec;
};

struct ExperimentSuite {
  std::vector<SuiteFamily> families;
  std::vector<double> radii{0.5, 1.0};
  std::vector<double> mesh_sizes{1.0 / 32, 1.0 / 64};
  int boundary_samples = 3;  // random positive boundary data per (family, R)
  std::uint64_t seed = 1;
  Point2 center{0.0, 0.0};
  SolverConfig solver;
  int threads = 1;
  double N = std::numeric_limits<double>::infinity();  // dimension parameter behind K-hat
};

struct SuiteMember {
  std::string family;
  double R = 0;
  int sample = 0;
  double h = 0;
  double K = 0;
  double rho = 1;
  bool converged = false;
  InequalityReport gradient;
  InequalityReport harnack;
};

/// Positive boundary data: 1 + sum |a_j| + sum a_j sin(w_j . (x - p)/R + phi_j).
inline BoundaryData random_positive_boundary(std::uint64_t seed, const Point2& center, double R) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-0.6, 0.6), freq(-2.0, 2.0), ph(0.0, 2 * std::numbers::pi);
  struct Term {
    double a, wx, wy, phi;
  };
  std::vector<Term> terms;
  double base = 1.0;
  for (int j = 0; j < 4; ++j) {
    terms.push_back({amp(rng), freq(rng), freq(rng), ph(rng)});
    base += std::abs(terms.back().a);
  }
  return [terms, base, center, R](const Point2& x) {
    const VecN<2> y = (x.c - center.c) / R;
    double v = base;
    for (const auto& t : terms) v += t.a * std::sin(t.wx * y[0] + t.wy * y[1] + t.phi);
    return v;
  };
}

/// Runs every (family, R, boundary sample, h) combination: solve on a
/// rectangle covering B+_{2R}, then gradient-estimate and Harnack reports.
/// Results are ordered by (family, R, sample, h) regardless of threading.
inline std::vector<SuiteMember> run_gradient_suite(const ExperimentSuite& suite) {
  if (suite.radii.empty() || suite.mesh_sizes.empty()) throw DomainError("gradient suite: empty grid");
  struct Job {
    int family;
    double R;
    int sample;
    double h;
  };
  std::vector<Job> jobs;
  for (int f = 0; f < static_cast<int>(suite.families.size()); ++f)
    for (double R : suite.radii)
      for (int k = 0; k < suite.boundary_samples; ++k)
        for (double h : suite.mesh_sizes) jobs.push_back({f, R, k, h});

  std::vector<FinslerStructure<2>> structures;
  std::vector<double> rho, kappa;
  for (const auto& fam : suite.families) {
    structures.emplace_back(fam.spec);
    const double reach = 2 * *std::max_element(suite.radii.begin(), suite.radii.end());
    const Box<2> dom = forward_ball_bounding_box(structures.back(), suite.center, reach);
    rho.push_back(estimate_uniform_constants(structures.back(), dom, 4096, suite.seed).rho);
    kappa.push_back(measure_curvature_bound(structures.back(), dom, suite.N, 3, 8).K);
    if (!std::isfinite(kappa.back())) throw DomainError("gradient suite: Ric_N sentinel met; use N > n");
  }

  std::vector<SuiteMember> out(jobs.size());
  auto run = [&](std::size_t j) {
    const auto& job = jobs[j];
    const auto& s = structures[job.family];
    SuiteMember m;
    m.family = suite.families[job.family].name;
    m.R = job.R;
    m.sample = job.sample;
    m.h = job.h;
    m.K = kappa[job.family];
    m.rho = rho[job.family];
    const Box<2> box = forward_ball_bounding_box(s, suite.center, 2 * job.R);
    const Mesh mesh = rectangle_mesh(box, job.h);
    const std::uint64_t seed = suite.seed * 1000003ULL + static_cast<std::uint64_t>(job.family) * 7919ULL +
                               static_cast<std::uint64_t>(std::lround(job.R * 1000)) * 31ULL + job.sample;
    const auto g = random_positive_boundary(seed, suite.center, job.R);
    const auto sol = solve_dirichlet(s, mesh, g, suite.solver);
    m.converged = sol.converged;
    const auto ball = ball_elements(s, mesh, suite.center, job.R, 2 * job.R);
    GradientEstimateOptions go;
    go.K = m.K;
    m.gradient = gradient_estimate_report(s, mesh, suite.center, job.R, sol.u, go, &ball);
    m.gradient.parameters["rho"] = m.rho;
    m.gradient.parameters["sample"] = job.sample;
    m.harnack = harnack_report(s, mesh, suite.center, job.R, sol.u, m.rho, m.gradient.lhs, 5e-2, &ball);
    out[j] = std::move(m);
  };
  const int threads = std::max(1, suite.threads);
  if (threads == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t j; (j = next++) < jobs.size();) run(j);
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace finsler

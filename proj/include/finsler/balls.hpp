#pragma once

// Directed distances on a meshed planar domain, forward balls, their
// measure, and the volume-comparison check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "finsler/geometry.hpp"
#include "finsler/jet.hpp"
#include "finsler/lbfgs.hpp"
#include "finsler/mesh.hpp"
#include "finsler/norms.hpp"
#include "finsler/report.hpp"

namespace finsler {

struct DistanceOptions {
  bool two_ring = true;          // add neighbours of neighbours to the graph
  double cutoff = std::numeric_limits<double>::infinity();  // stop Dijkstra and sweeps beyond this value
  int max_sweeps = 60;
  double sweep_tolerance = 1e-12;
  int polyline_nodes = 20;
  double refine_tolerance = 1e-6;  // relative improvement per quasi-Newton step
  int refine_iterations = 300;
};

struct DistanceField {
  Point2 source;
  std::vector<double> graph;  // Dijkstra values
  std::vector<double> value;  // after triangle-update sweeps; never above graph
  std::vector<int> parent;    // Dijkstra tree, -1 at seeded nodes
  int sweeps = 0;
};

namespace detail {

inline std::vector<std::vector<int>> distance_graph(const Mesh& mesh, bool two_ring) {
  auto adj = mesh.neighbors();
  if (!two_ring) return adj;
  std::vector<std::vector<int>> out(adj.size());
  for (std::size_t v = 0; v < adj.size(); ++v) {
    auto& o = out[v];
    o = adj[v];
    for (int w : adj[v]) o.insert(o.end(), adj[w].begin(), adj[w].end());
    std::sort(o.begin(), o.end());
    o.erase(std::unique(o.begin(), o.end()), o.end());
    o.erase(std::remove(o.begin(), o.end(), static_cast<int>(v)), o.end());
  }
  return out;
}

inline double edge_length(const FinslerStructure<2>& s, const VecN<2>& a, const VecN<2>& b) {
  return s.at(Point2(VecN<2>(0.5 * (a + b))))(Vector2(VecN<2>(b - a)));
}

}  // namespace detail

/// One-to-all forward distances d(p, node) on the mesh.
inline DistanceField forward_distance_field(const FinslerStructure<2>& s, const Mesh& mesh, const Point2& p,
                                            const DistanceOptions& opt = {}) {
  const int n = mesh.num_nodes();
  const double inf = std::numeric_limits<double>::infinity();
  DistanceField f;
  f.source = p;
  f.graph.assign(n, inf);
  f.parent.assign(n, -1);
  std::vector<char> seeded(n, 0);

  const int t0 = mesh.locate(p, 1e-9);
  if (t0 < 0) throw DomainError("distance: point outside the meshed domain");
  for (int k : mesh.triangles[t0]) {
    const double dx = (mesh.nodes[k].c - p.c).norm();
    if (dx < 1e-12 * std::max(1.0, mesh.h)) {
      f.graph[k] = 0.0;
    } else {
      f.graph[k] = detail::edge_length(s, p.c, mesh.nodes[k].c);
    }
    seeded[k] = 1;
  }

  const auto adj = detail::distance_graph(mesh, opt.two_ring);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (int k : mesh.triangles[t0]) pq.emplace(f.graph[k], k);
  std::vector<char> done(n, 0);
  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (done[v] || d > f.graph[v]) continue;
    done[v] = 1;
    if (d > opt.cutoff) continue;
    for (int w : adj[v]) {
      if (done[w]) continue;
      const double nd = d + detail::edge_length(s, mesh.nodes[v].c, mesh.nodes[w].c);
      if (nd < f.graph[w]) {
        f.graph[w] = nd;
        f.parent[w] = v;
        pq.emplace(nd, w);
      }
    }
  }

  // Gauss-Seidel sweeps of the triangle update
  //   d(v) <- min_{y on edge ab} d(y) + F(x_T, x_v - y),  d linear on ab,
  // in increasing order of the graph value. Updates only ever decrease d.
  f.value = f.graph;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return f.graph[a] < f.graph[b]; });
  const auto tris_of = mesh.node_triangles();
  std::vector<MinkowskiNorm<2>> tri_norm;
  tri_norm.reserve(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) tri_norm.push_back(s.at(mesh.centroids[t]));

  for (f.sweeps = 0; f.sweeps < opt.max_sweeps; ++f.sweeps) {
    double change = 0.0;
    for (int v : order) {
      if (seeded[v] || !(f.graph[v] <= opt.cutoff)) continue;
      const VecN<2> xv = mesh.nodes[v].c;
      double best = f.value[v];
      for (int t : tris_of[v]) {
        const auto& tri = mesh.triangles[t];
        int a = -1, b = -1;
        for (int k : tri)
          if (k != v) (a < 0 ? a : b) = k;
        const double da = f.value[a], db = f.value[b];
        if (!std::isfinite(da) && !std::isfinite(db)) continue;
        const auto& N = tri_norm[t];
        const VecN<2> xa = mesh.nodes[a].c, xb = mesh.nodes[b].c;
        auto cost = [&](double lam) {
          const VecN<2> y = xb + lam * (xa - xb);
          return db + lam * (da - db) + N(Vector2(VecN<2>(xv - y)));
        };
        double cand;
        if (!std::isfinite(da)) {
          cand = cost(0.0);
        } else if (!std::isfinite(db)) {
          cand = cost(1.0);
        } else {
          const auto r = boost::math::tools::brent_find_minima(cost, 0.0, 1.0, 40);
          cand = std::min({r.second, cost(0.0), cost(1.0)});
        }
        best = std::min(best, cand);
      }
      if (best < f.value[v]) {
        change = std::max(change, f.value[v] - best);
        f.value[v] = best;
      }
    }
    if (change <= opt.sweep_tolerance * std::max(1.0, mesh.h)) break;
  }
  return f;
}

struct DistanceResult {
  double graph = 0.0;    // Dijkstra value
  double refined = 0.0;  // length of the optimized polyline
  double value = 0.0;    // min(graph, refined)
  std::vector<Point2> polyline;
};

namespace detail {

// Length of a polyline with fixed endpoints and its gradient with respect to
// the interior nodes (midpoint rule per segment).
inline double polyline_length(const FinslerStructure<2>& s, const std::vector<VecN<2>>& pts, Eigen::VectorXd* grad) {
  using J = Jet<4, 1>;
  double total = 0.0;
  if (grad) grad->setZero();
  const int m = static_cast<int>(pts.size());
  for (int k = 0; k + 1 < m; ++k) {
    const VecN<2> mid = 0.5 * (pts[k] + pts[k + 1]), del = pts[k + 1] - pts[k];
    if (del.norm() < 1e-14) continue;
    if (!grad) {
      total += s.at(Point2(mid))(Vector2(del));
      continue;
    }
    std::array<J, 2> xj{J::variable(mid[0], 0), J::variable(mid[1], 1)};
    std::array<J, 2> vj{J::variable(del[0], 2), J::variable(del[1], 3)};
    const J F = sqrt(2.0 * s.lagrangian(xj, vj));
    total += F.v;
    // d mid / d p_k = 1/2, d del / d p_k = -1; d mid / d p_{k+1} = 1/2, d del / d p_{k+1} = +1.
    for (int i = 0; i < 2; ++i) {
      const double gm = F.grad(i), gd = F.grad(2 + i);
      if (k >= 1) (*grad)[2 * (k - 1) + i] += 0.5 * gm - gd;
      if (k + 1 <= m - 2) (*grad)[2 * k + i] += 0.5 * gm + gd;
    }
  }
  return total;
}

inline std::vector<VecN<2>> resample(const std::vector<VecN<2>>& path, int count) {
  std::vector<double> acc{0.0};
  for (std::size_t k = 1; k < path.size(); ++k) acc.push_back(acc.back() + (path[k] - path[k - 1]).norm());
  std::vector<VecN<2>> out;
  const double total = acc.back();
  std::size_t seg = 0;
  for (int i = 0; i < count; ++i) {
    const double target = total * i / (count - 1);
    while (seg + 2 < path.size() && acc[seg + 1] < target) ++seg;
    const double len = acc[seg + 1] - acc[seg];
    const double t = len > 0 ? std::clamp((target - acc[seg]) / len, 0.0, 1.0) : 0.0;
    out.push_back(path[seg] + t * (path[seg + 1] - path[seg]));
  }
  out.front() = path.front();
  out.back() = path.back();
  return out;
}

}  // namespace detail

/// Directed distance d(p, q): Dijkstra on the mesh graph, then the graph
/// path is resampled to a polyline whose interior nodes are optimized by
/// L-BFGS on the discrete length. The smaller of the two values is kept.
inline DistanceResult distance_detailed(const FinslerStructure<2>& s, const Point2& p, const Point2& q,
                                        const Mesh& mesh, const DistanceOptions& opt = {}) {
  DistanceResult res;
  if ((p.c - q.c).norm() == 0.0) {
    res.polyline = {p, q};
    return res;
  }
  DistanceOptions dij = opt;
  dij.max_sweeps = 0;
  const auto field = forward_distance_field(s, mesh, p, dij);
  const int tq = mesh.locate(q, 1e-9);
  if (tq < 0) throw DomainError("distance: point outside the meshed domain");
  // Points of the source element are reached directly.
  const int tp = mesh.locate(p, 1e-9);
  double best = std::numeric_limits<double>::infinity();
  int via = -1;
  if (tp == tq) best = detail::edge_length(s, p.c, q.c);
  for (int k : mesh.triangles[tq]) {
    const double d = field.graph[k] + detail::edge_length(s, mesh.nodes[k].c, q.c);
    if (d < best) best = d, via = k;
  }
  if (!std::isfinite(best)) throw DomainError("distance: disconnected mesh");
  res.graph = best;

  std::vector<VecN<2>> path{q.c};
  for (int v = via; v >= 0; v = field.parent[v]) path.push_back(mesh.nodes[v].c);
  path.push_back(p.c);
  std::reverse(path.begin(), path.end());
  path.erase(std::unique(path.begin(), path.end(), [](const VecN<2>& a, const VecN<2>& b) { return (a - b).norm() < 1e-15; }),
             path.end());
  auto pts = detail::resample(path, std::max(3, opt.polyline_nodes));
  const int m = static_cast<int>(pts.size());

  auto unpack = [&](const Eigen::VectorXd& z) {
    auto out = pts;
    for (int k = 1; k < m - 1; ++k) out[k] = z.segment<2>(2 * (k - 1));
    return out;
  };
  Eigen::VectorXd z(2 * (m - 2));
  for (int k = 1; k < m - 1; ++k) z.segment<2>(2 * (k - 1)) = pts[k];
  Objective obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(x.size());
    const auto pl = unpack(x);
    for (const auto& pt : pl)
      if (!s.chart().contains(Point2(pt))) return std::numeric_limits<double>::infinity();
    return detail::polyline_length(s, pl, &g);
  };
  double previous = std::numeric_limits<double>::infinity();
  StopTest stop = [&](const Eigen::VectorXd&, const Eigen::VectorXd& g, double fx) {
    const bool small_gain = previous - fx <= opt.refine_tolerance * fx;
    previous = fx;
    return small_gain || g.norm() <= 1e-12 * std::max(1.0, fx);
  };
  LbfgsOptions lo;
  lo.max_iterations = opt.refine_iterations;
  const auto r = lbfgs_minimize(obj, z, stop, lo);
  const auto pl = unpack(r.x);
  res.refined = detail::polyline_length(s, pl, nullptr);
  res.value = std::min(res.graph, res.refined);
  for (const auto& x : pl) res.polyline.emplace_back(x);
  return res;
}

inline double distance(const FinslerStructure<2>& s, const Point2& p, const Point2& q, const Mesh& mesh,
                       const DistanceOptions& opt = {}) {
  return distance_detailed(s, p, q, mesh, opt).value;
}

struct Ball {
  Point2 center;
  double radius = 0.0;
  std::vector<char> inside;  // node indicator d(p, x_i) < R
  std::vector<double> distances;
  double volume = 0.0;       // m(B) by clipped-element midpoint quadrature
  bool truncated = false;    // the ball reaches the mesh boundary; volume is a lower bound
};

namespace detail {

// Portion of element t where the linear interpolant of phi is negative:
// returns (area, centroid).
inline std::pair<double, VecN<2>> clip_negative(const Mesh& mesh, int t, const std::array<double, 3>& phi) {
  std::vector<VecN<2>> poly;
  const auto& tri = mesh.triangles[t];
  for (int k = 0; k < 3; ++k) {
    const int a = k, b = (k + 1) % 3;
    const VecN<2> xa = mesh.nodes[tri[a]].c, xb = mesh.nodes[tri[b]].c;
    if (phi[a] < 0) poly.push_back(xa);
    if ((phi[a] < 0) != (phi[b] < 0)) {
      const double lam = phi[a] / (phi[a] - phi[b]);
      poly.push_back(xa + lam * (xb - xa));
    }
  }
  if (poly.size() < 3) return {0.0, VecN<2>::Zero()};
  double area = 0.0;
  VecN<2> c = VecN<2>::Zero();
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    const VecN<2> e1 = poly[i] - poly[0], e2 = poly[i + 1] - poly[0];
    const double a = 0.5 * std::abs(e1[0] * e2[1] - e1[1] * e2[0]);
    area += a;
    c += a * (poly[0] + poly[i] + poly[i + 1]) / 3.0;
  }
  return {area, area > 0 ? VecN<2>(c / area) : poly[0]};
}

}  // namespace detail

/// m of the region where the interpolated nodal distance is below R.
inline double sublevel_volume(const FinslerStructure<2>& s, const Mesh& mesh, const std::vector<double>& dist, double R) {
  double vol = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    std::array<double, 3> phi;
    bool any = false;
    for (int k = 0; k < 3; ++k) {
      const double d = dist[mesh.triangles[t][k]];
      phi[k] = std::isfinite(d) ? d - R : 1e300;
      any |= phi[k] < 0;
    }
    if (!any) continue;
    const auto [area, c] = detail::clip_negative(mesh, t, phi);
    if (area > 0) vol += area * s.density(Point2(c));
  }
  return vol;
}

inline Ball forward_ball(const FinslerStructure<2>& s, const Point2& p, double R, const Mesh& mesh,
                         DistanceOptions opt = {}) {
  if (!(R > 0)) throw DomainError("forward_ball: R must be positive");
  opt.cutoff = std::min(opt.cutoff, 1.15 * R + 4 * mesh.h);
  const auto field = forward_distance_field(s, mesh, p, opt);
  Ball b;
  b.center = p;
  b.radius = R;
  b.distances = field.value;
  b.inside.resize(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    b.inside[i] = field.value[i] < R;
    if (b.inside[i] && mesh.boundary[i]) b.truncated = true;
  }
  b.volume = sublevel_volume(s, mesh, field.value, R);
  return b;
}

/// integral_0^R s_{K,N}(t)^{N-1} dt.
inline double comparison_volume(double K, double N, double R) {
  if (!std::isfinite(N)) throw DomainError("comparison volume needs finite N");
  if (K == 0.0) return std::pow(R, N) / N;
  auto f = [K, N](double t) { return std::pow(s_comparison(K, N, t), N - 1); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, R, 10, 1e-13);
}

/// m(B_R1)/m(B_R2) against the comparison-function ratio, R1 >= R2.
inline InequalityReport bishop_gromov_check(const FinslerStructure<2>& s, const Point2& p, double R1, double R2,
                                            double K, double N, const Mesh& mesh, double tolerance = 0.02,
                                            const DistanceOptions& opt = {}) {
  if (!(R1 >= R2) || !(R2 > 0)) throw DomainError("bishop_gromov_check: need R1 >= R2 > 0");
  if (K < 0) throw DomainError("bishop_gromov_check: K must be >= 0");
  DistanceOptions o = opt;
  o.cutoff = std::min(o.cutoff, 1.15 * R1 + 4 * mesh.h);
  const auto field = forward_distance_field(s, mesh, p, o);
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (mesh.boundary[i] && field.value[i] < R1) throw DomainError("bishop_gromov_check: ball truncated by the mesh");
  const double v1 = sublevel_volume(s, mesh, field.value, R1), v2 = sublevel_volume(s, mesh, field.value, R2);
  InequalityReport rep;
  rep.tag = "volume-comparison";
  const double bound = comparison_volume(K, N, R1) / comparison_volume(K, N, R2);
  rep.set_sides(v1 / v2, bound);
  rep.tolerance = tolerance * bound;
  rep.parameters = {{"R1", R1}, {"R2", R2}, {"K", K}, {"N", N}, {"h", mesh.h}};
  rep.statistics = {{"volume_R1", v1},
                    {"volume_R2", v2},
                    {"coarse_bound", std::exp(2 * std::sqrt(K) * R1) * std::pow(R1 / R2, N)},
                    {"relative_slack", rep.slack / bound}};
  return rep;
}

}  // namespace finsler

#pragma once

// Conforming triangle meshes of planar domains, with P1 shape data.

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "finsler/norms.hpp"
#include "finsler/types.hpp"

namespace finsler {

class Mesh {
 public:
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<char> boundary;  // 1 for nodes on the domain boundary
  std::vector<double> areas;
  std::vector<std::array<VecN<2>, 3>> shape_gradients;  // D(phi_a) on each element
  std::vector<Point2> centroids;
  double h = 0.0;  // longest edge

  Mesh() = default;

  /// Orients triangles counter-clockwise and derives areas, shape
  /// gradients and the boundary flag (nodes on edges used once).
  Mesh(std::vector<Point2> pts, std::vector<std::array<int, 3>> tris)
      : nodes(std::move(pts)), triangles(std::move(tris)) {
    const int n = static_cast<int>(nodes.size());
    boundary.assign(nodes.size(), 0);
    std::map<std::pair<int, int>, int> edge_use;
    for (auto& t : triangles) {
      for (int k : t)
        if (k < 0 || k >= n) throw DomainError("mesh: triangle references a missing node");
      const VecN<2> e1 = nodes[t[1]].c - nodes[t[0]].c, e2 = nodes[t[2]].c - nodes[t[0]].c;
      const double det = e1[0] * e2[1] - e1[1] * e2[0];
      if (det == 0.0) throw DomainError("mesh: degenerate triangle");
      if (det < 0) std::swap(t[1], t[2]);
      for (int k = 0; k < 3; ++k) {
        const int a = t[k], b = t[(k + 1) % 3];
        ++edge_use[{std::min(a, b), std::max(a, b)}];
        h = std::max(h, (nodes[a].c - nodes[b].c).norm());
      }
      const Eigen::Matrix2d P = (Eigen::Matrix2d() << nodes[t[1]].c - nodes[t[0]].c, nodes[t[2]].c - nodes[t[0]].c)
                                    .finished();
      const double area = 0.5 * std::abs(P.determinant());
      const Eigen::Matrix2d Pinv = P.inverse();  // rows: gradients of barycentrics 1, 2
      std::array<VecN<2>, 3> grads;
      grads[1] = Pinv.row(0).transpose();
      grads[2] = Pinv.row(1).transpose();
      grads[0] = -grads[1] - grads[2];
      areas.push_back(area);
      shape_gradients.push_back(grads);
      centroids.emplace_back(VecN<2>((nodes[t[0]].c + nodes[t[1]].c + nodes[t[2]].c) / 3.0));
    }
    for (const auto& [e, count] : edge_use) {
      if (count > 2) throw DomainError("mesh: non-manifold edge");
      if (count == 1) boundary[e.first] = boundary[e.second] = 1;
    }
  }

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double total_area() const {
    double a = 0;
    for (double x : areas) a += x;
    return a;
  }

  /// Differential of the P1 interpolant of nodal values u on element t.
  Covector2 differential(int t, const std::vector<double>& u) const {
    // Differences against the first vertex, so constants map to exactly zero.
    const auto& tri = triangles[t];
    const double u0 = u[tri[0]];
    return Covector2(VecN<2>((u[tri[1]] - u0) * shape_gradients[t][1] + (u[tri[2]] - u0) * shape_gradients[t][2]));
  }

  std::vector<std::vector<int>> node_triangles() const {
    std::vector<std::vector<int>> out(nodes.size());
    for (int t = 0; t < num_triangles(); ++t)
      for (int k : triangles[t]) out[k].push_back(t);
    return out;
  }

  std::vector<std::vector<int>> neighbors() const {
    std::vector<std::vector<int>> out(nodes.size());
    for (const auto& t : triangles)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          if (a != b) out[t[a]].push_back(t[b]);
    for (auto& v : out) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return out;
  }

  /// Element containing p (closed), or -1.
  int locate(const Point2& p, double tol = 1e-12) const {
    for (int t = 0; t < num_triangles(); ++t) {
      const auto b = barycentric(t, p);
      if (b.minCoeff() >= -tol) return t;
    }
    return -1;
  }

  Eigen::Vector3d barycentric(int t, const Point2& p) const {
    Eigen::Vector3d b;
    const VecN<2> d = p.c - nodes[triangles[t][0]].c;
    b[1] = shape_gradients[t][1].dot(d);
    b[2] = shape_gradients[t][2].dot(d);
    b[0] = 1.0 - b[1] - b[2];
    return b;
  }

  /// Index of the node closest to p.
  int nearest_node(const Point2& p) const {
    int best = 0;
    double bd = INFINITY;
    for (int i = 0; i < num_nodes(); ++i) {
      const double d = (nodes[i].c - p.c).squaredNorm();
      if (d < bd) bd = d, best = i;
    }
    return best;
  }
};

/// Structured mesh of a rectangle with spacing at most h. Each cell is
/// split along its rising diagonal.
inline Mesh rectangle_mesh(const Box<2>& box, double h) {
  if (!(h > 0)) throw DomainError("rectangle_mesh: h must be positive");
  const VecN<2> size = box.hi - box.lo;
  const int nx = std::max(1, static_cast<int>(std::ceil(size[0] / h - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil(size[1] / h - 1e-9)));
  std::vector<Point2> pts;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      pts.emplace_back(box.lo[0] + size[0] * i / nx, box.lo[1] + size[1] * j / ny);
  std::vector<std::array<int, 3>> tris;
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return Mesh(std::move(pts), std::move(tris));
}

/// Square [c - half, c + half]^2 whose node lattice contains c.
inline Mesh square_mesh(const Point2& center, double half, double h) {
  const int n = 2 * std::max(1, static_cast<int>(std::ceil(half / h - 1e-9)));
  Box<2> box;
  box.lo = center.c - VecN<2>::Constant(half);
  box.hi = center.c + VecN<2>::Constant(half);
  return rectangle_mesh(box, 2 * half / n);
}

namespace detail {

// Stitches two concentric node rings (angularly sorted) by a merge walk on
// the angle.
inline void stitch_rings(const std::vector<int>& inner, const std::vector<double>& inner_angle,
                         const std::vector<int>& outer, const std::vector<double>& outer_angle,
                         std::vector<std::array<int, 3>>& tris) {
  const int na = static_cast<int>(inner.size()), nb = static_cast<int>(outer.size());
  if (na == 1) {
    for (int j = 0; j < nb; ++j) tris.push_back({inner[0], outer[j], outer[(j + 1) % nb]});
    return;
  }
  auto angle = [](const std::vector<double>& a, int k) {
    const int n = static_cast<int>(a.size());
    return a[k % n] + 2 * std::numbers::pi * (k / n);
  };
  int i = 0, j = 0;
  while (i < na || j < nb) {
    const bool advance_outer = i >= na || (j < nb && angle(outer_angle, j + 1) <= angle(inner_angle, i + 1));
    if (advance_outer) {
      tris.push_back({inner[i % na], outer[j % nb], outer[(j + 1) % nb]});
      ++j;
    } else {
      tris.push_back({inner[i % na], outer[j % nb], inner[(i + 1) % na]});
      ++i;
    }
  }
}

}  // namespace detail

/// Disk mesh from concentric rings at the given radii (strictly increasing,
/// first > 0) with the given node counts, plus the center node.
inline Mesh ring_mesh(const Point2& center, const std::vector<double>& radii, const std::vector<int>& counts) {
  std::vector<Point2> pts{center};
  std::vector<std::array<int, 3>> tris;
  std::vector<int> prev{0};
  std::vector<double> prev_angle{0.0};
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const int n = std::max(6, counts[k]);
    std::vector<int> ring;
    std::vector<double> ring_angle;
    // Half-step twist on alternate rings avoids aligned spokes.
    const double offset = (k % 2 == 1) ? std::numbers::pi / n : 0.0;
    for (int j = 0; j < n; ++j) {
      const double a = offset + 2 * std::numbers::pi * j / n;
      ring.push_back(static_cast<int>(pts.size()));
      ring_angle.push_back(a);
      pts.emplace_back(center[0] + radii[k] * std::cos(a), center[1] + radii[k] * std::sin(a));
    }
    detail::stitch_rings(prev, prev_angle, ring, ring_angle, tris);
    prev = std::move(ring);
    prev_angle = std::move(ring_angle);
  }
  return Mesh(std::move(pts), std::move(tris));
}

/// Quasi-uniform disk mesh with spacing about h.
inline Mesh disk_mesh(const Point2& center, double radius, double h) {
  const int m = std::max(1, static_cast<int>(std::ceil(radius / h - 1e-9)));
  std::vector<double> radii;
  std::vector<int> counts;
  for (int k = 1; k <= m; ++k) {
    radii.push_back(radius * k / m);
    counts.push_back(6 * k);
  }
  return ring_mesh(center, radii, counts);
}

/// Disk mesh with spacing h up to radius r_fine and spacing growing like
/// h * r / r_fine beyond it.
inline Mesh graded_disk_mesh(const Point2& center, double radius, double h, double r_fine) {
  std::vector<double> radii;
  std::vector<int> counts;
  const int m = std::max(1, static_cast<int>(std::ceil(std::min(radius, r_fine) / h - 1e-9)));
  const double inner = std::min(radius, r_fine);
  for (int k = 1; k <= m; ++k) {
    radii.push_back(inner * k / m);
    counts.push_back(6 * k);
  }
  if (radius > r_fine) {
    const double growth = 1.0 + h / r_fine;
    const int steps = std::max(1, static_cast<int>(std::ceil(std::log(radius / r_fine) / std::log(growth))));
    const double ratio = std::pow(radius / r_fine, 1.0 / steps);
    double r = r_fine;
    for (int k = 1; k <= steps; ++k) {
      r = k == steps ? radius : r * ratio;
      radii.push_back(r);
      counts.push_back(6 * m);
    }
  }
  return ring_mesh(center, radii, counts);
}

inline void write_mesh_csv(const Mesh& mesh, std::ostream& nodes_out, std::ostream& triangles_out) {
  nodes_out.precision(17);
  nodes_out << "id,x,y,boundary\n";
  for (int i = 0; i < mesh.num_nodes(); ++i)
    nodes_out << i << ',' << mesh.nodes[i][0] << ',' << mesh.nodes[i][1] << ',' << int(mesh.boundary[i]) << '\n';
  triangles_out << "id,a,b,c\n";
  for (int t = 0; t < mesh.num_triangles(); ++t)
    triangles_out << t << ',' << mesh.triangles[t][0] << ',' << mesh.triangles[t][1] << ',' << mesh.triangles[t][2]
                  << '\n';
}

namespace detail {

inline std::vector<std::vector<std::string>> read_csv_rows(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace detail

inline Mesh read_mesh_csv(std::istream& nodes_in, std::istream& triangles_in) {
  std::vector<Point2> pts;
  for (const auto& r : detail::read_csv_rows(nodes_in)) {
    if (r.size() < 3) throw DomainError("mesh csv: node row needs id,x,y");
    pts.emplace_back(std::stod(r[1]), std::stod(r[2]));
  }
  std::vector<std::array<int, 3>> tris;
  for (const auto& r : detail::read_csv_rows(triangles_in)) {
    if (r.size() < 4) throw DomainError("mesh csv: triangle row needs id,a,b,c");
    tris.push_back({std::stoi(r[1]), std::stoi(r[2]), std::stoi(r[3])});
  }
  return Mesh(std::move(pts), std::move(tris));
}

inline void write_field_csv(const Mesh& mesh, const std::vector<double>& u, std::ostream& out) {
  out.precision(17);
  out << "id,x,y,u\n";
  for (int i = 0; i < mesh.num_nodes(); ++i)
    out << i << ',' << mesh.nodes[i][0] << ',' << mesh.nodes[i][1] << ',' << u[i] << '\n';
}

inline std::vector<double> read_field_csv(std::istream& in) {
  std::vector<double> u;
  for (const auto& r : detail::read_csv_rows(in)) {
    if (r.size() < 4) throw DomainError("field csv: row needs id,x,y,u");
    u.push_back(std::stod(r[3]));
  }
  return u;
}

}  // namespace finsler

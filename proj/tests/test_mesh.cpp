#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "finsler/mesh.hpp"

using namespace finsler;

namespace {

void expect_conforming(const Mesh& m, double expected_area, double tol) {
  EXPECT_NEAR(m.total_area(), expected_area, tol);
  for (double a : m.areas) EXPECT_GT(a, 0.0);
  // Shape gradients reproduce affine functions exactly.
  std::vector<double> u(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) u[i] = 1.5 + 2 * m.nodes[i][0] - 3 * m.nodes[i][1];
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto du = m.differential(t, u);
    EXPECT_NEAR(du[0], 2.0, 1e-9);
    EXPECT_NEAR(du[1], -3.0, 1e-9);
  }
}

}  // namespace

TEST(Mesh, RectangleAreaBoundaryAndSize) {
  Box<2> box;
  box.lo = VecN<2>(-1.0, 0.0);
  box.hi = VecN<2>(2.0, 1.0);
  const auto m = rectangle_mesh(box, 0.1);
  expect_conforming(m, 3.0, 1e-12);
  EXPECT_EQ(m.num_nodes(), 31 * 11);
  int boundary = 0;
  for (int i = 0; i < m.num_nodes(); ++i) {
    const auto& p = m.nodes[i];
    const bool on = std::abs(p[0] + 1) < 1e-12 || std::abs(p[0] - 2) < 1e-12 || std::abs(p[1]) < 1e-12 ||
                    std::abs(p[1] - 1) < 1e-12;
    EXPECT_EQ(bool(m.boundary[i]), on);
    boundary += on;
  }
  EXPECT_EQ(boundary, 2 * 30 + 2 * 10);
  EXPECT_NEAR(m.h, std::sqrt(0.02), 1e-12);
}

TEST(Mesh, SquareContainsCenterNode) {
  const auto m = square_mesh(Point2(0.3, -0.2), 1.0, 0.07);
  const int c = m.nearest_node(Point2(0.3, -0.2));
  EXPECT_LE((m.nodes[c].c - VecN<2>(0.3, -0.2)).norm(), 1e-12);
}

TEST(Mesh, DiskIsConformingWithBoundaryOnCircle) {
  const auto m = disk_mesh(Point2(0.0, 0.0), 1.0, 1.0 / 16);
  // Inscribed polygon area converges to pi.
  expect_conforming(m, std::numbers::pi, 2e-2);
  for (int i = 0; i < m.num_nodes(); ++i) {
    const double r = m.nodes[i].c.norm();
    EXPECT_EQ(bool(m.boundary[i]), std::abs(r - 1.0) < 1e-12) << i;
  }
  EXPECT_LE(m.h, 1.6 / 16);
  EXPECT_EQ(m.locate(Point2(0.0, 0.0)) >= 0, true);
  EXPECT_EQ(m.locate(Point2(1.5, 0.0)), -1);
}

TEST(Mesh, GradedDiskKeepsFineCore) {
  const auto m = graded_disk_mesh(Point2(0.0, 0.0), 8.0, 1.0 / 8, 1.0);
  // Outer boundary is a regular 48-gon of radius 8.
  expect_conforming(m, 24 * 64 * std::sin(2 * std::numbers::pi / 48), 1e-9);
  double hmax_core = 0;
  for (int t = 0; t < m.num_triangles(); ++t)
    if (m.centroids[t].c.norm() < 0.9)
      for (int k = 0; k < 3; ++k)
        hmax_core = std::max(hmax_core, (m.nodes[m.triangles[t][k]].c - m.nodes[m.triangles[t][(k + 1) % 3]].c).norm());
  EXPECT_LE(hmax_core, 0.2);
  EXPECT_LT(m.num_nodes(), 8000);
}

TEST(Mesh, CsvRoundTrip) {
  const auto m = disk_mesh(Point2(0.5, 0.5), 1.0, 0.25);
  std::stringstream nodes, tris, field;
  write_mesh_csv(m, nodes, tris);
  const auto back = read_mesh_csv(nodes, tris);
  ASSERT_EQ(back.num_nodes(), m.num_nodes());
  ASSERT_EQ(back.num_triangles(), m.num_triangles());
  for (int i = 0; i < m.num_nodes(); ++i) EXPECT_EQ(back.nodes[i].c, m.nodes[i].c);
  EXPECT_EQ(back.boundary, m.boundary);
  std::vector<double> u(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) u[i] = std::sin(i * 0.1);
  write_field_csv(m, u, field);
  EXPECT_EQ(read_field_csv(field), u);
}

TEST(Mesh, RejectsBadInput) {
  EXPECT_THROW(Mesh({Point2(0.0, 0.0), Point2(1.0, 0.0)}, {{0, 1, 2}}), DomainError);
  EXPECT_THROW(Mesh({Point2(0.0, 0.0), Point2(1.0, 0.0), Point2(2.0, 0.0)}, {{0, 1, 2}}), DomainError);
  Box<2> box;
  EXPECT_THROW(rectangle_mesh(box, 0.0), DomainError);
}

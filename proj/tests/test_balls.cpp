#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "finsler/balls.hpp"
#include "finsler/builtins.hpp"
#include "support.hpp"

using namespace finsler;

namespace {

FinslerStructure<2> make(StructureSpec<2> s) {
  s.chart.lo = VecN<2>::Constant(-5.0);
  s.chart.hi = VecN<2>::Constant(5.0);
  return FinslerStructure<2>(s);
}

}  // namespace

TEST(Distance, EuclideanDiagonal) {
  const auto s = make(builtin::euclidean_spec());
  Box<2> unit;
  unit.lo = VecN<2>::Zero();
  unit.hi = VecN<2>::Ones();
  const auto mesh = rectangle_mesh(unit, 1.0 / 16);
  const auto r = distance_detailed(s, Point2(0.0, 0.0), Point2(1.0, 1.0), mesh);
  EXPECT_NEAR(r.value, std::sqrt(2.0), 1e-3);
  EXPECT_LE(r.value, r.graph);
  // An off-lattice pair needs the polyline refinement.
  const auto r2 = distance_detailed(s, Point2(0.1, 0.05), Point2(0.93, 0.61), mesh);
  EXPECT_NEAR(r2.value, std::hypot(0.83, 0.56), 1e-3);
}

TEST(Distance, RandersConstantIsDirected) {
  const auto s = make(builtin::randers_spec<2>(VecN<2>(0.5, 0.0)));
  Box<2> box;
  box.lo = VecN<2>(-0.5, -0.5);
  box.hi = VecN<2>(1.5, 0.5);
  const auto mesh = rectangle_mesh(box, 1.0 / 16);
  // Constant coefficients: straight segments minimize, so d(p, q) = F(q - p).
  EXPECT_NEAR(distance(s, Point2(0.0, 0.0), Point2(1.0, 0.0), mesh), 1.5, 1e-3);
  EXPECT_NEAR(distance(s, Point2(1.0, 0.0), Point2(0.0, 0.0), mesh), 0.5, 1e-3);
  EXPECT_NEAR(distance(s, Point2(0.1, -0.3), Point2(0.8, 0.4), mesh), s.at(Point2(0, 0))(Vector2(0.7, 0.7)), 1e-3);
}

TEST(Distance, TriangleInequalityAndReversibility) {
  Box<2> box;
  box.lo = VecN<2>::Constant(-1.0);
  box.hi = VecN<2>::Constant(1.0);
  const auto mesh = rectangle_mesh(box, 1.0 / 12);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  auto rand_point = [&] { return Point2(u(rng), u(rng)); };
  const double tol = 2e-3;
  for (const auto& [name, s] : finsler::testing::family_zoo<2>()) {
    double asym = 0;
    for (int trial = 0; trial < 6; ++trial) {
      const auto p = rand_point(), q = rand_point(), r = rand_point();
      const double pq = distance(s, p, q, mesh), pr = distance(s, p, r, mesh), rq = distance(s, r, q, mesh);
      EXPECT_LE(pq, pr + rq + 2 * tol) << name;
      EXPECT_GT(pq, 0.0);
      asym = std::max(asym, std::abs(pq - distance(s, q, p, mesh)));
    }
    if (s.is_reversible()) EXPECT_LE(asym, 2 * tol) << name;
  }
  const auto rs = make(builtin::randers_spec<2>(VecN<2>(0.5, 0.0)));
  EXPECT_GT(std::abs(distance(rs, Point2(-0.5, 0.0), Point2(0.5, 0.0), mesh) -
                     distance(rs, Point2(0.5, 0.0), Point2(-0.5, 0.0), mesh)),
            0.1);
}

TEST(Distance, ExpMapConsistency) {
  const FinslerStructure<2> s(finsler::testing::variable_randers<2>());
  Box<2> box;
  box.lo = VecN<2>::Constant(-1.0);
  box.hi = VecN<2>::Constant(1.0);
  const auto mesh = rectangle_mesh(box, 1.0 / 32);
  const Point2 p(0.0, 0.1);
  for (const auto& dir : {Vector2(1.0, 0.0), Vector2(-0.3, 0.7)}) {
    const Vector2 v = dir / s.at(p)(dir);
    const double t = 0.3;
    const auto q = exp_map(s, p, t * v);
    EXPECT_NEAR(distance(s, p, q, mesh), t, 1e-3);
  }
}

TEST(Distance, SweepNeverIncreasesGraphValue) {
  const FinslerStructure<2> s(finsler::testing::variable_quartic<2>());
  Box<2> box;
  box.lo = VecN<2>::Constant(-1.0);
  box.hi = VecN<2>::Constant(1.0);
  const auto mesh = rectangle_mesh(box, 1.0 / 16);
  const auto f = forward_distance_field(s, mesh, Point2(0.05, -0.1));
  for (int i = 0; i < mesh.num_nodes(); ++i) EXPECT_LE(f.value[i], f.graph[i]);
  EXPECT_THROW(forward_distance_field(s, mesh, Point2(3.0, 0.0)), DomainError);
}

TEST(Ball, EuclideanVolume) {
  const auto s = make(builtin::euclidean_spec());
  const double R = 1.0;
  const auto mesh = square_mesh(Point2(0.0, 0.0), 1.1, R / 64);
  const auto b = forward_ball(s, Point2(0.0, 0.0), R, mesh);
  EXPECT_FALSE(b.truncated);
  EXPECT_NEAR(b.volume / (std::numbers::pi * R * R), 1.0, 0.02);
}

TEST(Ball, RandersConstantMatchesClosedFormSublevelSet) {
  const auto s = make(builtin::randers_spec<2>(VecN<2>(0.5, 0.0)));
  const double R = 0.5;
  const auto mesh = square_mesh(Point2(0.0, 0.0), 1.1, 1.0 / 64);
  const auto b = forward_ball(s, Point2(0.0, 0.0), R, mesh);
  // Closed form: d(0, x) = F(x); same quadrature applied to exact nodal values.
  std::vector<double> exact(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) exact[i] = s.at(mesh.nodes[i])(mesh.nodes[i] - Point2(0.0, 0.0));
  const double ref = sublevel_volume(s, mesh, exact, R);
  EXPECT_NEAR(b.volume / ref, 1.0, 0.02);
  // {|x| + x/2 < R} is an ellipse with semi-axes 2R/(1-1/4)... area pi R^2 / (1 - b^2)^{3/2}.
  EXPECT_NEAR(ref, std::numbers::pi * R * R / std::pow(0.75, 1.5), 0.01 * ref);
}

TEST(Ball, MonotoneInRadius) {
  const FinslerStructure<2> s(finsler::testing::variable_randers<2>());
  const auto mesh = square_mesh(Point2(0.0, 0.0), 1.0, 1.0 / 24);
  const auto b1 = forward_ball(s, Point2(0.0, 0.0), 0.3, mesh);
  const auto b2 = forward_ball(s, Point2(0.0, 0.0), 0.6, mesh);
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (b1.inside[i]) EXPECT_TRUE(b2.inside[i]);
  EXPECT_LT(b1.volume, b2.volume);
  EXPECT_THROW(forward_ball(s, Point2(0.0, 0.0), 0.0, mesh), DomainError);
  EXPECT_TRUE(forward_ball(s, Point2(0.0, 0.0), 5.0, mesh).truncated);
}

TEST(VolumeComparison, FlatSaturatesAndGaussianHasSlack) {
  const auto eu = make(builtin::euclidean_spec());
  const double R2 = 1.0, R1 = 2.0;
  const auto mesh = square_mesh(Point2(0.0, 0.0), 2.2, R2 / 64);
  const auto t0 = std::chrono::steady_clock::now();
  const auto flat = bishop_gromov_check(eu, Point2(0.0, 0.0), R1, R2, 0.0, 2.0, mesh);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_NEAR(flat.lhs / 4.0, 1.0, 0.02);
  EXPECT_DOUBLE_EQ(flat.rhs, 4.0);
  EXPECT_FALSE(flat.red_flag());
  EXPECT_LT(secs, 60.0);
  const auto ga = make(builtin::gaussian_spec());
  const auto g = bishop_gromov_check(ga, Point2(0.0, 0.0), R1, R2, 0.0, 2.0, mesh);
  EXPECT_GT(g.slack, 0.0);
  const auto same = bishop_gromov_check(eu, Point2(0.0, 0.0), 1.0, 1.0, 0.0, 2.0, mesh);
  EXPECT_DOUBLE_EQ(same.lhs, 1.0);
  EXPECT_DOUBLE_EQ(same.rhs, 1.0);
}

TEST(VolumeComparison, ComparisonVolume) {
  EXPECT_NEAR(comparison_volume(0.0, 3.0, 2.0), 8.0 / 3.0, 1e-14);
  // N = 2: integral of sinh(sqrt K t)/sqrt K = (cosh(sqrt K R) - 1)/K.
  EXPECT_NEAR(comparison_volume(4.0, 2.0, 1.0), (std::cosh(2.0) - 1) / 4.0, 1e-12);
  EXPECT_THROW(comparison_volume(1.0, INFINITY, 1.0), DomainError);
}

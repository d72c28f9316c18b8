#pragma once

// Factory helpers for the bundled structure families.

#include <string>

#include "finsler/norms.hpp"

namespace finsler::builtin {

template <int Dim = 2>
StructureSpec<Dim> euclidean_spec(const std::string& density = "0") {
  StructureSpec<Dim> s;
  s.family = Family::kEuclidean;
  s.density = Expression::parse(density);
  return s;
}

/// F = |V|_a + b.V with constant coefficients.
template <int Dim = 2>
StructureSpec<Dim> randers_spec(const VecN<Dim>& b, const std::string& density = "0") {
  StructureSpec<Dim> s;
  s.family = Family::kRanders;
  for (int i = 0; i < Dim; ++i) s.drift[i] = Expression(b[i]);
  s.density = Expression::parse(density);
  return s;
}

/// F = ((V.AV)^2 + eps sum V_i^4)^(1/4), A = identity.
template <int Dim = 2>
StructureSpec<Dim> quartic_spec(double epsilon, const std::string& density = "0") {
  StructureSpec<Dim> s;
  s.family = Family::kQuartic;
  s.epsilon = epsilon;
  s.density = Expression::parse(density);
  return s;
}

/// Round unit sphere in stereographic coordinates: a = 4/(1+|x|^2)^2 delta.
/// Constant curvature 1.
template <int Dim = 2>
StructureSpec<Dim> sphere_patch_spec() {
  StructureSpec<Dim> s;
  s.family = Family::kRiemannian;
  std::string r2 = "x^2 + y^2";
  if constexpr (Dim == 3) r2 += " + z^2";
  const Expression conformal = Expression::parse("4 / (1 + " + r2 + ")^2");
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) s.metric[i][j] = i == j ? conformal : Expression(0.0);
  s.chart.lo = VecN<Dim>::Constant(-2.0);
  s.chart.hi = VecN<Dim>::Constant(2.0);
  return s;
}

template <int Dim = 2>
StructureSpec<Dim> gaussian_spec() {
  std::string r2 = "x^2 + y^2";
  if constexpr (Dim == 3) r2 += " + z^2";
  return euclidean_spec<Dim>("-(" + r2 + ")/2");
}

}  // namespace finsler::builtin

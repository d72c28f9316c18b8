#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "finsler/builtins.hpp"
#include "finsler/norms.hpp"

namespace finsler::testing {

template <int Dim>
StructureSpec<Dim> variable_riemannian() {
  StructureSpec<Dim> s;
  s.family = Family::kRiemannian;
  s.metric[0][0] = Expression::parse("1 + 0.2*x^2");
  s.metric[0][1] = Expression::parse("0.1*x*y");
  s.metric[1][1] = Expression::parse("1 + 0.3*y^2 + 0.1*x");
  if constexpr (Dim == 3) {
    s.metric[2][2] = Expression::parse("2 + 0.1*z");
    s.metric[0][2] = Expression::parse("0.05*z");
  }
  s.chart.lo = VecN<Dim>::Constant(-1.0);
  s.chart.hi = VecN<Dim>::Constant(1.0);
  return s;
}

template <int Dim>
StructureSpec<Dim> variable_randers() {
  StructureSpec<Dim> s = variable_riemannian<Dim>();
  s.family = Family::kRanders;
  s.drift[0] = Expression::parse("0.3 + 0.1*x");
  s.drift[1] = Expression::parse("0.2*y - 0.1");
  return s;
}

template <int Dim>
StructureSpec<Dim> variable_quartic() {
  StructureSpec<Dim> s = variable_riemannian<Dim>();
  s.family = Family::kQuartic;
  s.epsilon = 0.1;
  return s;
}

/// One representative per built-in family, with non-constant coefficients
/// where the family has any.
template <int Dim>
std::vector<std::pair<std::string, FinslerStructure<Dim>>> family_zoo() {
  std::vector<std::pair<std::string, FinslerStructure<Dim>>> out;
  auto eu = builtin::euclidean_spec<Dim>();
  eu.chart.lo = VecN<Dim>::Constant(-1.0);
  eu.chart.hi = VecN<Dim>::Constant(1.0);
  out.emplace_back("euclidean", FinslerStructure<Dim>(eu));
  out.emplace_back("riemannian", FinslerStructure<Dim>(variable_riemannian<Dim>()));
  out.emplace_back("randers", FinslerStructure<Dim>(variable_randers<Dim>()));
  out.emplace_back("quartic", FinslerStructure<Dim>(variable_quartic<Dim>()));
  return out;
}

template <int Dim>
struct Sampler {
  std::mt19937_64 rng;
  explicit Sampler(std::uint64_t seed) : rng(seed) {}

  Point<Dim> point(const Box<Dim>& box) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Point<Dim> p;
    for (int i = 0; i < Dim; ++i) p[i] = box.lo[i] + u(rng) * (box.hi[i] - box.lo[i]);
    return p;
  }
  Vector<Dim> vector(double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Vector<Dim> v;
    for (int i = 0; i < Dim; ++i) v[i] = g(rng);
    return v;
  }
  Covector<Dim> covector(double scale = 1.0) { return Covector<Dim>(vector(scale).c); }
};

/// Closed-form dual of the Randers norm |V| + b.V (a = identity).
template <int Dim>
double randers_dual_closed_form(const VecN<Dim>& b, const VecN<Dim>& xi) {
  const double bb = b.squaredNorm(), xb = xi.dot(b);
  return (std::sqrt((1 - bb) * xi.squaredNorm() + xb * xb) - xb) / (1 - bb);
}

}  // namespace finsler::testing

#pragma once

// Sampled algebraic identities of a Finsler structure: homogeneity, Euler,
// 0-homogeneity of g, convexity, Cartan contraction, Legendre round trip,
// duality and the dual fundamental tensor.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "finsler/norms.hpp"

namespace finsler {

struct IdentityCheck {
  std::string name;
  double max_error = 0.0;  // worst normalized error over the samples
  double tolerance = 0.0;
  int samples = 0;
  bool passed() const { return std::isfinite(max_error) && max_error <= tolerance; }
};

template <int Dim>
std::vector<IdentityCheck> identity_suite(const FinslerStructure<Dim>& s, const Box<Dim>& domain, int samples,
                                          std::uint64_t seed = 1) {
  std::vector<IdentityCheck> c = {{"homogeneity", 0, 1e-12},   {"euler", 0, 1e-9},
                                  {"g_zero_homogeneity", 0, 1e-9}, {"triangle", 0, 1e-12},
                                  {"cartan_contraction", 0, 1e-8}, {"legendre_round_trip", 0, 1e-8},
                                  {"duality", 0, 1e-6},           {"dual_tensor", 0, 1e-5}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto bump = [](IdentityCheck& ic, double e) { ic.max_error = std::isnan(e) ? e : std::max(ic.max_error, e); };
  for (int k = 0; k < samples; ++k) {
    Point<Dim> x;
    Vector<Dim> v, w;
    for (int i = 0; i < Dim; ++i) {
      x[i] = domain.lo[i] + unit(rng) * (domain.hi[i] - domain.lo[i]);
      v[i] = gauss(rng);
      w[i] = gauss(rng);
    }
    const auto n = s.at(x);
    const double f = n(v);
    for (const double t : {0.5, 2.0, 10.0}) bump(c[0], std::abs(n(t * v) - t * f) / (t * f));
    const auto g = n.fundamental_tensor(v);
    bump(c[1], std::abs(g(v, v) - f * f) / (f * f));
    bump(c[2], (n.fundamental_tensor(3.7 * v).g - g.g).norm());
    bump(c[3], std::max(0.0, n(v + w) - f - n(w)));
    bump(c[4], n.cartan_tensor(v).contract(v).cwiseAbs().maxCoeff());
    const Covector<Dim> l = n.legendre(v);
    bump(c[5], (n.legendre_inverse(l).c - v.c).norm() / v.c.norm());
    bump(c[6], std::abs(n.dual_norm(l) - f) / f);
    // Hessian of 1/2 F*^2 at l(V) as central differences of its gradient l^{-1}.
    const double h = 1e-5 * l.c.norm();
    MatN<Dim> hess;
    for (int j = 0; j < Dim; ++j) {
      Covector<Dim> p = l, m = l;
      p[j] += h;
      m[j] -= h;
      hess.col(j) = (n.legendre_inverse(p).c - n.legendre_inverse(m).c) / (2 * h);
    }
    bump(c[7], (hess - g.inverse).cwiseAbs().maxCoeff() / std::max(1.0, g.inverse.norm()));
  }
  for (auto& ic : c) ic.samples = samples;
  return c;
}

}  // namespace finsler

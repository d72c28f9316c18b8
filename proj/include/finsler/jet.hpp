#pragma once

// Truncated multivariate Taylor polynomials ("jets") for forward-mode
// differentiation up to third order. A Jet<N, Order> carries the value and
// the full (symmetric, non-compressed) derivative tensors of a scalar
// function of N variables.

#include <array>
#include <cmath>
#include <cstddef>

namespace finsler {

template <int N, int Order>
class Jet {
  static_assert(N >= 1 && Order >= 1 && Order <= 3);

 public:
  static constexpr int kVars = N;
  static constexpr int kOrder = Order;

  double v = 0.0;
  std::array<double, N> d1{};
  std::array<double, (Order >= 2 ? N * N : 0)> d2{};
  std::array<double, (Order >= 3 ? N * N * N : 0)> d3{};

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT: implicit constant promotion

  static Jet variable(double value, int index) {
    Jet j(value);
    j.d1[index] = 1.0;
    return j;
  }

  double grad(int i) const { return d1[i]; }
  double hess(int i, int j) const { return d2[i * N + j]; }
  double third(int i, int j, int k) const { return d3[(i * N + j) * N + k]; }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d1[i] += o.d1[i];
    for (std::size_t i = 0; i < d2.size(); ++i) d2[i] += o.d2[i];
    for (std::size_t i = 0; i < d3.size(); ++i) d3[i] += o.d3[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d1[i] -= o.d1[i];
    for (std::size_t i = 0; i < d2.size(); ++i) d2[i] -= o.d2[i];
    for (std::size_t i = 0; i < d3.size(); ++i) d3[i] -= o.d3[i];
    return *this;
  }
  Jet& operator*=(double s) {
    v *= s;
    for (auto& x : d1) x *= s;
    for (auto& x : d2) x *= s;
    for (auto& x : d3) x *= s;
    return *this;
  }
  Jet& operator+=(double s) {
    v += s;
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a += -s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }
  friend Jet operator-(Jet a) { return a *= -1.0; }

  // Leibniz rule on the truncated tensors.
  friend Jet operator*(const Jet& f, const Jet& g) {
    Jet r(f.v * g.v);
    for (int i = 0; i < N; ++i) r.d1[i] = f.d1[i] * g.v + f.v * g.d1[i];
    if constexpr (Order >= 2) {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const int ij = i * N + j;
          r.d2[ij] = f.d2[ij] * g.v + f.d1[i] * g.d1[j] + f.d1[j] * g.d1[i] +
                     f.v * g.d2[ij];
        }
    }
    if constexpr (Order >= 3) {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
          for (int k = 0; k < N; ++k) {
            const int ijk = (i * N + j) * N + k;
            r.d3[ijk] = f.d3[ijk] * g.v + f.v * g.d3[ijk] +
                        f.d2[i * N + j] * g.d1[k] + f.d2[i * N + k] * g.d1[j] +
                        f.d2[j * N + k] * g.d1[i] + g.d2[i * N + j] * f.d1[k] +
                        g.d2[i * N + k] * f.d1[j] + g.d2[j * N + k] * f.d1[i];
          }
    }
    return r;
  }

  friend Jet operator/(const Jet& f, const Jet& g) {
    const double x = g.v;
    return f * g.compose(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x),
                         -6.0 / (x * x * x * x));
  }
  friend Jet operator/(double s, const Jet& g) { return s * (Jet(1.0) / g); }

  // phi(f) given phi and its first three derivatives at f.v.
  Jet compose(double p0, double p1, double p2, double p3) const {
    Jet r(p0);
    for (int i = 0; i < N; ++i) r.d1[i] = p1 * d1[i];
    if constexpr (Order >= 2) {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
          r.d2[i * N + j] = p2 * d1[i] * d1[j] + p1 * d2[i * N + j];
    }
    if constexpr (Order >= 3) {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
          for (int k = 0; k < N; ++k) {
            const int ijk = (i * N + j) * N + k;
            r.d3[ijk] = p3 * d1[i] * d1[j] * d1[k] +
                        p2 * (d2[i * N + j] * d1[k] + d2[i * N + k] * d1[j] +
                              d2[j * N + k] * d1[i]) +
                        p1 * d3[ijk];
          }
    }
    return r;
  }

  friend bool operator<(const Jet& a, const Jet& b) { return a.v < b.v; }
  friend bool operator>(const Jet& a, const Jet& b) { return a.v > b.v; }
};

template <int N, int O>
Jet<N, O> sqrt(const Jet<N, O>& f) {
  const double s = std::sqrt(f.v);
  return f.compose(s, 0.5 / s, -0.25 / (s * f.v), 0.375 / (s * f.v * f.v));
}

template <int N, int O>
Jet<N, O> exp(const Jet<N, O>& f) {
  const double e = std::exp(f.v);
  return f.compose(e, e, e, e);
}

template <int N, int O>
Jet<N, O> log(const Jet<N, O>& f) {
  const double x = f.v;
  return f.compose(std::log(x), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x));
}

template <int N, int O>
Jet<N, O> sin(const Jet<N, O>& f) {
  const double s = std::sin(f.v), c = std::cos(f.v);
  return f.compose(s, c, -s, -c);
}

template <int N, int O>
Jet<N, O> cos(const Jet<N, O>& f) {
  const double s = std::sin(f.v), c = std::cos(f.v);
  return f.compose(c, -s, -c, s);
}

// Real power; the base must be positive unless the exponent is a
// non-negative integer.
template <int N, int O>
Jet<N, O> pow(const Jet<N, O>& f, double p) {
  const double x = f.v;
  if (x == 0.0) {
    // Integer exponents at the origin: expand with repeated products.
    const int ip = static_cast<int>(p);
    if (static_cast<double>(ip) == p && ip >= 0) {
      Jet<N, O> r(1.0);
      for (int i = 0; i < ip; ++i) r = r * f;
      return r;
    }
  }
  const double p0 = std::pow(x, p);
  const double p1 = p * std::pow(x, p - 1);
  const double p2 = p * (p - 1) * std::pow(x, p - 2);
  const double p3 = p * (p - 1) * (p - 2) * std::pow(x, p - 3);
  return f.compose(p0, p1, p2, p3);
}

inline double value_of(double x) { return x; }
template <int N, int O>
double value_of(const Jet<N, O>& j) {
  return j.v;
}

}  // namespace finsler

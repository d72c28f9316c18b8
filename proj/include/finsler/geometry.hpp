#pragma once

// Geodesics, the exponential map, flag/Ricci curvature and the weighted
// Ricci curvature of a Finsler measure space.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "finsler/jet.hpp"
#include "finsler/norms.hpp"
#include "finsler/types.hpp"

namespace finsler {

/// Geodesic acceleration x'' = g^{-1}(dL/dx - (d^2L/dv dx) v) of the
/// Euler-Lagrange system of L = 1/2 F^2, at an absolute position x.
template <int Dim>
VecN<Dim> spray_acceleration(const FinslerStructure<Dim>& s, const VecN<Dim>& x, const VecN<Dim>& v) {
  using J = Jet<2 * Dim, 2>;
  std::array<J, Dim> xj, vj;
  for (int i = 0; i < Dim; ++i) {
    xj[i] = J::variable(x[i], i);
    vj[i] = J::variable(v[i], Dim + i);
  }
  const J L = s.lagrangian(xj, vj);
  MatN<Dim> g, mixed;
  VecN<Dim> dx;
  for (int i = 0; i < Dim; ++i) {
    dx[i] = L.grad(i);
    for (int j = 0; j < Dim; ++j) {
      g(i, j) = L.hess(Dim + i, Dim + j);
      mixed(i, j) = L.hess(Dim + i, j);
    }
  }
  return g.ldlt().solve(dx - mixed * v);
}

template <int Dim>
struct Geodesic {
  std::vector<double> times;
  std::vector<Point<Dim>> points;
  std::vector<Vector<Dim>> velocities;
  std::vector<double> speeds;  // F(gamma, gamma') at each sample
  double speed = 0.0;          // F at t = 0
  bool truncated = false;      // left the chart before reaching T

  const Point<Dim>& end() const { return points.back(); }
  double max_speed_drift() const {
    double d = 0.0;
    for (double s : speeds) d = std::max(d, std::abs(s - speed));
    return speed > 0 ? d / speed : d;
  }
};

struct GeodesicOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  int samples = 101;  // uniformly spaced in t, including both ends
};

/// Integrates the geodesic with gamma(0) = p, gamma'(0) = v over [0, T]
/// (T < 0 integrates backwards along the same curve) with adaptive
/// Dormand-Prince steps and dense output at uniformly spaced samples.
template <int Dim>
Geodesic<Dim> shoot_geodesic(const FinslerStructure<Dim>& s, const Point<Dim>& p, const Vector<Dim>& v, double T,
                             GeodesicOptions opt = {}) {
  if (v.is_zero()) throw DomainError("shoot_geodesic: zero initial velocity");
  if (!s.chart().contains(p)) throw DomainError("shoot_geodesic: start point outside chart");
  using State = std::array<double, 2 * Dim>;
  namespace ode = boost::numeric::odeint;

  // Backward integration runs y(r) = gamma(-r), which solves y'' = A(y, -y').
  const double sigma = T < 0 ? -1.0 : 1.0;
  const double span = std::abs(T);
  auto system = [&](const State& st, State& dst, double) {
    VecN<Dim> x, w;
    for (int i = 0; i < Dim; ++i) {
      x[i] = st[i];
      w[i] = st[Dim + i];
    }
    const VecN<Dim> a = spray_acceleration(s, x, VecN<Dim>(sigma * w));
    for (int i = 0; i < Dim; ++i) {
      dst[i] = w[i];
      dst[Dim + i] = a[i];
    }
  };

  State st;
  for (int i = 0; i < Dim; ++i) {
    st[i] = p[i];
    st[Dim + i] = sigma * v[i];
  }
  Geodesic<Dim> g;
  const auto n0 = s.at(p);
  g.speed = n0(v);
  auto record = [&](double r, const State& x) {
    Point<Dim> q;
    Vector<Dim> w;
    for (int i = 0; i < Dim; ++i) {
      q[i] = x[i];
      w[i] = sigma * x[Dim + i];
    }
    g.times.push_back(sigma * r);
    g.points.push_back(q);
    g.velocities.push_back(w);
    g.speeds.push_back(s.chart().contains(q) ? s.at(q)(w) : std::numeric_limits<double>::quiet_NaN());
  };
  record(0.0, st);
  if (span == 0.0) return g;

  const int samples = std::max(2, opt.samples);
  auto stepper = ode::make_dense_output(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<State>());
  stepper.initialize(st, 0.0, span / (4 * samples));
  int next = 1;
  State out;
  while (next < samples) {
    const auto [t0, t1] = stepper.do_step(system);
    (void)t0;
    while (next < samples) {
      const double r = span * next / (samples - 1);
      if (r > t1 + 1e-15 * span) break;
      stepper.calc_state(std::min(r, t1), out);
      Point<Dim> q;
      for (int i = 0; i < Dim; ++i) q[i] = out[i];
      if (!s.chart().contains(q)) {
        g.truncated = true;
        return g;
      }
      record(r, out);
      ++next;
    }
    Point<Dim> cur;
    for (int i = 0; i < Dim; ++i) cur[i] = stepper.current_state()[i];
    if (!s.chart().contains(cur) && next < samples) {
      g.truncated = true;
      return g;
    }
  }
  return g;
}

template <int Dim>
Point<Dim> exp_map(const FinslerStructure<Dim>& s, const Point<Dim>& p, const Vector<Dim>& v) {
  if (v.is_zero()) return p;
  const auto g = shoot_geodesic(s, p, v, 1.0, GeodesicOptions{1e-13, 1e-13, 2});
  if (g.truncated) throw DomainError("exp_map: geodesic leaves the chart");
  return g.end();
}

/// CSV rows (t, x, y[, z], speed).
template <int Dim>
void write_csv(std::ostream& os, const Geodesic<Dim>& g) {
  os << "t,x,y" << (Dim == 3 ? ",z" : "") << ",speed\n";
  os.precision(17);
  for (std::size_t k = 0; k < g.times.size(); ++k) {
    os << g.times[k];
    for (int i = 0; i < Dim; ++i) os << ',' << g.points[k][i];
    os << ',' << g.speeds[k] << '\n';
  }
}

namespace detail {

// Fixed-step RK4 in coordinates relative to the base point. The flow map is
// then a smooth function of the initial data, which the curvature stencils
// difference.
template <int Dim>
void rk4_relative(const FinslerStructure<Dim>& s, const VecN<Dim>& base, const VecN<Dim>& v0, double T, int steps,
                  VecN<Dim>& y_out, VecN<Dim>& v_out) {
  const double sigma = T < 0 ? -1.0 : 1.0;
  const double h = std::abs(T) / steps;
  VecN<Dim> y = VecN<Dim>::Zero(), w = sigma * v0;
  auto acc = [&](const VecN<Dim>& yy, const VecN<Dim>& ww) {
    return spray_acceleration(s, VecN<Dim>(base + yy), VecN<Dim>(sigma * ww));
  };
  for (int k = 0; k < steps; ++k) {
    const VecN<Dim> k1y = w, k1w = acc(y, w);
    const VecN<Dim> k2y = w + 0.5 * h * k1w, k2w = acc(y + 0.5 * h * k1y, k2y);
    const VecN<Dim> k3y = w + 0.5 * h * k2w, k3w = acc(y + 0.5 * h * k2y, k3y);
    const VecN<Dim> k4y = w + h * k3w, k4w = acc(y + h * k3y, k4y);
    y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
    w += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
  }
  y_out = y;
  v_out = sigma * w;
}

// g_V-orthonormal completion of the unit vector V.
template <int Dim>
std::vector<VecN<Dim>> orthonormal_completion(const MatN<Dim>& g, const VecN<Dim>& v) {
  std::vector<VecN<Dim>> basis{v};
  std::vector<VecN<Dim>> out;
  for (int i = 0; i < Dim && static_cast<int>(out.size()) < Dim - 1; ++i) {
    VecN<Dim> e = VecN<Dim>::Zero();
    e[i] = 1.0;
    for (const auto& b : basis) e -= e.dot(g * b) / b.dot(g * b) * b;
    const double nrm = std::sqrt(e.dot(g * e));
    if (nrm < 1e-6) continue;
    e /= nrm;
    basis.push_back(e);
    out.push_back(e);
  }
  return out;
}

}  // namespace detail

/// Comparison function s_{K,N}(t) for the volume-growth estimates.
inline double s_comparison(double K, double N, double t) {
  if (K < 0) throw DomainError("s_comparison: K must be >= 0");
  if (t < 0) throw DomainError("s_comparison: t must be >= 0");
  if (K == 0) return t;
  if (!(N > 1)) throw DomainError("s_comparison: N must exceed 1 when K > 0");
  const double c = std::sqrt(K / (N - 1));
  return std::sinh(c * t) / c;
}

enum class CurvatureMethod { kAuto, kAnalytic, kJacobiFd };

inline std::string to_string(CurvatureMethod m) {
  switch (m) {
    case CurvatureMethod::kAnalytic: return "analytic";
    case CurvatureMethod::kJacobiFd: return "jacobi-fd";
    default: return "auto";
  }
}

/// One entry of Ric_N. For N = n with a nonzero Psi'(0) the value is the
/// "-infinity" branch, carried as a flag and never as arithmetic.
struct WeightedRicciValue {
  double N = 0.0;  // +inf encodes N = infinity
  bool minus_infinity = false;
  double value = 0.0;

  double finite_value() const {
    if (minus_infinity) throw DomainError("Ric_N is the -infinity sentinel");
    return value;
  }
};

template <int Dim>
struct MeasureDecomposition {
  std::vector<double> times;
  std::vector<double> psi;  // Psi = 1/2 log det g_{eta'} - Phi along eta
  double psi_prime = 0.0;
  double psi_second = 0.0;
};

template <int Dim>
struct CurvatureReport {
  Point<Dim> x;
  Vector<Dim> v;
  double ricci = 0.0;
  std::vector<double> flag_curvatures;  // K^V(V, e_i), g_V-orthonormal e_i
  std::vector<WeightedRicciValue> weighted;
  double psi_prime = 0.0;
  double psi_second = 0.0;
  CurvatureMethod method = CurvatureMethod::kAuto;
};

struct CurvatureOptions {
  double stencil = 1e-2;         // Jacobi stencil, relative to the chart scale
  double psi_stencil = 1e-2;     // absolute t-step for the Psi derivatives
  double variation = 1e-3;       // Jacobi variation step, relative to |V|
  int rk4_steps = 16;
  double sentinel_tolerance = 1e-6;
};

namespace detail {

// Riemann tensor R^l_{ijk} (R(d_j, d_k) d_i = R^l_{ijk} d_l) of a Riemannian
// metric from the second x-jet of its coefficients.
template <int Dim>
std::array<double, Dim * Dim * Dim * Dim> riemann_tensor(const FinslerStructure<Dim>& s, const Point<Dim>& x) {
  using J = Jet<Dim, 2>;
  std::array<J, Dim> xj;
  for (int i = 0; i < Dim; ++i) xj[i] = J::variable(x[i], i);
  std::array<J, Dim * Dim> a;
  std::array<J, Dim> b;
  s.coefficients(xj, a, b);
  MatN<Dim> g;
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) g(i, j) = a[i * Dim + j].v;
  const MatN<Dim> gi = g.inverse();
  auto dg = [&](int i, int j, int k) { return a[i * Dim + j].grad(k); };
  auto ddg = [&](int i, int j, int k, int m) { return a[i * Dim + j].hess(k, m); };
  auto idx3 = [](int a0, int a1, int a2) { return (a0 * Dim + a1) * Dim + a2; };

  std::array<double, Dim * Dim * Dim> gamma_low{}, gamma{};  // Gamma_{k,ij}, Gamma^l_ij
  std::array<double, Dim * Dim * Dim * Dim> dgamma{};         // d_m Gamma^l_ij at [(m,l,i,j)]
  for (int k = 0; k < Dim; ++k)
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j) gamma_low[idx3(k, i, j)] = 0.5 * (dg(j, k, i) + dg(i, k, j) - dg(i, j, k));
  for (int l = 0; l < Dim; ++l)
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j) {
        double acc = 0.0;
        for (int k = 0; k < Dim; ++k) acc += gi(l, k) * gamma_low[idx3(k, i, j)];
        gamma[idx3(l, i, j)] = acc;
      }
  for (int m = 0; m < Dim; ++m) {
    MatN<Dim> dgm;
    for (int p = 0; p < Dim; ++p)
      for (int q = 0; q < Dim; ++q) dgm(p, q) = dg(p, q, m);
    const MatN<Dim> dgi = -gi * dgm * gi;
    for (int l = 0; l < Dim; ++l)
      for (int i = 0; i < Dim; ++i)
        for (int j = 0; j < Dim; ++j) {
          double acc = 0.0;
          for (int k = 0; k < Dim; ++k) {
            const double dlow = 0.5 * (ddg(j, k, i, m) + ddg(i, k, j, m) - ddg(i, j, k, m));
            acc += dgi(l, k) * gamma_low[idx3(k, i, j)] + gi(l, k) * dlow;
          }
          dgamma[((m * Dim + l) * Dim + i) * Dim + j] = acc;
        }
  }
  std::array<double, Dim * Dim * Dim * Dim> R{};
  for (int l = 0; l < Dim; ++l)
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j)
        for (int k = 0; k < Dim; ++k) {
          double r = dgamma[((j * Dim + l) * Dim + k) * Dim + i] - dgamma[((k * Dim + l) * Dim + j) * Dim + i];
          for (int m = 0; m < Dim; ++m)
            r += gamma[idx3(l, j, m)] * gamma[idx3(m, k, i)] - gamma[idx3(l, k, m)] * gamma[idx3(m, j, i)];
          R[((l * Dim + i) * Dim + j) * Dim + k] = r;
        }
  return R;
}

template <int Dim>
double jacobi_flag_curvature(const FinslerStructure<Dim>& s, const VecN<Dim>& x, const VecN<Dim>& v,
                             const VecN<Dim>& w, double eps, const CurvatureOptions& opt) {
  const double ds = opt.variation;
  auto q_of = [&](double t) {
    VecN<Dim> yp, vp, ym, vm, y0, v0;
    rk4_relative(s, x, VecN<Dim>(v + ds * w), t, opt.rk4_steps, yp, vp);
    rk4_relative(s, x, VecN<Dim>(v - ds * w), t, opt.rk4_steps, ym, vm);
    rk4_relative(s, x, v, t, opt.rk4_steps, y0, v0);
    const VecN<Dim> jac = (yp - ym) / (2 * ds);
    Point<Dim> at(VecN<Dim>(x + y0));
    if (!s.chart().contains(at)) throw DomainError("jacobi stencil leaves the chart");
    const auto g = s.at(at).fundamental_tensor(Vector<Dim>(v0));
    const double len2 = jac.dot(g.g * jac);
    return 3.0 * (t * t - len2) / (t * t * t * t);
  };
  const double q1 = q_of(eps), q2 = q_of(eps / 2), q4 = q_of(eps / 4);
  const double r1 = 2 * q2 - q1, r2 = 2 * q4 - q2;
  return (4 * r2 - r1) / 3.0;
}

}  // namespace detail

/// Ric(V) = F(V)^2 sum_i K^V(V, e_i). kAuto picks the analytic route when
/// the structure has one (locally Minkowski or Riemannian).
template <int Dim>
CurvatureReport<Dim> ricci(const FinslerStructure<Dim>& s, const Point<Dim>& x, const Vector<Dim>& v,
                           CurvatureMethod method = CurvatureMethod::kAuto, CurvatureOptions opt = {}) {
  if (v.is_zero()) throw DomainError("ricci: V must be nonzero");
  const bool analytic_available = s.is_locally_minkowski() || s.family() == Family::kRiemannian;
  if (method == CurvatureMethod::kAuto) method = analytic_available ? CurvatureMethod::kAnalytic : CurvatureMethod::kJacobiFd;
  if (method == CurvatureMethod::kAnalytic && !analytic_available)
    throw DomainError("ricci: no analytic curvature for this structure");

  CurvatureReport<Dim> rep;
  rep.x = x;
  rep.v = v;
  rep.method = method;
  const auto n = s.at(x);
  const double f = n(v);
  const VecN<Dim> unit = v.c / f;
  const auto gv = n.fundamental_tensor(Vector<Dim>(unit));
  const auto frame = detail::orthonormal_completion<Dim>(gv.g, unit);

  if (method == CurvatureMethod::kAnalytic) {
    if (s.is_locally_minkowski()) {
      rep.flag_curvatures.assign(frame.size(), 0.0);
    } else {
      const auto R = detail::riemann_tensor(s, x);
      for (const auto& e : frame) {
        // K(V, e) = g(R(e, V)V, e) for g-orthonormal (V, e).
        VecN<Dim> rv = VecN<Dim>::Zero();
        for (int l = 0; l < Dim; ++l)
          for (int i = 0; i < Dim; ++i)
            for (int j = 0; j < Dim; ++j)
              for (int k = 0; k < Dim; ++k) rv[l] += R[((l * Dim + i) * Dim + j) * Dim + k] * unit[i] * e[j] * unit[k];
        rep.flag_curvatures.push_back(e.dot(gv.g * rv));
      }
    }
  } else {
    const double eps = opt.stencil * s.chart().scale();
    for (const auto& e : frame) rep.flag_curvatures.push_back(detail::jacobi_flag_curvature(s, x.c, unit, e, eps, opt));
  }
  double sum = 0.0;
  for (double k : rep.flag_curvatures) sum += k;
  rep.ricci = f * f * sum;
  return rep;
}

/// Psi along the unit-speed geodesic through x with initial direction v,
/// and its first two derivatives at t = 0 (5-point stencils, Richardson
/// extrapolated over eps and eps/2).
template <int Dim>
MeasureDecomposition<Dim> measure_decomposition(const FinslerStructure<Dim>& s, const Point<Dim>& x,
                                                const Vector<Dim>& unit, double eps, int rk4_steps = 16) {
  MeasureDecomposition<Dim> md;
  auto psi_at = [&](double t) {
    VecN<Dim> y = VecN<Dim>::Zero(), w = unit.c;
    if (t != 0.0) detail::rk4_relative(s, x.c, unit.c, t, rk4_steps, y, w);
    const Point<Dim> q(VecN<Dim>(x.c + y));
    if (!s.chart().contains(q)) throw DomainError("measure decomposition stencil leaves the chart");
    const auto g = s.at(q).fundamental_tensor(Vector<Dim>(w));
    return 0.5 * std::log(g.g.determinant()) - s.log_density(q);
  };
  const std::array<double, 7> ts{-2 * eps, -eps, -eps / 2, 0.0, eps / 2, eps, 2 * eps};
  for (double t : ts) {
    md.times.push_back(t);
    md.psi.push_back(psi_at(t));
  }
  const auto& p = md.psi;
  // Indices: -2e:0, -e:1, -e/2:2, 0:3, e/2:4, e:5, 2e:6
  const double d1_e = (-p[6] + 8 * p[5] - 8 * p[1] + p[0]) / (12 * eps);
  const double d1_h = (-p[5] + 8 * p[4] - 8 * p[2] + p[1]) / (6 * eps);
  const double d2_e = (-p[6] + 16 * p[5] - 30 * p[3] + 16 * p[1] - p[0]) / (12 * eps * eps);
  const double d2_h = (-p[5] + 16 * p[4] - 30 * p[3] + 16 * p[2] - p[1]) / (3 * eps * eps);
  md.psi_prime = (16 * d1_h - d1_e) / 15.0;
  md.psi_second = (16 * d2_h - d2_e) / 15.0;
  return md;
}

/// Ric_N(V) for each requested N in [n, inf]; +inf in the list means N = inf.
template <int Dim>
CurvatureReport<Dim> weighted_ricci(const FinslerStructure<Dim>& s, const Point<Dim>& x, const Vector<Dim>& v,
                                    const std::vector<double>& n_list,
                                    CurvatureMethod method = CurvatureMethod::kAuto, CurvatureOptions opt = {}) {
  CurvatureReport<Dim> rep = ricci(s, x, v, method, opt);
  const double f = s.at(x)(v);
  const Vector<Dim> unit = v / f;
  // Straight constant-speed geodesics and a constant density make Psi constant.
  const bool flat = s.is_locally_minkowski() && s.has_constant_density() && rep.method == CurvatureMethod::kAnalytic;
  const auto md = flat ? MeasureDecomposition<Dim>{} : measure_decomposition(s, x, unit, opt.psi_stencil, opt.rk4_steps);
  rep.psi_prime = md.psi_prime;
  rep.psi_second = md.psi_second;
  const double ric_unit = rep.ricci / (f * f);
  for (double N : n_list) {
    if (!(N >= Dim)) throw DomainError("weighted_ricci: N must be >= n");
    WeightedRicciValue w;
    w.N = N;
    if (std::isinf(N)) {
      w.value = f * f * (ric_unit + md.psi_second);
    } else if (N == Dim) {
      if (std::abs(md.psi_prime) > opt.sentinel_tolerance) w.minus_infinity = true;
      else w.value = f * f * (ric_unit + md.psi_second);
    } else {
      w.value = f * f * (ric_unit + md.psi_second - md.psi_prime * md.psi_prime / (N - Dim));
    }
    rep.weighted.push_back(w);
  }
  return rep;
}

}  // namespace finsler

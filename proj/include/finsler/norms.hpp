#pragma once

// Finsler structures on a coordinate chart and the pointwise tensor algebra
// of their Minkowski norms.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "finsler/expression.hpp"
#include "finsler/jet.hpp"
#include "finsler/types.hpp"

namespace finsler {

enum class Family { kEuclidean, kRiemannian, kRanders, kQuartic };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::kEuclidean: return "euclidean";
    case Family::kRiemannian: return "riemannian";
    case Family::kRanders: return "randers";
    case Family::kQuartic: return "quartic";
  }
  return "?";
}

inline std::optional<Family> family_from_string(const std::string& s) {
  if (s == "euclidean") return Family::kEuclidean;
  if (s == "riemannian") return Family::kRiemannian;
  if (s == "randers") return Family::kRanders;
  if (s == "quartic" || s == "quartic-regularized") return Family::kQuartic;
  return std::nullopt;
}

/// Axis-aligned coordinate box; the chart on which a structure is defined.
template <int Dim>
struct Box {
  VecN<Dim> lo = VecN<Dim>::Constant(-10.0);
  VecN<Dim> hi = VecN<Dim>::Constant(10.0);

  bool contains(const Point<Dim>& p) const {
    return (p.c.array() >= lo.array()).all() && (p.c.array() <= hi.array()).all();
  }
  double scale() const { return (hi - lo).maxCoeff(); }
};

/// Serializable definition of a structure: family tag plus coefficient
/// fields as expressions in the chart coordinates.
template <int Dim>
struct StructureSpec {
  Family family = Family::kEuclidean;
  std::array<std::array<Expression, Dim>, Dim> metric = identity_metric();  // a_ij
  std::array<Expression, Dim> drift{};                                      // b_i
  double epsilon = 0.0;                                                     // quartic regularization
  Expression density{};                                                     // Phi, dm = e^Phi dx
  Box<Dim> chart{};

  static std::array<std::array<Expression, Dim>, Dim> identity_metric() {
    std::array<std::array<Expression, Dim>, Dim> a{};
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j) a[i][j] = Expression(i == j ? 1.0 : 0.0);
    return a;
  }
};

// Pure evaluation of F^2 for a family, generic over the coefficient scalar C
// (double or a jet in x) and the vector scalar T.
template <int Dim, class C, class T>
T squared_norm_generic(Family family, const std::array<C, Dim * Dim>& a, const std::array<C, Dim>& b,
                       double epsilon, const std::array<T, Dim>& v) {
  T q = T(0.0);
  if (family == Family::kEuclidean) {
    for (int i = 0; i < Dim; ++i) q += v[i] * v[i];
    return q;
  }
  for (int i = 0; i < Dim; ++i) {
    T row = T(0.0);
    for (int j = 0; j < Dim; ++j) row += a[i * Dim + j] * v[j];
    q += v[i] * row;
  }
  switch (family) {
    case Family::kRiemannian:
      return q;
    case Family::kRanders: {
      using std::sqrt;
      T beta = T(0.0);
      for (int i = 0; i < Dim; ++i) beta += b[i] * v[i];
      const T f = sqrt(q) + beta;
      return f * f;
    }
    case Family::kQuartic: {
      using std::sqrt;
      T s = q * q;
      for (int i = 0; i < Dim; ++i) {
        const T v2 = v[i] * v[i];
        s += epsilon * (v2 * v2);
      }
      return sqrt(s);
    }
    default:
      return q;
  }
}

template <int Dim>
struct FundamentalTensor {
  MatN<Dim> g;
  MatN<Dim> inverse;
  Vector<Dim> reference;

  double operator()(const Vector<Dim>& x, const Vector<Dim>& y) const { return x.c.dot(g * y.c); }
};

/// Totally symmetric C_ijk = 1/4 d^3 F^2 / dV^i dV^j dV^k.
template <int Dim>
struct CartanTensor {
  std::array<double, Dim * Dim * Dim> c{};
  double operator()(int i, int j, int k) const { return c[(i * Dim + j) * Dim + k]; }
  double& operator()(int i, int j, int k) { return c[(i * Dim + j) * Dim + k]; }

  /// (C_ijk V^i)_{jk}
  MatN<Dim> contract(const Vector<Dim>& v) const {
    MatN<Dim> m = MatN<Dim>::Zero();
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j)
        for (int k = 0; k < Dim; ++k) m(j, k) += (*this)(i, j, k) * v[i];
    return m;
  }
  double max_abs() const {
    double m = 0.0;
    for (double x : c) m = std::max(m, std::abs(x));
    return m;
  }
};

struct LegendreOptions {
  int max_iterations = 100;
  double tolerance = 1e-13;  // relative residual |l(W) - xi| / |xi|
};

/// Minkowski norm F(x, .) on a single tangent space, with the point's
/// coefficients frozen.
template <int Dim>
class MinkowskiNorm {
 public:
  MinkowskiNorm() = default;
  MinkowskiNorm(Family family, const MatN<Dim>& a, const VecN<Dim>& b, double epsilon)
      : family_(family), a_(a), b_(b), epsilon_(epsilon) {
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j) a_flat_[i * Dim + j] = a(i, j);
    for (int i = 0; i < Dim; ++i) b_flat_[i] = b[i];
  }

  Family family() const { return family_; }
  const MatN<Dim>& metric() const { return a_; }
  const VecN<Dim>& drift() const { return b_; }
  double epsilon() const { return epsilon_; }

  double squared(const Vector<Dim>& v) const {
    std::array<double, Dim> w;
    for (int i = 0; i < Dim; ++i) w[i] = v[i];
    return squared_norm_generic<Dim>(family_, a_flat_, b_flat_, epsilon_, w);
  }

  double operator()(const Vector<Dim>& v) const {
    if (family_ == Family::kRanders) {
      // Direct form avoids the sqrt of a square.
      return std::sqrt(std::max(0.0, v.c.dot(a_ * v.c))) + b_.dot(v.c);
    }
    return std::sqrt(std::max(0.0, squared(v)));
  }

  /// Jet of 1/2 F^2 at v in the v-variables.
  template <int Order>
  Jet<Dim, Order> half_squared_jet(const Vector<Dim>& v) const {
    std::array<Jet<Dim, Order>, Dim> w;
    for (int i = 0; i < Dim; ++i) w[i] = Jet<Dim, Order>::variable(v[i], i);
    return 0.5 * squared_norm_generic<Dim>(family_, a_flat_, b_flat_, epsilon_, w);
  }

  /// l(V) and g_ij(V) from one evaluation; V must be nonzero.
  void legendre_and_tensor(const Vector<Dim>& v, Covector<Dim>& l, MatN<Dim>& g) const {
    const auto j = half_squared_jet<2>(v);
    for (int i = 0; i < Dim; ++i) {
      l[i] = j.grad(i);
      for (int k = 0; k < Dim; ++k) g(i, k) = j.hess(i, k);
    }
  }

  FundamentalTensor<Dim> fundamental_tensor(const Vector<Dim>& v) const {
    if (v.is_zero()) throw DomainError("fundamental tensor undefined at V = 0");
    Covector<Dim> l;
    MatN<Dim> g;
    legendre_and_tensor(v, l, g);
    g = 0.5 * (g + g.transpose());
    Eigen::LLT<MatN<Dim>> llt(g);
    if (llt.info() != Eigen::Success || !(g.diagonal().array() > 0).all())
      throw DomainError("fundamental tensor is not positive definite");
    return {g, llt.solve(MatN<Dim>::Identity()), v};
  }

  CartanTensor<Dim> cartan_tensor(const Vector<Dim>& v) const {
    if (v.is_zero()) throw DomainError("Cartan tensor undefined at V = 0");
    const auto j = half_squared_jet<3>(v);
    CartanTensor<Dim> c;
    // 1/4 d^3 F^2 = 1/2 d^3 (F^2 / 2)
    for (int i = 0; i < Dim * Dim * Dim; ++i) c.c[i] = 0.5 * j.d3[i];
    return c;
  }

  Covector<Dim> legendre(const Vector<Dim>& v) const {
    if (v.is_zero()) return Covector<Dim>();
    const auto j = half_squared_jet<1>(v);
    Covector<Dim> l;
    for (int i = 0; i < Dim; ++i) l[i] = j.grad(i);
    return l;
  }

  /// Solves l(W) = xi by damped Newton on W -> 1/2 F^2(W) - xi(W).
  Vector<Dim> legendre_inverse(const Covector<Dim>& xi, const Vector<Dim>* guess = nullptr,
                               LegendreOptions opt = {}) const {
    const double scale = xi.c.norm();
    if (scale == 0.0) return Vector<Dim>();
    Vector<Dim> w;
    if (guess && !guess->is_zero() && guess->is_finite()) {
      w = *guess;
    } else {
      w = Vector<Dim>(riemannian_inverse(xi.c));
    }
    auto objective = [&](const Vector<Dim>& z) { return 0.5 * squared(z) - xi(z); };
    double phi = objective(w);
    Covector<Dim> l;
    MatN<Dim> g;
    for (int it = 0; it < opt.max_iterations; ++it) {
      legendre_and_tensor(w, l, g);
      const VecN<Dim> r = l.c - xi.c;
      if (r.norm() <= opt.tolerance * scale) return w;
      const VecN<Dim> d = -g.ldlt().solve(r);
      const double slope = r.dot(d);
      double t = 1.0;
      Vector<Dim> trial;
      double phi_trial = 0.0;
      for (int ls = 0; ls < 60; ++ls) {
        trial = Vector<Dim>(w.c + t * d);
        phi_trial = objective(trial);
        if (trial.is_zero()) {
          t *= 0.5;
          continue;
        }
        if (phi_trial <= phi + 1e-4 * t * slope) break;
        // Near the root the merit decrease drowns in roundoff; a halved
        // residual is then the acceptance test.
        if ((legendre(trial).c - xi.c).norm() <= 0.5 * r.norm()) break;
        t *= 0.5;
      }
      if ((trial.c - w.c).norm() <= 4 * std::numeric_limits<double>::epsilon() * w.c.norm()) {
        // Stalled at roundoff level: accept if the residual is tiny in absolute terms.
        if (r.norm() <= 1e-10 * scale) return trial;
        break;
      }
      w = trial;
      phi = phi_trial;
    }
    throw ConvergenceError("legendre_inverse: Newton iteration did not converge");
  }

  /// F*(xi) = F(l^{-1}(xi)); the Legendre route used in energy assembly.
  double dual_via_legendre(const Covector<Dim>& xi, Vector<Dim>* gradient_out = nullptr,
                           const Vector<Dim>* guess = nullptr) const {
    const Vector<Dim> w = legendre_inverse(xi, guess);
    if (gradient_out) *gradient_out = w;
    return (*this)(w);
  }

  /// F*(xi) = sup_{F(V) <= 1} xi(V) by multi-start projected ascent on the
  /// unit indicatrix.
  double dual_norm(const Covector<Dim>& xi, double tolerance = 1e-10) const {
    if (xi.is_zero()) return 0.0;
    std::vector<VecN<Dim>> starts = start_directions();
    starts.push_back(riemannian_inverse(xi.c));
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& s : starts) best = std::max(best, ascend(xi, Vector<Dim>(s), tolerance));
    return best;
  }

 private:
  VecN<Dim> riemannian_inverse(const VecN<Dim>& xi) const {
    if (family_ == Family::kEuclidean) return xi;
    return a_.ldlt().solve(xi);
  }

  static std::vector<VecN<Dim>> start_directions() {
    std::vector<VecN<Dim>> out;
    if constexpr (Dim == 2) {
      for (int k = 0; k < 8; ++k) {
        const double th = k * M_PI / 4.0;
        out.emplace_back(std::cos(th), std::sin(th));
      }
    } else {
      for (int i = 0; i < Dim; ++i) {
        VecN<Dim> e = VecN<Dim>::Zero();
        e[i] = 1.0;
        out.push_back(e);
        out.push_back(-e);
      }
      for (int m = 0; m < (1 << Dim); ++m) {
        VecN<Dim> e;
        for (int i = 0; i < Dim; ++i) e[i] = (m >> i) & 1 ? 1.0 : -1.0;
        out.push_back(e);
      }
    }
    return out;
  }

  double ascend(const Covector<Dim>& xi, Vector<Dim> v, double tolerance) const {
    v = v / (*this)(v);
    double value = xi(v);
    const double scale = xi.c.norm();
    Covector<Dim> l;
    MatN<Dim> g;
    double step = 1.0;
    for (int it = 0; it < 500; ++it) {
      legendre_and_tensor(v, l, g);
      // Tangential component of xi on the indicatrix F = 1 (dF = l(V) there).
      const VecN<Dim> tangential = xi.c - value * l.c;
      // Newton step for xi = mu l(V) with multiplier mu = xi(V).
      const double mu = value > 0 ? value : scale;
      const VecN<Dim> d = g.ldlt().solve(tangential / mu);
      if (tangential.norm() <= tolerance * scale) break;
      bool improved = false;
      for (int ls = 0; ls < 60; ++ls) {
        Vector<Dim> trial(v.c + step * d);
        const double f = (*this)(trial);
        if (f > 0) {
          trial = trial / f;
          const double tv = xi(trial);
          if (tv > value) {
            v = trial;
            improved = tv - value > 1e-16 * std::abs(value);
            value = tv;
            step = std::min(1.0, 2.0 * step);
            break;
          }
        }
        step *= 0.5;
      }
      if (!improved) break;
    }
    return value;
  }

  Family family_ = Family::kEuclidean;
  MatN<Dim> a_ = MatN<Dim>::Identity();
  VecN<Dim> b_ = VecN<Dim>::Zero();
  double epsilon_ = 0.0;
  std::array<double, Dim * Dim> a_flat_{};
  std::array<double, Dim> b_flat_{};
};

/// A Finsler structure with a measure density on a coordinate chart.
/// Immutable after construction.
template <int Dim>
class FinslerStructure {
 public:
  static constexpr int kDim = Dim;

  explicit FinslerStructure(StructureSpec<Dim> spec) : spec_(std::move(spec)) {
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j) {
        if (spec_.metric[i][j].arity() > Dim || spec_.drift[i].arity() > Dim)
          throw DomainError("coefficient expression uses a coordinate beyond the dimension");
      }
    if (spec_.density.arity() > Dim) throw DomainError("density expression uses a coordinate beyond the dimension");
    if (spec_.family == Family::kQuartic && !(spec_.epsilon > 0.0))
      throw DomainError("quartic family requires epsilon > 0");
    if (!(spec_.chart.hi.array() > spec_.chart.lo.array()).all()) throw DomainError("empty chart box");
    check_admissible();
  }

  const StructureSpec<Dim>& spec() const { return spec_; }
  Family family() const { return spec_.family; }
  const Box<Dim>& chart() const { return spec_.chart; }

  /// True when F does not depend on x (constant coefficients).
  bool is_locally_minkowski() const {
    if (spec_.family == Family::kEuclidean) return true;
    for (int i = 0; i < Dim; ++i) {
      for (int j = 0; j < Dim; ++j)
        if (!spec_.metric[i][j].is_constant()) return false;
      if (spec_.family == Family::kRanders && !spec_.drift[i].is_constant()) return false;
    }
    return true;
  }

  bool is_reversible() const {
    if (spec_.family != Family::kRanders) return true;
    for (const auto& b : spec_.drift)
      if (!(b.is_constant() && b.constant_value() == 0.0)) return false;
    return true;
  }

  bool has_constant_density() const { return spec_.density.is_constant(); }

  template <class T>
  void coefficients(const std::array<T, Dim>& x, std::array<T, Dim * Dim>& a, std::array<T, Dim>& b) const {
    const std::span<const T> xs(x.data(), Dim);
    for (int i = 0; i < Dim; ++i) {
      for (int j = 0; j < Dim; ++j) {
        // Symmetrize: only the upper triangle is read.
        const auto& e = i <= j ? spec_.metric[i][j] : spec_.metric[j][i];
        a[i * Dim + j] = spec_.family == Family::kEuclidean ? T(i == j ? 1.0 : 0.0) : e.template eval<T>(xs);
      }
      b[i] = spec_.family == Family::kRanders ? spec_.drift[i].template eval<T>(xs) : T(0.0);
    }
  }

  MinkowskiNorm<Dim> at(const Point<Dim>& x) const {
    std::array<double, Dim> xs;
    for (int i = 0; i < Dim; ++i) xs[i] = x[i];
    std::array<double, Dim * Dim> a;
    std::array<double, Dim> b;
    coefficients(xs, a, b);
    MatN<Dim> am;
    VecN<Dim> bv;
    for (int i = 0; i < Dim; ++i) {
      bv[i] = b[i];
      for (int j = 0; j < Dim; ++j) am(i, j) = a[i * Dim + j];
    }
    return MinkowskiNorm<Dim>(spec_.family, am, bv, spec_.epsilon);
  }

  /// 1/2 F^2(x, v) with everything in scalar type T; used for the geodesic
  /// spray, which needs mixed x/v derivatives.
  template <class T>
  T lagrangian(const std::array<T, Dim>& x, const std::array<T, Dim>& v) const {
    std::array<T, Dim * Dim> a;
    std::array<T, Dim> b;
    coefficients(x, a, b);
    return 0.5 * squared_norm_generic<Dim>(spec_.family, a, b, spec_.epsilon, v);
  }

  template <class T>
  T log_density(const std::array<T, Dim>& x) const {
    return spec_.density.template eval<T>(std::span<const T>(x.data(), Dim));
  }
  double log_density(const Point<Dim>& x) const {
    std::array<double, Dim> xs;
    for (int i = 0; i < Dim; ++i) xs[i] = x[i];
    return log_density<double>(xs);
  }
  double density(const Point<Dim>& x) const { return std::exp(log_density(x)); }

 private:
  // Grid-samples the chart: Randers needs a^{ij} b_i b_j < 1, and every
  // family needs a positive-definite metric.
  void check_admissible() const {
    if (spec_.family == Family::kEuclidean) return;
    const int per_axis = is_locally_minkowski() ? 1 : (Dim == 2 ? 33 : 13);
    std::array<int, Dim> idx{};
    for (;;) {
      Point<Dim> x;
      for (int i = 0; i < Dim; ++i) {
        const double t = per_axis == 1 ? 0.5 : static_cast<double>(idx[i]) / (per_axis - 1);
        x[i] = spec_.chart.lo[i] + t * (spec_.chart.hi[i] - spec_.chart.lo[i]);
      }
      const auto n = at(x);
      Eigen::LLT<MatN<Dim>> llt(n.metric());
      if (llt.info() != Eigen::Success || !n.metric().allFinite())
        throw DomainError("metric a_ij is not positive definite on the chart");
      if (spec_.family == Family::kRanders) {
        const double bb = n.drift().dot(llt.solve(n.drift()));
        if (!(bb < 1.0)) throw DomainError("randers drift violates a^{ij} b_i b_j < 1 on the chart");
      }
      int d = 0;
      while (d < Dim && ++idx[d] == per_axis) idx[d++] = 0;
      if (d == Dim) break;
    }
  }

  StructureSpec<Dim> spec_;
};

// Free-function surface.

template <int Dim>
double eval_norm(const FinslerStructure<Dim>& s, const Point<Dim>& x, const Vector<Dim>& v) {
  if (!v.is_finite()) throw DomainError("eval_norm: non-finite vector");
  return s.at(x)(v);
}

template <int Dim>
FundamentalTensor<Dim> fundamental_tensor(const FinslerStructure<Dim>& s, const Point<Dim>& x,
                                          const Vector<Dim>& v) {
  return s.at(x).fundamental_tensor(v);
}

template <int Dim>
CartanTensor<Dim> cartan_tensor(const FinslerStructure<Dim>& s, const Point<Dim>& x, const Vector<Dim>& v) {
  return s.at(x).cartan_tensor(v);
}

template <int Dim>
double dual_norm(const FinslerStructure<Dim>& s, const Point<Dim>& x, const Covector<Dim>& xi) {
  if (!xi.is_finite()) throw DomainError("dual_norm: non-finite covector");
  return s.at(x).dual_norm(xi);
}

template <int Dim>
Covector<Dim> legendre(const FinslerStructure<Dim>& s, const Point<Dim>& x, const Vector<Dim>& v) {
  return s.at(x).legendre(v);
}

template <int Dim>
Vector<Dim> legendre_inverse(const FinslerStructure<Dim>& s, const Point<Dim>& x, const Covector<Dim>& xi) {
  return s.at(x).legendre_inverse(xi);
}

namespace numeric {

/// Central second differences of 1/2 F^2 with step rel_step * F-scale.
template <int Dim>
MatN<Dim> fundamental_tensor_fd(const MinkowskiNorm<Dim>& n, const Vector<Dim>& v, double rel_step = 1e-4) {
  if (v.is_zero()) throw DomainError("fundamental tensor undefined at V = 0");
  const double h = rel_step * v.c.norm();
  auto f = [&](const VecN<Dim>& w) { return 0.5 * n.squared(Vector<Dim>(w)); };
  MatN<Dim> g;
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) {
      VecN<Dim> ei = VecN<Dim>::Zero(), ej = VecN<Dim>::Zero();
      ei[i] = h;
      ej[j] = h;
      g(i, j) = (f(v.c + ei + ej) - f(v.c + ei - ej) - f(v.c - ei + ej) + f(v.c - ei - ej)) / (4 * h * h);
    }
  return g;
}

/// Third differences of F^2 (times 1/4) with step rel_step * F-scale.
template <int Dim>
CartanTensor<Dim> cartan_tensor_fd(const MinkowskiNorm<Dim>& n, const Vector<Dim>& v, double rel_step = 1e-3) {
  if (v.is_zero()) throw DomainError("Cartan tensor undefined at V = 0");
  const double h = rel_step * v.c.norm();
  auto f = [&](const VecN<Dim>& w) { return n.squared(Vector<Dim>(w)); };
  CartanTensor<Dim> c;
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j)
      for (int k = 0; k < Dim; ++k) {
        double acc = 0.0;
        for (int si = -1; si <= 1; si += 2)
          for (int sj = -1; sj <= 1; sj += 2)
            for (int sk = -1; sk <= 1; sk += 2) {
              VecN<Dim> w = v.c;
              w[i] += si * h;
              w[j] += sj * h;
              w[k] += sk * h;
              acc += si * sj * sk * f(w);
            }
        c(i, j, k) = 0.25 * acc / (8 * h * h * h);
      }
  return c;
}

}  // namespace numeric

template <int Dim>
struct UniformConstants {
  double lambda = 1.0;        // min g_V(W,W) / F^2(W)
  double Lambda = 1.0;        // max g_V(W,W) / F^2(W)
  double rho = 1.0;           // max F(V) / F(-V)
  double dual_lambda = 1.0;   // min g^{ij}(V) xi_i xi_j / F*^2(xi)
  double dual_Lambda = 1.0;   // max of the same
  std::size_t samples = 0;
  std::size_t skipped = 0;
  Box<Dim> domain{};

  /// rho^2 <= 1/lambda and rho^2 <= Lambda, up to sampling slack.
  bool reversibility_bounds_hold(double slack = 1e-9) const {
    return rho * rho <= 1.0 / lambda + slack && rho * rho <= Lambda + slack;
  }
};

/// Sampled estimates of the uniform smoothness/convexity constants and the
/// reversibility modulus over (x, V, W) triples drawn from the domain.
template <int Dim>
UniformConstants<Dim> estimate_uniform_constants(const FinslerStructure<Dim>& s, const Box<Dim>& domain,
                                                 std::size_t samples = 4096, std::uint64_t seed = 1) {
  if (samples < 1000) throw DomainError("estimate_uniform_constants: need at least 1000 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  UniformConstants<Dim> u;
  u.domain = domain;
  u.lambda = u.dual_lambda = std::numeric_limits<double>::infinity();
  u.Lambda = u.dual_Lambda = 0.0;
  u.rho = 1.0;

  // Deterministic direction grid for the reversibility modulus (2D: includes
  // the coordinate axes exactly).
  std::vector<VecN<Dim>> grid;
  if constexpr (Dim == 2) {
    for (int k = 0; k < 720; ++k) grid.emplace_back(std::cos(k * M_PI / 360), std::sin(k * M_PI / 360));
  } else {
    for (int k = 0; k < 400; ++k) {
      VecN<Dim> d;
      for (int i = 0; i < Dim; ++i) d[i] = gauss(rng);
      grid.push_back(d.normalized());
    }
    for (int i = 0; i < Dim; ++i) {
      VecN<Dim> e = VecN<Dim>::Zero();
      e[i] = 1;
      grid.push_back(e);
    }
  }

  const std::size_t points = std::max<std::size_t>(8, samples / 64);
  std::size_t taken = 0;
  for (std::size_t p = 0; p < points; ++p) {
    Point<Dim> x;
    for (int i = 0; i < Dim; ++i) x[i] = domain.lo[i] + unit(rng) * (domain.hi[i] - domain.lo[i]);
    const auto n = s.at(x);
    for (const auto& d : grid) {
      // Antipodal pairs (V, W = -V) realize the extremes behind rho^2 <= 1/lambda and rho^2 <= Lambda.
      const Vector<Dim> v(d);
      const double fv = n(v), fm = n(-v);
      u.rho = std::max(u.rho, fv / fm);
      const double ratio = (fv * fv) / (fm * fm);  // g_V(-V,-V) / F^2(-V)
      u.lambda = std::min(u.lambda, ratio);
      u.Lambda = std::max(u.Lambda, ratio);
    }
    const std::size_t per_point = samples / points + (p < samples % points ? 1 : 0);
    for (std::size_t k = 0; k < per_point; ++k) {
      Vector<Dim> v, w;
      for (int i = 0; i < Dim; ++i) {
        v[i] = gauss(rng);
        w[i] = gauss(rng);
      }
      if (v.is_zero() || w.is_zero()) {
        ++u.skipped;
        continue;
      }
      const auto g = n.fundamental_tensor(v);
      const double fw = n(w);
      const double ratio = g(w, w) / (fw * fw);
      u.lambda = std::min(u.lambda, ratio);
      u.Lambda = std::max(u.Lambda, ratio);
      u.rho = std::max(u.rho, n(v) / n(-v));
      // Dual ellipticity with xi = l(w): F*(xi) = F(w).
      const Covector<Dim> xi = n.legendre(w);
      const double dual_ratio = xi.c.dot(g.inverse * xi.c) / (fw * fw);
      u.dual_lambda = std::min(u.dual_lambda, dual_ratio);
      u.dual_Lambda = std::max(u.dual_Lambda, dual_ratio);
      ++taken;
    }
  }
  u.samples = taken;
  return u;
}

}  // namespace finsler

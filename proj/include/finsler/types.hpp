#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace finsler {

template <int Dim>
using VecN = Eigen::Matrix<double, Dim, 1>;
template <int Dim>
using MatN = Eigen::Matrix<double, Dim, Dim>;

/// Thrown on precondition violations (zero vectors where a direction is
/// required, dimension mismatches, inadmissible structures).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an iterative method fails to converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Component wrapper shared by the three coordinate-level types. The Tag
// keeps points, tangent vectors and covectors from mixing silently.
template <int Dim, class Tag>
struct Tagged {
  VecN<Dim> c = VecN<Dim>::Zero();

  Tagged() = default;
  explicit Tagged(const VecN<Dim>& components) : c(components) {}
  template <class... Ts>
    requires(sizeof...(Ts) == Dim)
  explicit Tagged(Ts... xs) : c(static_cast<double>(xs)...) {}

  static constexpr int dimension() { return Dim; }
  double operator[](int i) const { return c[i]; }
  double& operator[](int i) { return c[i]; }
  bool is_zero() const { return c.isZero(0.0); }
  bool is_finite() const { return c.allFinite(); }
};

struct PointTag {};
struct TangentTag {};
struct CotangentTag {};

}  // namespace detail

template <int Dim>
struct Vector : detail::Tagged<Dim, detail::TangentTag> {
  using detail::Tagged<Dim, detail::TangentTag>::Tagged;
  Vector& operator+=(const Vector& o) { this->c += o.c; return *this; }
  Vector& operator-=(const Vector& o) { this->c -= o.c; return *this; }
  friend Vector operator+(Vector a, const Vector& b) { return a += b; }
  friend Vector operator-(Vector a, const Vector& b) { return a -= b; }
  friend Vector operator-(const Vector& a) { return Vector(-a.c); }
  friend Vector operator*(double s, const Vector& a) { return Vector(s * a.c); }
  friend Vector operator*(const Vector& a, double s) { return Vector(s * a.c); }
  friend Vector operator/(const Vector& a, double s) { return Vector(a.c / s); }
};

template <int Dim>
struct Covector : detail::Tagged<Dim, detail::CotangentTag> {
  using detail::Tagged<Dim, detail::CotangentTag>::Tagged;
  Covector& operator+=(const Covector& o) { this->c += o.c; return *this; }
  Covector& operator-=(const Covector& o) { this->c -= o.c; return *this; }
  friend Covector operator+(Covector a, const Covector& b) { return a += b; }
  friend Covector operator-(Covector a, const Covector& b) { return a -= b; }
  friend Covector operator-(const Covector& a) { return Covector(-a.c); }
  friend Covector operator*(double s, const Covector& a) { return Covector(s * a.c); }
  friend Covector operator*(const Covector& a, double s) { return Covector(s * a.c); }
  /// The natural pairing xi(V).
  double operator()(const Vector<Dim>& v) const { return this->c.dot(v.c); }
};

template <int Dim>
struct Point : detail::Tagged<Dim, detail::PointTag> {
  using detail::Tagged<Dim, detail::PointTag>::Tagged;
  friend Point operator+(const Point& p, const Vector<Dim>& v) { return Point(p.c + v.c); }
  friend Point operator-(const Point& p, const Vector<Dim>& v) { return Point(p.c - v.c); }
  /// Coordinate displacement q - p, as a tangent vector at p.
  friend Vector<Dim> operator-(const Point& q, const Point& p) { return Vector<Dim>(q.c - p.c); }
};

template <int Dim>
double pairing(const Covector<Dim>& xi, const Vector<Dim>& v) {
  return xi(v);
}

using Point2 = Point<2>;
using Vector2 = Vector<2>;
using Covector2 = Covector<2>;

}  // namespace finsler

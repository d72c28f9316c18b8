#pragma once

// Limited-memory BFGS with a pluggable initial inverse Hessian and a
// backtracking Armijo line search.

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <functional>
#include <string>

namespace finsler {

struct LbfgsOptions {
  int memory = 8;
  int max_iterations = 500;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 50;
  // Once objective changes are at roundoff level the Armijo test is
  // meaningless; a trial is then accepted if it shrinks the gradient.
  double roundoff = 1e-14;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
};

/// Objective: f(x, grad) returns f and fills grad.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;
/// Applies H0 to a vector; the iteration index lets callers refresh a
/// lagged factorization.
using InitialInverseHessian = std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)>;
/// Stop test, evaluated at every accepted iterate (and at x0).
using StopTest = std::function<bool(const Eigen::VectorXd& x, const Eigen::VectorXd& grad, double f)>;
/// Called after each accepted step with (iteration, f, x, grad).
using IterationObserver =
    std::function<void(int, double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

inline LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x, const StopTest& stop,
                                  const LbfgsOptions& opt = {}, const InitialInverseHessian& h0 = nullptr,
                                  const IterationObserver& observe = nullptr) {
  LbfgsResult res;
  Eigen::VectorXd g(x.size());
  double fx = f(x, g);
  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  if (observe) observe(0, fx, x, g);
  for (int it = 0;; ++it) {
    res.iterations = it;
    if (stop(x, g, fx)) {
      res.converged = true;
      res.stop_reason = "converged";
      break;
    }
    if (it >= opt.max_iterations) {
      res.stop_reason = "iteration cap";
      break;
    }
    auto apply_h0 = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
      if (h0) return h0(q, it);
      if (!S.empty()) return (S.back().dot(Y.back()) / Y.back().squaredNorm()) * q;
      return q / std::max(1.0, g.lpNorm<Eigen::Infinity>());
    };
    auto direction = [&]() {
      Eigen::VectorXd q = g;
      std::vector<double> alpha(S.size());
      for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
        alpha[k] = rho[k] * S[k].dot(q);
        q -= alpha[k] * Y[k];
      }
      Eigen::VectorXd r = apply_h0(q);
      for (std::size_t k = 0; k < S.size(); ++k) {
        const double beta = rho[k] * Y[k].dot(r);
        r += (alpha[k] - beta) * S[k];
      }
      return Eigen::VectorXd(-r);
    };
    Eigen::VectorXd d = direction();
    double slope = g.dot(d);
    if (!(slope < 0)) {
      S.clear(), Y.clear(), rho.clear();
      d = -apply_h0(g);
      slope = g.dot(d);
      if (!(slope < 0)) {
        d = -g;
        slope = -g.squaredNorm();
      }
    }
    double step = 1.0;
    Eigen::VectorXd xn, gn(x.size());
    double fn = 0;
    bool accepted = false;
    for (int b = 0; b < opt.max_backtracks; ++b) {
      xn = x + step * d;
      fn = f(xn, gn);
      if (std::isfinite(fn) && fn <= fx + opt.armijo * step * slope) {
        accepted = true;
        break;
      }
      if (std::isfinite(fn) && std::abs(fn - fx) <= opt.roundoff * std::max(1.0, std::abs(fx)) &&
          gn.norm() < g.norm()) {
        accepted = true;
        break;
      }
      step *= opt.backtrack;
    }
    if (!accepted) {
      res.stop_reason = "line search failed";
      break;
    }
    const Eigen::VectorXd s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.memory) S.pop_front(), Y.pop_front(), rho.pop_front();
    }
    x = std::move(xn);
    g = gn;
    fx = fn;
    if (observe) observe(it + 1, fx, x, g);
  }
  res.x = std::move(x);
  res.value = fx;
  return res;
}

}  // namespace finsler

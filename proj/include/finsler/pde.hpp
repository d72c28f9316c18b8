#pragma once

// P1 finite elements for the Finsler Dirichlet energy, the weak Laplacian
// and the weighted Laplacian on 2D meshes, and the energy-minimizing
// Dirichlet solver.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "finsler/lbfgs.hpp"
#include "finsler/mesh.hpp"
#include "finsler/norms.hpp"
#include "finsler/report.hpp"

namespace finsler {

/// Per-element data shared by all assembly routines: the norm frozen at the
/// centroid and the weight e^{Phi(x_c)} |T|.
class Discretization {
 public:
  Discretization(const FinslerStructure<2>& s, const Mesh& mesh) : s_(&s), mesh_(&mesh) {
    norms_.reserve(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      norms_.push_back(s.at(mesh.centroids[t]));
      weights_.push_back(s.density(mesh.centroids[t]) * mesh.areas[t]);
    }
    cache_.assign(mesh.num_triangles(), Vector2());
  }

  const Mesh& mesh() const { return *mesh_; }
  const FinslerStructure<2>& structure() const { return *s_; }
  const MinkowskiNorm<2>& norm(int t) const { return norms_[t]; }
  double weight(int t) const { return weights_[t]; }

  /// grad u = l^{-1}(Du) on element t; 0 where Du = 0.
  Vector2 element_gradient(int t, const Covector2& du) const {
    if (du.is_zero()) return Vector2();
    const Vector2* guess = cache_[t].is_zero() ? nullptr : &cache_[t];
    const Vector2 w = norms_[t].legendre_inverse(du, guess);
    cache_[t] = w;
    return w;
  }

  std::vector<Vector2> gradient_field(const std::vector<double>& u) const {
    std::vector<Vector2> out(mesh_->num_triangles());
    for (int t = 0; t < mesh_->num_triangles(); ++t) out[t] = element_gradient(t, mesh_->differential(t, u));
    return out;
  }

  /// E(u) = sum_T F*^2(Du_T) w_T; fills dE/du_i when grad is given.
  double energy(const std::vector<double>& u, std::vector<double>* grad = nullptr) const {
    if (grad) grad->assign(u.size(), 0.0);
    double e = 0.0;
    for (int t = 0; t < mesh_->num_triangles(); ++t) {
      const Covector2 du = mesh_->differential(t, u);
      if (du.is_zero()) continue;
      const Vector2 w = element_gradient(t, du);
      e += du(w) * weights_[t];  // du(l^{-1} du) = F*^2(du)
      if (grad)
        for (int k = 0; k < 3; ++k) (*grad)[mesh_->triangles[t][k]] += 2.0 * weights_[t] * mesh_->shape_gradients[t][k].dot(w.c);
    }
    return e;
  }

  /// Weak Laplacian tested against every hat function:
  ///   r_i = -sum_T D(phi_i)(grad u) w_T   (= -1/2 dE/du_i).
  std::vector<double> weak_laplacian(const std::vector<double>& u) const {
    std::vector<double> r(u.size(), 0.0);
    for (int t = 0; t < mesh_->num_triangles(); ++t) {
      const Covector2 du = mesh_->differential(t, u);
      if (du.is_zero()) continue;
      const Vector2 w = element_gradient(t, du);
      for (int k = 0; k < 3; ++k) r[mesh_->triangles[t][k]] -= weights_[t] * mesh_->shape_gradients[t][k].dot(w.c);
    }
    return r;
  }

  /// sum_T D(phi_i)^T G_T D(phi_j) w_T over all nodes.
  Eigen::SparseMatrix<double> stiffness(const std::vector<MatN<2>>& G) const {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * mesh_->num_triangles());
    for (int t = 0; t < mesh_->num_triangles(); ++t)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          trips.emplace_back(mesh_->triangles[t][a], mesh_->triangles[t][b],
                             weights_[t] * mesh_->shape_gradients[t][a].dot(G[t] * mesh_->shape_gradients[t][b]));
    Eigen::SparseMatrix<double> K(mesh_->num_nodes(), mesh_->num_nodes());
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
  }

  /// g^{-1}(x_c, grad u) per element, with a^{-1} standing in where Du = 0.
  std::vector<MatN<2>> dual_metric(const std::vector<double>& u) const {
    std::vector<MatN<2>> G(mesh_->num_triangles());
    for (int t = 0; t < mesh_->num_triangles(); ++t) {
      const Covector2 du = mesh_->differential(t, u);
      G[t] = du.is_zero() ? MatN<2>(norms_[t].metric().inverse())
                          : norms_[t].fundamental_tensor(element_gradient(t, du)).inverse;
    }
    return G;
  }

 private:
  const FinslerStructure<2>* s_;
  const Mesh* mesh_;
  std::vector<MinkowskiNorm<2>> norms_;
  std::vector<double> weights_;
  mutable std::vector<Vector2> cache_;  // warm starts for the Legendre inverse
};

inline double energy(const FinslerStructure<2>& s, const Mesh& mesh, const std::vector<double>& u) {
  return Discretization(s, mesh).energy(u);
}

inline std::vector<Vector2> gradient_field(const FinslerStructure<2>& s, const Mesh& mesh, const std::vector<double>& u) {
  return Discretization(s, mesh).gradient_field(u);
}

/// Weak-form Laplacian residual per node; boundary entries are set to 0.
inline std::vector<double> laplacian_residual(const FinslerStructure<2>& s, const Mesh& mesh,
                                              const std::vector<double>& u) {
  auto r = Discretization(s, mesh).weak_laplacian(u);
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (mesh.boundary[i]) r[i] = 0.0;
  return r;
}

/// Weak residual of the weighted Laplacian with reference field V (one
/// vector per element): r_i = -sum_T D(phi_i)(g^{ij}(x_c, V_T) Du_T) w_T.
/// Boundary entries are set to 0.
inline std::vector<double> weighted_laplacian(const FinslerStructure<2>& s, const Mesh& mesh,
                                              const std::vector<double>& u, const std::vector<Vector2>& V) {
  if (static_cast<int>(V.size()) != mesh.num_triangles()) throw DomainError("weighted_laplacian: one V per element");
  const Discretization disc(s, mesh);
  std::vector<double> r(u.size(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Covector2 du = mesh.differential(t, u);
    if (du.is_zero()) continue;
    if (V[t].is_zero()) throw DomainError("weighted_laplacian: V vanishes where Du does not");
    const VecN<2> grad_v = disc.norm(t).fundamental_tensor(V[t]).inverse * du.c;
    for (int k = 0; k < 3; ++k) r[mesh.triangles[t][k]] -= disc.weight(t) * mesh.shape_gradients[t][k].dot(grad_v);
  }
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (mesh.boundary[i]) r[i] = 0.0;
  return r;
}

struct SolverConfig {
  int max_iterations = 300;
  double tolerance = 1e-11;  // on max |weak residual| over interior nodes
  int memory = 8;
  int refresh = 5;           // iterations between preconditioner refactorizations
  double armijo = 1e-4;
  double backtrack = 0.5;
  int verbosity = 0;
};

struct SolveLogEntry {
  int iteration;
  double energy;
  double residual;
};

struct SolveResult {
  std::vector<double> u;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  double energy = 0.0;
  double max_principle_violation = 0.0;  // amount by which u leaves [min g, max g]
  bool maximum_principle = true;         // violation <= 1e-9
  std::string stop_reason;
  std::vector<SolveLogEntry> log;

  void write_log_csv(std::ostream& os) const {
    os.precision(17);
    os << "iteration,energy,residual\n";
    for (const auto& e : log) os << e.iteration << ',' << e.energy << ',' << e.residual << '\n';
  }
};

/// Minimizes the energy over interior nodal values with the boundary nodes
/// fixed to boundary(x). L-BFGS whose initial inverse Hessian is a sparse
/// Cholesky factorization of the energy Hessian at a lagged iterate.
inline SolveResult solve_dirichlet(const FinslerStructure<2>& s, const Mesh& mesh,
                                   const std::function<double(const Point2&)>& boundary, const SolverConfig& cfg = {},
                                   const std::vector<double>* initial = nullptr) {
  if (!(cfg.tolerance > 0)) throw DomainError("solver tolerance must be positive");
  const Discretization disc(s, mesh);
  const int n = mesh.num_nodes();
  std::vector<int> interior_of(n, -1), interior;
  std::vector<double> u(n, 0.0);
  double gmin = INFINITY, gmax = -INFINITY;
  for (int i = 0; i < n; ++i) {
    if (mesh.boundary[i]) {
      u[i] = boundary(mesh.nodes[i]);
      if (!std::isfinite(u[i])) throw DomainError("boundary data must be finite");
      gmin = std::min(gmin, u[i]);
      gmax = std::max(gmax, u[i]);
    } else {
      interior_of[i] = static_cast<int>(interior.size());
      interior.push_back(i);
    }
  }
  const int m = static_cast<int>(interior.size());
  SolveResult res;

  auto restrict_matrix = [&](const Eigen::SparseMatrix<double>& K) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < K.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it) {
        const int a = interior_of[it.row()], b = interior_of[it.col()];
        if (a >= 0 && b >= 0) trips.emplace_back(a, b, it.value());
      }
    Eigen::SparseMatrix<double> Ki(m, m);
    Ki.setFromTriplets(trips.begin(), trips.end());
    return Ki;
  };
  auto scatter = [&](const Eigen::VectorXd& z) {
    std::vector<double> full = u;
    for (int k = 0; k < m; ++k) full[interior[k]] = z[k];
    return full;
  };

  if (m == 0) {
    res.u = u;
    res.converged = true;
    res.energy = disc.energy(u);
    return res;
  }

  Eigen::VectorXd z(m);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol;
  bool analyzed = false;
  auto factor = [&](const std::vector<double>& at) {
    const Eigen::SparseMatrix<double> H = 2.0 * restrict_matrix(disc.stiffness(disc.dual_metric(at)));
    // The sparsity pattern never changes; the ordering is computed once.
    if (!analyzed) chol.analyzePattern(H), analyzed = true;
    chol.factorize(H);
    if (chol.info() != Eigen::Success) throw ConvergenceError("solve_dirichlet: preconditioner factorization failed");
  };

  if (initial) {
    if (static_cast<int>(initial->size()) != n) throw DomainError("initial guess has wrong size");
    for (int k = 0; k < m; ++k) z[k] = (*initial)[interior[k]];
  } else {
    // Start from the harmonic extension for the Riemannian part a^{-1}.
    std::vector<MatN<2>> G(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) G[t] = disc.norm(t).metric().inverse();
    const auto K = disc.stiffness(G);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < K.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it) {
        const int a = interior_of[it.row()];
        if (a >= 0 && interior_of[it.col()] < 0) rhs[a] -= it.value() * u[it.col()];
      }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> lin(restrict_matrix(K));
    z = lin.solve(rhs);
  }

  Objective obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    std::vector<double> grad;
    const double e = disc.energy(scatter(x), &grad);
    g.resize(m);
    for (int k = 0; k < m; ++k) g[k] = grad[interior[k]];
    return e;
  };
  std::vector<double> accepted = scatter(z);
  int factored_at = -1;
  IterationObserver observe = [&](int it, double f, const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
    accepted = scatter(x);
    res.log.push_back({it, f, 0.5 * g.lpNorm<Eigen::Infinity>()});
  };
  InitialInverseHessian h0 = [&](const Eigen::VectorXd& q, int it) -> Eigen::VectorXd {
    if (factored_at < 0 || it - factored_at >= cfg.refresh) {
      factor(accepted);
      factored_at = it;
    }
    return chol.solve(q);
  };
  StopTest stop = [&](const Eigen::VectorXd&, const Eigen::VectorXd& g, double) {
    return 0.5 * g.lpNorm<Eigen::Infinity>() <= cfg.tolerance;
  };
  LbfgsOptions lo;
  lo.memory = cfg.memory;
  lo.max_iterations = cfg.max_iterations;
  lo.armijo = cfg.armijo;
  lo.backtrack = cfg.backtrack;
  const auto r = lbfgs_minimize(obj, z, stop, lo, h0, observe);

  res.u = scatter(r.x);
  res.converged = r.converged;
  res.iterations = r.iterations;
  res.stop_reason = r.stop_reason;
  res.energy = r.value;
  res.residual = res.log.empty() ? 0.0 : res.log.back().residual;
  for (int i : interior)
    res.max_principle_violation = std::max({res.max_principle_violation, res.u[i] - gmax, gmin - res.u[i]});
  res.maximum_principle = res.max_principle_violation <= 1e-9;
  return res;
}

namespace detail {

// Smooth bump supported well inside the mesh, used to test weak identities
// away from the boundary.
inline std::vector<double> interior_bump(const Mesh& mesh) {
  VecN<2> c = VecN<2>::Zero();
  for (const auto& p : mesh.nodes) c += p.c;
  c /= mesh.num_nodes();
  double r = INFINITY;
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (mesh.boundary[i]) r = std::min(r, (mesh.nodes[i].c - c).norm());
  r *= 0.8;
  std::vector<double> eta(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double q = (mesh.nodes[i].c - c).squaredNorm() / (r * r);
    eta[i] = q < 1 ? (1 - q) * (1 - q) : 0.0;
  }
  return eta;
}

}  // namespace detail

/// Weak check of Delta_m log u = -F^2(grad log u) for positive harmonic u.
/// sign = -1 flips the right-hand side (used to confirm the check can fail).
inline InequalityReport log_transform_check(const FinslerStructure<2>& s, const Mesh& mesh, const std::vector<double>& u,
                                            double sign = 1.0) {
  for (double x : u)
    if (!(x > 0)) throw DomainError("log_transform_check: u must be positive");
  const Discretization disc(s, mesh);
  std::vector<double> v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = std::log(u[i]);
  const auto lhs = disc.weak_laplacian(v);
  std::vector<double> rhs(u.size(), 0.0), mass(u.size(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Covector2 dv = mesh.differential(t, v);
    const double f2 = dv.is_zero() ? 0.0 : dv(disc.element_gradient(t, dv));
    for (int k : mesh.triangles[t]) {
      rhs[k] -= sign * f2 * disc.weight(t) / 3.0;
      mass[k] += disc.weight(t) / 3.0;
    }
  }
  const auto eta = detail::interior_bump(mesh);
  double weak = 0.0, scale = 0.0, nodal = 0.0;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (mesh.boundary[i]) continue;
    weak += eta[i] * (lhs[i] - rhs[i]);
    scale += eta[i] * mass[i];
    nodal = std::max(nodal, std::abs(lhs[i] - rhs[i]) / mass[i]);
  }
  InequalityReport rep;
  rep.tag = "log-transform";
  // lhs: bump-tested discrepancy per unit mass; rhs: the O(h) allowance.
  rep.set_sides(std::abs(weak) / scale, mesh.h);
  rep.parameters = {{"h", mesh.h}, {"sign", sign}};
  rep.statistics = {{"weak_discrepancy", std::abs(weak) / scale}, {"nodal_max_discrepancy", nodal}};
  return rep;
}

}  // namespace finsler

#pragma once

// Conjugate gradients (Jacobi preconditioned, optionally restricted to a
// hyperplane l^T x = const) and the discrete solution operator S_h.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fem.hpp"

namespace surfctrl {

struct LinearOperator {
  std::function<void(const Vector& in, Vector& out)> apply;
  Eigen::Index dim = 0;
  bool symmetric = true;

  Vector operator()(const Vector& x) const {
    Vector y(dim);
    apply(x, y);
    return y;
  }
};

inline LinearOperator make_operator(const SparseMatrix& a) {
  return {[&a](const Vector& x, Vector& y) { y.noalias() = a * x; }, a.rows(), true};
}

inline Vector inverse_diagonal(const SparseMatrix& a) {
  Vector d = a.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = d[i] > 0.0 ? 1.0 / d[i] : 1.0;
  return d;
}

struct CgOptions {
  double rel_tol = 1e-10;
  /// Also stop once sqrt(r . z) <= abs_tol, with z the preconditioned residual.
  double abs_tol = 0.0;
  int max_iter = 20000;
  /// Jacobi preconditioner as the inverse diagonal; null means none.
  const Vector* inv_diagonal = nullptr;
  /// When set, iterates stay on {x : constraint . x = constraint . x0} and the
  /// residual is measured orthogonally to the constraint.
  const Vector* constraint = nullptr;
#ifdef NDEBUG
  bool verify_symmetry = false;
#else
  bool verify_symmetry = true;
#endif
  /// Records 1/2 x^T A x - b^T x after every step (one extra product each).
  bool track_energy = false;
};

struct CgResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> energy;
};

namespace detail {

inline void check_symmetry(const LinearOperator& a, const Vector* constraint) {
  std::mt19937_64 rng(20110101);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 2; ++trial) {
    Vector x(a.dim), y(a.dim);
    for (Eigen::Index i = 0; i < a.dim; ++i) {
      x[i] = normal(rng);
      y[i] = normal(rng);
    }
    if (constraint) {
      const double ll = constraint->squaredNorm();
      x -= (constraint->dot(x) / ll) * *constraint;
      y -= (constraint->dot(y) / ll) * *constraint;
    }
    const Vector ax = a(x);
    const Vector ay = a(y);
    const double scale = std::max(ax.norm() * y.norm(), ay.norm() * x.norm());
    if (std::abs(x.dot(ay) - y.dot(ax)) > 1e-10 * scale)
      throw NonSymmetricOperator("cg_solve: operator failed the symmetry probe");
  }
}

}  // namespace detail

/// Solves A x = rhs for symmetric positive (semi)definite A. Throws
/// MaxIterationsExceeded carrying the best iterate when the tolerance is not met.
inline CgResult cg_solve(const LinearOperator& a, const Vector& rhs, const CgOptions& opt,
                         std::optional<Vector> x0 = std::nullopt) {
  const Vector* ell = opt.constraint;
  if (opt.verify_symmetry && a.symmetric) detail::check_symmetry(a, ell);
  if (opt.verify_symmetry && !a.symmetric) throw NonSymmetricOperator("cg_solve: operator flagged non-symmetric");

  Vector d_ell;
  double ell_d_ell = 0.0, ell_ell = 0.0;
  if (ell) {
    d_ell = opt.inv_diagonal ? Vector(opt.inv_diagonal->cwiseProduct(*ell)) : *ell;
    ell_d_ell = ell->dot(d_ell);
    ell_ell = ell->squaredNorm();
  }
  auto precondition = [&](const Vector& r) {
    Vector z = opt.inv_diagonal ? Vector(opt.inv_diagonal->cwiseProduct(r)) : r;
    if (ell) z -= (ell->dot(z) / ell_d_ell) * d_ell;
    return z;
  };
  auto projected_norm = [&](const Vector& r) {
    if (!ell) return r.norm();
    return (r - (ell->dot(r) / ell_ell) * *ell).norm();
  };

  CgResult res;
  res.x = x0 ? std::move(*x0) : Vector::Zero(a.dim);
  Vector ad(a.dim);
  a.apply(res.x, ad);
  Vector r = rhs - ad;
  double bnorm = projected_norm(rhs);
  if (bnorm == 0.0) bnorm = 1.0;

  auto energy = [&]() {
    Vector ax(a.dim);
    a.apply(res.x, ax);
    return 0.5 * res.x.dot(ax) - rhs.dot(res.x);
  };
  if (opt.track_energy) res.energy.push_back(energy());

  double rnorm = projected_norm(r);
  res.relative_residual = rnorm / bnorm;
  if (res.relative_residual <= opt.rel_tol) return res;

  Vector best = res.x;
  double best_res = res.relative_residual;
  Vector z = precondition(r);
  Vector d = z;
  double rz = r.dot(z);
  if (opt.abs_tol > 0.0 && std::sqrt(std::max(rz, 0.0)) <= opt.abs_tol) return res;
  for (int k = 0; k < opt.max_iter; ++k) {
    a.apply(d, ad);
    const double dad = d.dot(ad);
    if (!(dad > 0.0)) {
      if (rz <= std::numeric_limits<double>::min()) break;
      throw SingularSystem("cg_solve: non-positive curvature d^T A d");
    }
    const double step = rz / dad;
    res.x += step * d;
    r -= step * ad;
    res.iterations = k + 1;
    if (opt.track_energy) res.energy.push_back(energy());
    rnorm = projected_norm(r);
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual <= opt.rel_tol) return res;
    if (res.relative_residual < best_res) {
      best_res = res.relative_residual;
      best = res.x;
    }
    z = precondition(r);
    const double rz_new = r.dot(z);
    if (opt.abs_tol > 0.0 && std::sqrt(std::max(rz_new, 0.0)) <= opt.abs_tol) return res;
    d = z + (rz_new / rz) * d;
    rz = rz_new;
  }
  if (res.relative_residual <= opt.rel_tol) return res;
  throw MaxIterationsExceeded("cg_solve: no convergence after " + std::to_string(res.iterations) +
                                  " iterations (relative residual " + std::to_string(best_res) + ")",
                              best, best_res);
}

enum class StateBoundary { None, Dirichlet, MeanZero };

/// Discrete solution operator S_h of -Lap y + c y = f on Gamma^h, applied to
/// load vectors (int f phi_i). In MeanZero mode the load is first projected to
/// zero mean (the L2 projection onto L2_0) and the state has zero mean.
class StateSolver {
 public:
  StateSolver(const SurfaceMesh& mesh, const SparseMatrix& stiffness, const SparseMatrix& mass, double c,
              StateBoundary bc, double rel_tol = 1e-10)
      : mass_(mass), bc_(bc), rel_tol_(rel_tol) {
    if (c == 0.0 && bc == StateBoundary::None)
      throw SingularSystem("state equation with c = 0 needs Dirichlet or mean-zero conditions");
    const SparseMatrix system = c == 0.0 ? stiffness : SparseMatrix(stiffness + c * mass);
    if (bc == StateBoundary::Dirichlet) {
      dirichlet_ = apply_dirichlet(system, mesh.boundary);
      system_ = dirichlet_->reduced;
    } else {
      system_ = system;
    }
    if (bc == StateBoundary::MeanZero) {
      mass_ones_ = mass * Vector::Ones(mass.rows());
      area_ = mass_ones_.sum();
    }
    inv_diag_ = inverse_diagonal(system_);
  }

  StateBoundary boundary() const { return bc_; }
  const SparseMatrix& mass() const { return mass_; }

  /// Removes the mean of a load vector (identity unless MeanZero).
  Vector project_load(Vector load) const {
    if (bc_ == StateBoundary::MeanZero) load -= (load.sum() / area_) * mass_ones_;
    return load;
  }

  Vector solve_load(const Vector& load) const {
    CgOptions opt;
    opt.rel_tol = rel_tol_;
    opt.inv_diagonal = &inv_diag_;
    opt.verify_symmetry = false;
    const LinearOperator op = make_operator(system_);
    if (bc_ == StateBoundary::Dirichlet) {
      const CgResult r = cg_solve(op, dirichlet_->restrict_vector(load), opt);
      iterations_ += r.iterations;
      return dirichlet_->extend(r.x);
    }
    if (bc_ == StateBoundary::MeanZero) {
      opt.constraint = &mass_ones_;
      CgResult r = cg_solve(op, project_load(load), opt);
      iterations_ += r.iterations;
      r.x -= (mass_ones_.dot(r.x) / area_) * Vector::Ones(r.x.size());
      return r.x;
    }
    const CgResult r = cg_solve(op, load, opt);
    iterations_ += r.iterations;
    return r.x;
  }

  /// S_h applied to a nodal function.
  Vector apply(const Vector& u) const { return solve_load(mass_ * u); }

  long total_iterations() const { return iterations_; }

 private:
  SparseMatrix mass_;
  StateBoundary bc_;
  double rel_tol_;
  SparseMatrix system_;
  Vector inv_diag_;
  Vector mass_ones_;
  double area_ = 0.0;
  std::optional<DirichletSystem> dirichlet_;
  mutable long iterations_ = 0;  // not synchronized: one solver per thread
};

/// Solves (K + cM) y = M u for a nodal control u.
inline NodalFunction solve_state(const SurfaceMesh& mesh, const SparseMatrix& stiffness, const SparseMatrix& mass,
                                 const NodalFunction& u, double c, StateBoundary bc) {
  if (bc == StateBoundary::MeanZero) {
    const double mean = (mass * u.values).sum();
    const double area = mass.sum();
    const double scale = std::sqrt(area) * l2_norm(mass, u.values);
    if (std::abs(mean) > 1e-8 * scale) throw IncompatibleRHS("solve_state: control must have zero mean");
  }
  StateSolver solver(mesh, stiffness, mass, c, bc);
  return {&mesh, solver.apply(u.values)};
}

}  // namespace surfctrl

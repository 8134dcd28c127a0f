#pragma once

// Variationally discretized optimal control on Gamma^h and its semi-smooth
// Newton solver.
//
// The control is never interpolated: it is stored as the box clamp of a P1
// function (plus a constant shift m when the admissible set carries a zero
// mean constraint), and every integral involving it is evaluated exactly by
// clipping each triangle along the level lines where the clamp switches.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fem.hpp"
#include "linsolve.hpp"
#include "quadrature.hpp"

namespace surfctrl {

/// min 1/2 |y - z|^2 + alpha/2 |u|^2  s.t.  -Lap y + c y = u - r,  lower <= u <= upper.
struct ProblemSpec {
  AnalyticSurface surface = AnalyticSurface::unit_sphere();
  double c = 1.0;
  double alpha = 1.0;
  double lower = -1.0;
  double upper = 1.0;
  bool mean_zero = false;   // controls and states integrate to zero (c = 0, closed surface)
  bool dirichlet = false;   // y = 0 on the boundary
  SurfaceFunction target;   // z
  SurfaceFunction shift;    // r; empty means zero
  SurfaceFunction exact_control;

  void validate() const {
    if (!(alpha > 0.0)) throw InvalidConfig("alpha must be positive");
    if (!(lower < upper)) throw InvalidConfig("bounds must satisfy lower < upper");
    if (mean_zero && !(lower < 0.0 && upper > 0.0)) throw InvalidConfig("mean-zero controls need lower < 0 < upper");
    if (mean_zero && dirichlet) throw InvalidConfig("mean-zero and Dirichlet conditions are exclusive");
    if (dirichlet && !surface.has_boundary()) throw InvalidConfig("Dirichlet conditions need a surface with boundary");
    if (!target) throw InvalidConfig("target z is required");
  }

  StateBoundary state_boundary() const {
    if (dirichlet) return StateBoundary::Dirichlet;
    if (mean_zero) return StateBoundary::MeanZero;
    return StateBoundary::None;
  }
};

/// u = clamp(base + m, lower, upper) with base in V_h.
struct ClampedControl {
  Vector base;
  double m = 0.0;
  double lower = -1.0;
  double upper = 1.0;
};

/// A control that is piecewise defined by the regions of a clamp:
///   lower bound where switching.base + m < lower,
///   upper bound where it exceeds upper,
///   the P1 function `interior` in between.
/// Semi-smooth Newton iterates have this form (interior values come from the
/// linear solve and need not lie within the bounds); a ClampedControl is the
/// special case interior = base + m.
struct PiecewiseControl {
  ClampedControl switching;
  Vector interior;

  static PiecewiseControl from(const ClampedControl& c) {
    return {c, (c.base.array() + c.m).matrix()};
  }

  /// u == 0 everywhere, independent of the bounds.
  static PiecewiseControl zero(int n, double lower, double upper) {
    return {{Vector::Constant(n, 0.5 * (lower + upper)), 0.0, lower, upper}, Vector::Zero(n)};
  }
};

// ---------------------------------------------------------------------------
// Exact integration over the clamp regions
// ---------------------------------------------------------------------------

namespace detail {

inline std::array<double, 3> local_values(const Vector& v, const Triangle& t, double shift = 0.0) {
  return {v[t[0]] + shift, v[t[1]] + shift, v[t[2]] + shift};
}

inline double linear_at(const std::array<double, 3>& f, const Bary& b) {
  return f[0] * b[0] + f[1] * b[1] + f[2] * b[2];
}

}  // namespace detail

/// Calls cb(region, polygon) with region -1 (below lower), 0 (inactive) or +1
/// (above upper) for the nonempty parts of `poly` under the clamp of f.
template <class Callback>
void for_each_region(const Polygon& poly, const std::array<double, 3>& f, double lower, double upper,
                     Callback&& cb) {
  const double fmin = std::min({f[0], f[1], f[2]});
  const double fmax = std::max({f[0], f[1], f[2]});
  if (fmax < lower) return cb(-1, poly);
  if (fmin > upper) return cb(+1, poly);
  if (fmin >= lower && fmax <= upper) return cb(0, poly);
  const BoxRegions r = split_by_bounds(poly, f, lower, upper);
  if (!r.lower.empty()) cb(-1, r.lower);
  if (!r.inactive.empty()) cb(0, r.inactive);
  if (!r.upper.empty()) cb(+1, r.upper);
}

/// Calls cb(polygon, values) for the pieces of triangle t on which u is the
/// linear function with the given vertex values.
template <class Callback>
void for_each_piece(const SurfaceMesh& mesh, const PiecewiseControl& u, int t, const Polygon& host,
                    Callback&& cb) {
  const Triangle& tri = mesh.triangles[t];
  const ClampedControl& s = u.switching;
  for_each_region(host, detail::local_values(s.base, tri, s.m), s.lower, s.upper,
                  [&](int region, const Polygon& poly) {
                    if (region < 0) cb(poly, std::array<double, 3>{s.lower, s.lower, s.lower});
                    else if (region > 0) cb(poly, std::array<double, 3>{s.upper, s.upper, s.upper});
                    else cb(poly, detail::local_values(u.interior, tri));
                  });
}

template <class Callback>
void for_each_piece(const SurfaceMesh& mesh, const PiecewiseControl& u, int t, Callback&& cb) {
  for_each_piece(mesh, u, t, Polygon::reference_triangle(), std::forward<Callback>(cb));
}

/// Integral of u over Gamma^h.
inline double integrate(const SurfaceMesh& mesh, const PiecewiseControl& u) {
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = triangle_area(mesh.corners(t));
    for_each_piece(mesh, u, t, [&](const Polygon& poly, const std::array<double, 3>& f) {
      for_each_point(poly, kDegree2Rule, [&](const Bary& b, double w) { sum += area * w * detail::linear_at(f, b); });
    });
  }
  return sum;
}

inline double l2_norm_squared(const SurfaceMesh& mesh, const PiecewiseControl& u) {
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = triangle_area(mesh.corners(t));
    for_each_piece(mesh, u, t, [&](const Polygon& poly, const std::array<double, 3>& f) {
      for_each_point(poly, kDegree2Rule, [&](const Bary& b, double w) {
        const double v = detail::linear_at(f, b);
        sum += area * w * v * v;
      });
    });
  }
  return sum;
}

/// b_i = int u phi_i over Gamma^h, exact.
inline Vector load_vector(const SurfaceMesh& mesh, const PiecewiseControl& u) {
  Vector b = Vector::Zero(mesh.num_vertices());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = triangle_area(mesh.corners(t));
    const Triangle& tri = mesh.triangles[t];
    for_each_piece(mesh, u, t, [&](const Polygon& poly, const std::array<double, 3>& f) {
      for_each_point(poly, kDegree2Rule, [&](const Bary& bc, double w) {
        const double v = area * w * detail::linear_at(f, bc);
        for (int k = 0; k < 3; ++k) b[tri[k]] += v * bc[k];
      });
    });
  }
  return b;
}

inline double integrate(const SurfaceMesh& mesh, const ClampedControl& u) {
  return integrate(mesh, PiecewiseControl::from(u));
}
inline double l2_norm_squared(const SurfaceMesh& mesh, const ClampedControl& u) {
  return l2_norm_squared(mesh, PiecewiseControl::from(u));
}
inline Vector load_vector(const SurfaceMesh& mesh, const ClampedControl& u) {
  return load_vector(mesh, PiecewiseControl::from(u));
}

/// ||u1 - u2||_{L2(Gamma^h)}, exact: each piece of u1 is clipped again by the
/// regions of u2.
inline double l2_distance(const SurfaceMesh& mesh, const PiecewiseControl& u1, const PiecewiseControl& u2) {
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = triangle_area(mesh.corners(t));
    for_each_piece(mesh, u1, t, [&](const Polygon& poly, const std::array<double, 3>& f1) {
      for_each_piece(mesh, u2, t, poly, [&](const Polygon& sub, const std::array<double, 3>& f2) {
        for_each_point(sub, kDegree2Rule, [&](const Bary& b, double w) {
          const double d = detail::linear_at(f1, b) - detail::linear_at(f2, b);
          sum += area * w * d * d;
        });
      });
    });
  }
  return std::sqrt(sum);
}

/// ||u - (u_exact)_l||_{L2(Gamma^h)}: the clamp pieces of u are integrated
/// with the degree-4 rule (on 4^subdivisions parts of each piece).
inline double l2_error_vs_exact(const SurfaceMesh& mesh, const AnalyticSurface& surface, const PiecewiseControl& u,
                                const SurfaceFunction& u_exact, int subdivisions = 0) {
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto p = mesh.corners(t);
    const double area = triangle_area(p);
    for_each_piece(mesh, u, t, [&](const Polygon& poly, const std::array<double, 3>& f) {
      auto integrate_part = [&](const Polygon& part) {
        for_each_point(part, kDegree4Rule, [&](const Bary& b, double w) {
          const double d = detail::linear_at(f, b) - u_exact(surface.project(point_on_triangle(p, b)));
          sum += area * w * d * d;
        });
      };
      if (subdivisions == 0) return integrate_part(poly);
      // Fan triangles of the piece, each subdivided uniformly.
      for (int i = 1; i + 1 < poly.size; ++i) {
        const std::array<Bary, 3> fan{poly.pts[0], poly.pts[i], poly.pts[i + 1]};
        for_each_subtriangle(subdivisions, [&](const Polygon& sub) {
          Polygon mapped;
          for (int k = 0; k < sub.size; ++k)
            mapped.push(sub.pts[k][0] * fan[0] + sub.pts[k][1] * fan[1] + sub.pts[k][2] * fan[2]);
          integrate_part(mapped);
        });
      }
    });
  }
  return std::sqrt(sum);
}

inline double l2_error_vs_exact(const SurfaceMesh& mesh, const AnalyticSurface& surface, const ClampedControl& u,
                                const SurfaceFunction& u_exact, int subdivisions = 0) {
  return l2_error_vs_exact(mesh, surface, PiecewiseControl::from(u), u_exact, subdivisions);
}

/// Pointwise value of u at barycentric point b of triangle t.
inline double value_at(const SurfaceMesh& mesh, const PiecewiseControl& u, int t, const Bary& b) {
  const Triangle& tri = mesh.triangles[t];
  const ClampedControl& s = u.switching;
  const double sw = detail::linear_at(detail::local_values(s.base, tri, s.m), b);
  if (sw < s.lower) return s.lower;
  if (sw > s.upper) return s.upper;
  return detail::linear_at(detail::local_values(u.interior, tri), b);
}

/// Vertex samples (for visualization only).
inline Vector vertex_values(const PiecewiseControl& u) {
  Vector v(u.interior.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double sw = u.switching.base[i] + u.switching.m;
    v[i] = sw < u.switching.lower ? u.switching.lower : sw > u.switching.upper ? u.switching.upper : u.interior[i];
  }
  return v;
}

// ---------------------------------------------------------------------------
// Projection onto the admissible set
// ---------------------------------------------------------------------------

namespace detail {

struct ClampIntegral {
  double value;          // int clamp(v + x)
  double inactive_area;  // derivative with respect to x
};

inline ClampIntegral clamp_integral(const SurfaceMesh& mesh, const Vector& v, double x, double lower, double upper) {
  ClampIntegral r{0.0, 0.0};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = triangle_area(mesh.corners(t));
    const auto f = local_values(v, mesh.triangles[t], x);
    for_each_region(Polygon::reference_triangle(), f, lower, upper, [&](int region, const Polygon& poly) {
      if (region < 0) {
        r.value += area * poly.area_fraction() * lower;
      } else if (region > 0) {
        r.value += area * poly.area_fraction() * upper;
      } else {
        for_each_point(poly, kDegree2Rule, [&](const Bary& b, double w) {
          r.value += area * w * linear_at(f, b);
          r.inactive_area += area * w;
        });
      }
    });
  }
  return r;
}

}  // namespace detail

/// The constant m with int_{Gamma^h} clamp(v + m, lower, upper) = 0: bisection
/// on [lower - max v, upper - min v], then Illinois-type secant steps.
inline double compute_m(const SurfaceMesh& mesh, const Vector& v, double lower, double upper) {
  const double area = mesh_area(mesh);
  const double goal = 1e-11 * area;
  double lo = lower - v.maxCoeff();
  double hi = upper - v.minCoeff();
  double f_lo = detail::clamp_integral(mesh, v, lo, lower, upper).value;
  double f_hi = detail::clamp_integral(mesh, v, hi, lower, upper).value;
  if (!(f_lo < 0.0 && f_hi > 0.0))
    throw NoValidM("compute_m: the clamp integral does not change sign over the bracket");

  const double width0 = hi - lo;
  while (hi - lo > 1e-3 * width0) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = detail::clamp_integral(mesh, v, mid, lower, upper).value;
    if (std::abs(f_mid) <= goal) return mid;
    (f_mid < 0.0 ? lo : hi) = mid;
    (f_mid < 0.0 ? f_lo : f_hi) = f_mid;
  }
  int last_side = 0;
  double best = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
  double best_f = std::min(std::abs(f_lo), std::abs(f_hi));
  for (int it = 0; it < 200; ++it) {
    double x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const double fx = detail::clamp_integral(mesh, v, x, lower, upper).value;
    if (std::abs(fx) < best_f) {
      best_f = std::abs(fx);
      best = x;
    }
    if (best_f <= goal) return best;
    if (fx < 0.0) {
      lo = x;
      f_lo = fx;
      if (last_side == -1) f_hi *= 0.5;
      last_side = -1;
    } else {
      hi = x;
      f_hi = fx;
      if (last_side == +1) f_lo *= 0.5;
      last_side = +1;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x))) break;
  }
  // Bracket collapsed to rounding level; the remaining residual is roundoff.
  return best;
}

/// L2(Gamma^h) projection of v onto the admissible set.
inline ClampedControl project_admissible(const ProblemSpec& spec, const SurfaceMesh& mesh, const Vector& v) {
  ClampedControl u{v, 0.0, spec.lower, spec.upper};
  if (spec.mean_zero) u.m = compute_m(mesh, v, spec.lower, spec.upper);
  return u;
}

// ---------------------------------------------------------------------------
// Discrete problem and semi-smooth Newton method
// ---------------------------------------------------------------------------

/// Matrices, data loads and the solution operator for one mesh. The mesh must
/// outlive the problem.
class DiscreteProblem {
 public:
  /// Quadrature subdivision used for the shift r, which has kinks where the
  /// clamp saturates.
  static constexpr int kShiftSubdivisions = 2;

  DiscreteProblem(ProblemSpec spec, const SurfaceMesh& mesh, double state_tol = 1e-10)
      : spec_((spec.validate(), std::move(spec))),
        mesh_(&mesh),
        stiffness_(assemble_stiffness(mesh)),
        mass_(assemble_mass(mesh)),
        solver_(mesh, stiffness_, mass_, spec_.c, spec_.state_boundary(), state_tol) {
    target_load_ = load_vector(mesh, spec_.surface, spec_.target);
    shift_load_ = spec_.shift ? load_vector(mesh, spec_.surface, spec_.shift, kShiftSubdivisions)
                              : Vector(Vector::Zero(mesh.num_vertices()));
    area_ = mass_.sum();
  }

  const ProblemSpec& spec() const { return spec_; }
  const SurfaceMesh& mesh() const { return *mesh_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const SparseMatrix& mass() const { return mass_; }
  const StateSolver& solver() const { return solver_; }
  const Vector& target_load() const { return target_load_; }
  const Vector& shift_load() const { return shift_load_; }
  double area() const { return area_; }
  int size() const { return mesh_->num_vertices(); }

  /// y_h = S_h(u - r_l) for a control given by its load vector.
  Vector state_from_load(const Vector& control_load) const { return solver_.solve_load(control_load - shift_load_); }

  /// p_h = S_h(y_h - z_l).
  Vector adjoint_from_state(const Vector& y) const { return solver_.solve_load(mass_ * y - target_load_); }

 private:
  ProblemSpec spec_;
  const SurfaceMesh* mesh_;
  SparseMatrix stiffness_;
  SparseMatrix mass_;
  StateSolver solver_;
  Vector target_load_;
  Vector shift_load_;
  double area_ = 0.0;
};

struct StateAdjoint {
  Vector state;
  Vector adjoint;
};

/// p_h(u) = S_h(S_h(u - r) - z_l); S_h is self-adjoint on L2(Gamma^h).
inline StateAdjoint adjoint_state(const DiscreteProblem& problem, const PiecewiseControl& u) {
  StateAdjoint sa;
  sa.state = problem.state_from_load(load_vector(problem.mesh(), u));
  sa.adjoint = problem.adjoint_from_state(sa.state);
  return sa;
}

inline StateAdjoint adjoint_state(const DiscreteProblem& problem, const ClampedControl& u) {
  return adjoint_state(problem, PiecewiseControl::from(u));
}

/// P(-p/alpha) for the adjoint p.
inline ClampedControl projected_adjoint(const DiscreteProblem& problem, const Vector& adjoint) {
  return project_admissible(problem.spec(), problem.mesh(), (-adjoint / problem.spec().alpha).eval());
}

struct Residual {
  double norm;  // ||u - P(-p_h(u)/alpha)||_{L2(Gamma^h)}
  StateAdjoint state_adjoint;
  ClampedControl projection;
};

inline Residual residual(const DiscreteProblem& problem, const PiecewiseControl& u) {
  Residual r;
  r.state_adjoint = adjoint_state(problem, u);
  r.projection = projected_adjoint(problem, r.state_adjoint.adjoint);
  r.norm = l2_distance(problem.mesh(), u, PiecewiseControl::from(r.projection));
  return r;
}

inline Residual residual(const DiscreteProblem& problem, const ClampedControl& u) {
  return residual(problem, PiecewiseControl::from(u));
}

/// Inactive-region mass matrix B_ij = int_I phi_i phi_j and the load of the
/// active part, int (lower 1_{A-} + upper 1_{A+}) phi_i.
struct InactiveSystem {
  SparseMatrix inactive_mass;
  Vector active_load;
  double inactive_area = 0.0;
  double active_integral = 0.0;
};

inline InactiveSystem assemble_inactive_system(const SurfaceMesh& mesh, const ClampedControl& partition) {
  InactiveSystem s;
  s.active_load = Vector::Zero(mesh.num_vertices());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = triangle_area(mesh.corners(t));
    const Triangle& tri = mesh.triangles[t];
    for_each_region(Polygon::reference_triangle(), detail::local_values(partition.base, tri, partition.m),
                    partition.lower, partition.upper, [&](int region, const Polygon& poly) {
                      if (region == 0) {
                        double local[3][3] = {};
                        for_each_point(poly, kDegree2Rule, [&](const Bary& b, double w) {
                          for (int i = 0; i < 3; ++i)
                            for (int j = 0; j < 3; ++j) local[i][j] += area * w * b[i] * b[j];
                          s.inactive_area += area * w;
                        });
                        for (int i = 0; i < 3; ++i)
                          for (int j = 0; j < 3; ++j) triplets.emplace_back(tri[i], tri[j], local[i][j]);
                        return;
                      }
                      const double value = region < 0 ? partition.lower : partition.upper;
                      for_each_point(poly, kDegree2Rule, [&](const Bary& b, double w) {
                        for (int k = 0; k < 3; ++k) s.active_load[tri[k]] += area * w * value * b[k];
                        s.active_integral += area * w * value;
                      });
                    });
  }
  s.inactive_mass = detail::from_triplets(mesh.num_vertices(), triplets);
  return s;
}

struct NewtonStep {
  PiecewiseControl next;
  int cg_iterations = 0;
  bool empty_inactive_set = false;
};

struct NewtonOptions {
  double tol = 1e-6;
  int max_newton = 50;
  double inner_tol = 1e-8;
  double inner_abs_factor = 1e-2;  // inner CG also stops at this fraction of tol
  int max_inner = 5000;
  bool record_iterates = false;
};

/// One semi-smooth Newton step from u, given its adjoint p = p_h(u).
///
/// With v = -p/alpha, the inactive set I and active values c_A of
/// P(v) = clamp(v + m):
///  1. u+ = c_A on the active set;
///  2. on I, u+ = w solves (I + chi S_h S_h / alpha) chi w = chi(S_h z - S_h S_h((1-chi) u+ - r)) / alpha,
///     by CG in the L2(I) inner product over w in V_h restricted to the vertices
///     whose support meets I. With a zero-mean constraint the solve is
///     restricted further to int_I w = -int_A c_A, which is the
///     linearization of the implicit shift m(v) (a rank-one correction);
///  3. u+ = chi w + (1 - chi) c_A.
inline NewtonStep newton_step(const DiscreteProblem& problem, const Vector& adjoint,
                              const NewtonOptions& options = {}) {
  const ProblemSpec& spec = problem.spec();
  const SurfaceMesh& mesh = problem.mesh();
  const StateSolver& solver = problem.solver();
  const double alpha = spec.alpha;
  const Vector v = -adjoint / alpha;
  const ClampedControl projection = project_admissible(spec, mesh, v);

  NewtonStep step;
  const InactiveSystem sys = assemble_inactive_system(mesh, projection);
  const SparseMatrix& b = sys.inactive_mass;
  const Vector diag = b.diagonal();
  const double diag_max = diag.size() ? diag.maxCoeff() : 0.0;

  std::vector<int> free;  // vertices whose support meets the inactive set
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    if (diag[i] > 1e-12 * diag_max) free.push_back(static_cast<int>(i));
  if (free.empty() || !(sys.inactive_area > 0.0)) {
    step.next = PiecewiseControl::from(projection);
    step.empty_inactive_set = true;
    return step;
  }

  const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
  auto extend = [&](const Vector& wf) {
    Vector w = Vector::Zero(problem.size());
    for (Eigen::Index k = 0; k < nf; ++k) w[free[k]] = wf[k];
    return w;
  };
  auto restrict_to_free = [&](const Vector& w) {
    Vector wf(nf);
    for (Eigen::Index k = 0; k < nf; ++k) wf[k] = w[free[k]];
    return wf;
  };

  // S_h(S_h(B w))  with  S_h applied to load vectors
  auto reduced_hessian = [&](const Vector& wf, Vector& out) {
    const Vector bw = b * extend(wf);
    const Vector y = solver.solve_load(bw);
    const Vector p = solver.solve_load(problem.mass() * y);
    out = restrict_to_free(bw + (b * p) / alpha);
  };

  Vector inv_diag = restrict_to_free(diag).cwiseInverse();
  CgOptions opt;
  opt.rel_tol = options.inner_tol;
  opt.abs_tol = options.inner_abs_factor * options.tol;
  opt.max_iter = options.max_inner;
  opt.inv_diagonal = &inv_diag;
  opt.verify_symmetry = false;

  Vector x0 = restrict_to_free(v);
  Vector ell;
  if (spec.mean_zero) {
    ell = restrict_to_free(b * Vector::Ones(problem.size()));
    const double target = -sys.active_integral;
    x0.array() += (target - ell.dot(x0)) / ell.sum();
    opt.constraint = &ell;
  }

  // Residual at x0 from one adjoint solve with the full control load, so that
  // large cancelling terms never enter separately; CG then solves for the
  // correction.
  const Vector w0 = extend(x0);
  const Vector bw0 = b * w0;
  const Vector y0 = solver.solve_load(sys.active_load + bw0 - problem.shift_load());
  const Vector p0 = solver.solve_load(problem.mass() * y0 - problem.target_load());
  const Vector r0 = restrict_to_free(-(bw0 + (b * p0) / alpha));

  const LinearOperator op{reduced_hessian, nf, true};
  const CgResult cg = cg_solve(op, r0, opt);

  step.cg_iterations = cg.iterations;
  step.next.switching = projection;
  step.next.interior = extend(x0 + cg.x);
  return step;
}

struct OptimalSolution {
  ClampedControl control;
  Vector state;
  Vector adjoint;
  int newton_iterations = 0;
  long inner_cg_iterations = 0;
  long pde_cg_iterations = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;    // G_h of each Newton iterate, starting with u0 = 0
  std::vector<PiecewiseControl> iterates;  // u0, u1, ... when recorded
};

/// Semi-smooth Newton from u0 = 0 until ||G_h(u_k)|| <= tol. The first step
/// linearizes at u0 itself (switching function 0, so the whole surface is
/// inactive and the step is the unconstrained minimizer); later steps use the
/// partition of -p_h(u_k)/alpha. Returns
/// P(-p_h(u_k)/alpha), which lies within tol of u_k in L2(Gamma^h), together
/// with the state and adjoint of u_k.
inline OptimalSolution solve_optimal(const DiscreteProblem& problem, const NewtonOptions& options = {}) {
  const ProblemSpec& spec = problem.spec();
  const long pde_before = problem.solver().total_iterations();
  OptimalSolution sol;
  PiecewiseControl u = PiecewiseControl::zero(problem.size(), spec.lower, spec.upper);
  if (options.record_iterates) sol.iterates.push_back(u);

  for (int k = 0;; ++k) {
    const Residual res = residual(problem, u);
    sol.residual_history.push_back(res.norm);
    if (res.norm <= options.tol) {
      sol.control = res.projection;
      sol.state = res.state_adjoint.state;
      sol.adjoint = res.state_adjoint.adjoint;
      sol.final_residual = res.norm;
      sol.newton_iterations = k;
      sol.pde_cg_iterations = problem.solver().total_iterations() - pde_before;
      return sol;
    }
    if (k >= options.max_newton)
      throw NoConvergence("solve_optimal: no convergence after " + std::to_string(k) + " Newton steps",
                          sol.residual_history);
    // u0 = 0 is paired with the switching function v0 = 0 (everything inactive).
    const NewtonStep step =
        newton_step(problem, k == 0 ? Vector(Vector::Zero(problem.size())) : res.state_adjoint.adjoint, options);
    sol.inner_cg_iterations += step.cg_iterations;
    u = step.next;
    if (options.record_iterates) sol.iterates.push_back(u);
  }
}

}  // namespace surfctrl

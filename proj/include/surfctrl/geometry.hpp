#pragma once

// Exact descriptions of the smooth surfaces: signed distance, closest-point
// projection a(x) = x - d(x) grad d(x), normals, curvature and the derivative
// of the projection (used for the area element of the lift).

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "errors.hpp"

namespace surfctrl {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class SurfaceKind { UnitSphere, Torus, Graph };

class AnalyticSurface {
 public:
  static constexpr double kTorusMajor = 1.0;
  static constexpr double kTorusMinor = 0.5;

  static AnalyticSurface unit_sphere() { return AnalyticSurface(SurfaceKind::UnitSphere); }
  static AnalyticSurface torus() { return AnalyticSurface(SurfaceKind::Torus); }
  /// x3 = x1 * x2 over the open unit square.
  static AnalyticSurface graph() { return AnalyticSurface(SurfaceKind::Graph); }

  SurfaceKind kind() const { return kind_; }
  bool has_boundary() const { return kind_ == SurfaceKind::Graph; }

  std::string_view name() const {
    switch (kind_) {
      case SurfaceKind::UnitSphere: return "sphere";
      case SurfaceKind::Torus: return "torus";
      case SurfaceKind::Graph: return "graph";
    }
    return "?";
  }

  /// Negative inside, positive outside; grad d equals the normal on the surface.
  double signed_distance(const Vec3& p) const {
    switch (kind_) {
      case SurfaceKind::UnitSphere: {
        const double r = p.norm();
        if (r < kAxisEps) throw OutsideTubularNeighborhood("sphere: projection undefined at the center");
        return r - 1.0;
      }
      case SurfaceKind::Torus: {
        const double rho = std::hypot(p.x(), p.y());
        if (rho < kAxisEps) throw OutsideTubularNeighborhood("torus: point on the symmetry axis");
        return std::hypot(rho - kTorusMajor, p.z()) - kTorusMinor;
      }
      case SurfaceKind::Graph: {
        const auto [s, t] = graph_closest_parameters(p);
        return (p - graph_point(s, t)).dot(graph_normal(s, t));
      }
    }
    return 0.0;
  }

  Vec3 project(const Vec3& p) const {
    switch (kind_) {
      case SurfaceKind::UnitSphere: {
        const double r = p.norm();
        if (r < kAxisEps) throw OutsideTubularNeighborhood("sphere: projection undefined at the center");
        return p / r;
      }
      case SurfaceKind::Torus: {
        const TorusFrame f = torus_frame(p);
        return f.center + kTorusMinor * f.radial;
      }
      case SurfaceKind::Graph: {
        const auto [s, t] = graph_closest_parameters(p);
        return graph_point(s, t);
      }
    }
    return p;
  }

  /// grad d(p) = nu(a(p)); for p on the surface this is the unit normal.
  Vec3 normal(const Vec3& p) const {
    switch (kind_) {
      case SurfaceKind::UnitSphere: {
        const double r = p.norm();
        if (r < kAxisEps) throw OutsideTubularNeighborhood("sphere: normal undefined at the center");
        return p / r;
      }
      case SurfaceKind::Torus: return torus_frame(p).radial;
      case SurfaceKind::Graph: {
        const auto [s, t] = graph_closest_parameters(p);
        return graph_normal(s, t);
      }
    }
    return Vec3::UnitZ();
  }

  /// Sum of principal curvatures H = div(nu) at a point of the surface.
  double mean_curvature(const Vec3& p) const {
    switch (kind_) {
      case SurfaceKind::UnitSphere: return 2.0;
      case SurfaceKind::Torus: {
        const double rho = std::hypot(p.x(), p.y());
        return 1.0 / kTorusMinor + (rho - kTorusMajor) / (kTorusMinor * rho);
      }
      case SurfaceKind::Graph: {
        const double q2 = 1.0 + p.x() * p.x() + p.y() * p.y();
        return 2.0 * p.x() * p.y() / (q2 * std::sqrt(q2));
      }
    }
    return 0.0;
  }

  /// Jacobian Da(x) of the closest-point projection at a point of the tubular neighborhood.
  Mat3 projection_derivative(const Vec3& x) const {
    switch (kind_) {
      case SurfaceKind::UnitSphere: {
        const double r = x.norm();
        if (r < kAxisEps) throw OutsideTubularNeighborhood("sphere: projection undefined at the center");
        const Vec3 n = x / r;
        return (Mat3::Identity() - n * n.transpose()) / r;
      }
      case SurfaceKind::Torus: {
        const TorusFrame f = torus_frame(x);
        const Vec3 c_hat = f.center.normalized();
        Mat3 p_xy = Mat3::Zero();
        p_xy(0, 0) = p_xy(1, 1) = 1.0;
        const Mat3 d_center = kTorusMajor * (p_xy - c_hat * c_hat.transpose()) / f.axis_distance;
        const Mat3 tangential = Mat3::Identity() - f.radial * f.radial.transpose();
        return d_center + (kTorusMinor / f.tube_distance) * tangential * (Mat3::Identity() - d_center);
      }
      case SurfaceKind::Graph: {
        // Implicit differentiation of the closest-point conditions X_s.(X-x) = X_t.(X-x) = 0.
        const auto [s, t] = graph_closest_parameters(x);
        const Vec3 e = graph_point(s, t) - x;
        Eigen::Matrix<double, 3, 2> jac;
        jac << 1.0, 0.0, 0.0, 1.0, t, s;
        Eigen::Matrix2d hess = jac.transpose() * jac;
        hess(0, 1) += e.z();  // X_st = (0,0,1), X_ss = X_tt = 0
        hess(1, 0) += e.z();
        return jac * hess.inverse() * jac.transpose();
      }
    }
    return Mat3::Identity();
  }

  /// Point on the smooth surface for the parametrization used to build macro meshes.
  /// Sphere: (polar, azimuth); torus: (toroidal, poloidal angle); graph: (x1, x2).
  Vec3 parametric_point(double s, double t) const {
    switch (kind_) {
      case SurfaceKind::UnitSphere:
        return {std::sin(s) * std::cos(t), std::sin(s) * std::sin(t), std::cos(s)};
      case SurfaceKind::Torus: {
        const double rho = kTorusMajor + kTorusMinor * std::cos(t);
        return {rho * std::cos(s), rho * std::sin(s), kTorusMinor * std::sin(t)};
      }
      case SurfaceKind::Graph: return graph_point(s, t);
    }
    return Vec3::Zero();
  }

 private:
  static constexpr double kAxisEps = 1e-12;

  explicit AnalyticSurface(SurfaceKind kind) : kind_(kind) {}

  struct TorusFrame {
    Vec3 center;          // closest point on the center circle
    Vec3 radial;          // unit vector from center to the query point
    double axis_distance; // distance from the x3 axis
    double tube_distance; // distance from the center circle
  };

  static TorusFrame torus_frame(const Vec3& p) {
    const double rho = std::hypot(p.x(), p.y());
    if (rho < kAxisEps) throw OutsideTubularNeighborhood("torus: point on the symmetry axis");
    const Vec3 center(kTorusMajor * p.x() / rho, kTorusMajor * p.y() / rho, 0.0);
    const Vec3 w = p - center;
    const double s = w.norm();
    if (s < kAxisEps) throw OutsideTubularNeighborhood("torus: point on the center circle");
    return {center, w / s, rho, s};
  }

  static Vec3 graph_point(double s, double t) { return {s, t, s * t}; }

  // Oriented with positive x3 component.
  static Vec3 graph_normal(double s, double t) {
    return Vec3(-t, -s, 1.0) / std::sqrt(1.0 + s * s + t * t);
  }

  // Gauss-Newton on min |X(s,t) - p|^2 / 2.
  static std::array<double, 2> graph_closest_parameters(const Vec3& p) {
    double s = p.x();
    double t = p.y();
    for (int it = 0; it < 50; ++it) {
      const Vec3 e = graph_point(s, t) - p;
      const double g0 = e.x() + t * e.z();
      const double g1 = e.y() + s * e.z();
      const double a00 = 1.0 + t * t;
      const double a11 = 1.0 + s * s;
      const double a01 = s * t;
      const double det = a00 * a11 - a01 * a01;
      const double ds = -(a11 * g0 - a01 * g1) / det;
      const double dt = -(a00 * g1 - a01 * g0) / det;
      s += ds;
      t += dt;
      if (s < -kGraphSlack || s > 1.0 + kGraphSlack || t < -kGraphSlack || t > 1.0 + kGraphSlack)
        throw OutsideTubularNeighborhood("graph: closest point leaves the patch");
      if (std::hypot(ds, dt) <= 1e-15 * (1.0 + std::abs(s) + std::abs(t))) return {s, t};
      if (it >= 8 && std::hypot(ds, dt) <= 1e-12) return {s, t};
    }
    throw OutsideTubularNeighborhood("graph: closest-point iteration did not converge");
  }

  static constexpr double kGraphSlack = 0.5;

  SurfaceKind kind_;
};

/// Area element dGamma/dGamma^h of the projection restricted to a flat triangle
/// with vertices on the surface, at the point with the given barycentric weights.
inline double jacobian_ratio(const AnalyticSurface& surface, const std::array<Vec3, 3>& triangle,
                             const std::array<double, 3>& barycentric) {
  const Vec3 e1 = triangle[1] - triangle[0];
  const Vec3 e2 = triangle[2] - triangle[0];
  const Vec3 n = e1.cross(e2);
  if (0.5 * n.norm() < 1e-14) throw DegenerateTriangle("jacobian_ratio: degenerate triangle");
  const Vec3 t1 = e1.normalized();
  const Vec3 t2 = n.normalized().cross(t1);
  const Vec3 x = barycentric[0] * triangle[0] + barycentric[1] * triangle[1] + barycentric[2] * triangle[2];
  const Mat3 da = surface.projection_derivative(x);
  return (da * t1).cross(da * t2).norm();
}

}  // namespace surfctrl

#pragma once

// Named smooth test functions g and their Laplace-Beltrami operator on the
// analytic surfaces.
//
// Each g is given in exterior coordinates together with its gradient and
// Hessian in R^3. For any smooth extension of g off the surface,
//
//   Lap_G g = tr(D^2 g) - nu^T (D^2 g) nu - H (nu . grad g),
//
// where H = div_G nu is the sum of the principal curvatures. This follows
// from Lap_G g = div_G(P grad g) with P = I - nu nu^T, expanding the
// divergence and using P nu = 0. The curvatures are closed forms:
//   sphere  H = 2
//   torus   H = 1/r + (rho - R)/(r rho),   rho = sqrt(x1^2 + x2^2)
//   graph   H = 2 x1 x2 / (1 + x1^2 + x2^2)^{3/2}   for x3 = x1 x2,
//           nu = (-x2, -x1, 1)/sqrt(1 + x1^2 + x2^2)
// The tests check these against finite differences of g(a(x)) and d(x).

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "geometry.hpp"

namespace surfctrl {

struct Profile {
  std::string_view name;
  double (*value)(const Vec3&);
  Vec3 (*gradient)(const Vec3&);
  Mat3 (*hessian)(const Vec3&);
};

namespace detail {

inline Mat3 sym(double xx, double yy, double zz, double xy, double xz, double yz) {
  Mat3 m;
  m << xx, xy, xz, xy, yy, yz, xz, yz, zz;
  return m;
}

// x3 (x1^2 - x2^2): degree-3 spherical harmonic
inline double harmonic3(const Vec3& p) { return p.z() * (p.x() * p.x() - p.y() * p.y()); }
inline Vec3 harmonic3_grad(const Vec3& p) {
  return {2.0 * p.x() * p.z(), -2.0 * p.y() * p.z(), p.x() * p.x() - p.y() * p.y()};
}
inline Mat3 harmonic3_hess(const Vec3& p) {
  return sym(2.0 * p.z(), -2.0 * p.z(), 0.0, 0.0, 2.0 * p.x(), -2.0 * p.y());
}

inline constexpr double kPi = std::numbers::pi;

inline constexpr std::array<Profile, 8> kProfiles{{
    {"zero", [](const Vec3&) { return 0.0; }, [](const Vec3&) -> Vec3 { return Vec3::Zero(); },
     [](const Vec3&) -> Mat3 { return Mat3::Zero(); }},
    {"one", [](const Vec3&) { return 1.0; }, [](const Vec3&) -> Vec3 { return Vec3::Zero(); },
     [](const Vec3&) -> Mat3 { return Mat3::Zero(); }},
    {"x3", [](const Vec3& p) { return p.z(); }, [](const Vec3&) -> Vec3 { return Vec3::UnitZ(); },
     [](const Vec3&) -> Mat3 { return Mat3::Zero(); }},
    {"x3_x1sq_minus_x2sq", harmonic3, harmonic3_grad, harmonic3_hess},
    {"sphere1", [](const Vec3& p) { return 4.0 * harmonic3(p); },
     [](const Vec3& p) -> Vec3 { return 4.0 * harmonic3_grad(p); },
     [](const Vec3& p) -> Mat3 { return 4.0 * harmonic3_hess(p); }},
    {"sphere2", [](const Vec3& p) { return 2.0 * p.z(); },
     [](const Vec3&) -> Vec3 { return 2.0 * Vec3::UnitZ(); }, [](const Vec3&) -> Mat3 { return Mat3::Zero(); }},
    {"graph", [](const Vec3& p) { return std::sin(kPi * p.x()) * std::sin(kPi * p.y()); },
     [](const Vec3& p) -> Vec3 {
       return {kPi * std::cos(kPi * p.x()) * std::sin(kPi * p.y()),
               kPi * std::sin(kPi * p.x()) * std::cos(kPi * p.y()), 0.0};
     },
     [](const Vec3& p) -> Mat3 {
       const double ss = std::sin(kPi * p.x()) * std::sin(kPi * p.y());
       const double cc = std::cos(kPi * p.x()) * std::cos(kPi * p.y());
       return sym(-kPi * kPi * ss, -kPi * kPi * ss, 0.0, kPi * kPi * cc, 0.0, 0.0);
     }},
    {"torus", [](const Vec3& p) { return 5.0 * p.x() * p.y() * p.z(); },
     [](const Vec3& p) -> Vec3 { return 5.0 * Vec3(p.y() * p.z(), p.x() * p.z(), p.x() * p.y()); },
     [](const Vec3& p) -> Mat3 { return 5.0 * sym(0.0, 0.0, 0.0, p.z(), p.y(), p.x()); }},
}};

}  // namespace detail

inline const Profile& find_profile(std::string_view name) {
  for (const Profile& f : detail::kProfiles)
    if (f.name == name) return f;
  throw UnknownFunction("unknown test function '" + std::string(name) + "'");
}

/// Lap_G g at a point p of the surface.
inline double laplace_beltrami_of(const AnalyticSurface& surface, const Profile& g, const Vec3& p) {
  const Vec3 nu = surface.normal(p);
  const Mat3 hess = g.hessian(p);
  return hess.trace() - nu.dot(hess * nu) - surface.mean_curvature(p) * nu.dot(g.gradient(p));
}

inline double laplace_beltrami_of(const AnalyticSurface& surface, std::string_view fn, const Vec3& p) {
  return laplace_beltrami_of(surface, find_profile(fn), p);
}

}  // namespace surfctrl

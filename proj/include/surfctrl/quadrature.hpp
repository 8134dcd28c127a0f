#pragma once

// Triangle quadrature in barycentric coordinates and convex polygon clipping
// against level lines of linear functions.

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>

#include <Eigen/Core>

namespace surfctrl {

using Bary = Eigen::Vector3d;

struct QuadPoint {
  std::array<double, 3> bary;
  double weight;  // weights sum to one; multiply by the area
};

/// Edge midpoints, exact for quadratics.
inline constexpr std::array<QuadPoint, 3> kDegree2Rule{{
    {{0.5, 0.5, 0.0}, 1.0 / 3.0},
    {{0.0, 0.5, 0.5}, 1.0 / 3.0},
    {{0.5, 0.0, 0.5}, 1.0 / 3.0},
}};

/// Symmetric 6-point rule, exact for polynomials of degree 4.
inline constexpr std::array<QuadPoint, 6> kDegree4Rule{{
    {{0.445948490915964886, 0.445948490915964886, 0.108103018168070227}, 0.223381589678011466},
    {{0.445948490915964886, 0.108103018168070227, 0.445948490915964886}, 0.223381589678011466},
    {{0.108103018168070227, 0.445948490915964886, 0.445948490915964886}, 0.223381589678011466},
    {{0.091576213509770743, 0.091576213509770743, 0.816847572980458513}, 0.109951743655321867},
    {{0.091576213509770743, 0.816847572980458513, 0.091576213509770743}, 0.109951743655321867},
    {{0.816847572980458513, 0.091576213509770743, 0.091576213509770743}, 0.109951743655321867},
}};

/// Convex polygon in barycentric coordinates of its host triangle.
struct Polygon {
  std::array<Bary, 8> pts;
  int size = 0;

  static Polygon reference_triangle() {
    Polygon p;
    p.pts[0] = Bary(1, 0, 0);
    p.pts[1] = Bary(0, 1, 0);
    p.pts[2] = Bary(0, 0, 1);
    p.size = 3;
    return p;
  }

  void push(const Bary& b) {
    assert(size < static_cast<int>(pts.size()));
    pts[size++] = b;
  }

  bool empty() const { return size < 3; }

  /// Area as a fraction of the host triangle.
  double area_fraction() const {
    double a = 0.0;
    for (int i = 1; i + 1 < size; ++i) a += sub_fraction(i);
    return a;
  }

  // Signed area fraction of the fan triangle (0, i, i+1).
  double sub_fraction(int i) const {
    Eigen::Matrix3d m;
    m << pts[0], pts[i], pts[i + 1];
    return std::abs(m.determinant());
  }
};

enum class Side { Below, Above };

/// Keeps the part where the linear function with vertex values f is < level
/// (Below) or > level (Above); with `closed` the level line itself is kept.
inline Polygon clip(const Polygon& poly, const std::array<double, 3>& f, double level, Side side, bool closed) {
  Polygon out;
  if (poly.empty()) return out;
  auto value = [&](const Bary& b) { return f[0] * b[0] + f[1] * b[1] + f[2] * b[2]; };
  auto inside = [&](double v) {
    if (side == Side::Below) return closed ? v <= level : v < level;
    return closed ? v >= level : v > level;
  };
  for (int i = 0; i < poly.size; ++i) {
    const Bary& p = poly.pts[i];
    const Bary& q = poly.pts[(i + 1) % poly.size];
    const double fp = value(p);
    const double fq = value(q);
    const bool in_p = inside(fp);
    const bool in_q = inside(fq);
    if (in_p) out.push(p);
    if (in_p != in_q) {
      const double t = (level - fp) / (fq - fp);
      out.push(p + t * (q - p));
    }
  }
  if (out.size < 3) out.size = 0;
  return out;
}

/// The three regions {f < lo}, {lo <= f <= hi}, {f > hi} of a polygon.
struct BoxRegions {
  Polygon lower;
  Polygon inactive;
  Polygon upper;
};

inline BoxRegions split_by_bounds(const Polygon& poly, const std::array<double, 3>& f, double lo, double hi) {
  BoxRegions r;
  r.lower = clip(poly, f, lo, Side::Below, false);
  r.upper = clip(poly, f, hi, Side::Above, false);
  r.inactive = clip(clip(poly, f, lo, Side::Above, true), f, hi, Side::Below, true);
  return r;
}

/// Calls cb(bary, weight) for the rule applied on a fan triangulation of the
/// polygon; the weights sum to the polygon's area fraction.
template <std::size_t N, class Callback>
void for_each_point(const Polygon& poly, const std::array<QuadPoint, N>& rule, Callback&& cb) {
  for (int i = 1; i + 1 < poly.size; ++i) {
    const double frac = poly.sub_fraction(i);
    if (frac == 0.0) continue;
    for (const QuadPoint& q : rule) {
      const Bary b = q.bary[0] * poly.pts[0] + q.bary[1] * poly.pts[i] + q.bary[2] * poly.pts[i + 1];
      cb(b, q.weight * frac);
    }
  }
}

/// Uniform subdivision of the reference triangle into 4^levels pieces.
template <class Callback>
void for_each_subtriangle(int levels, Callback&& cb) {
  const int n = 1 << levels;
  auto node = [n](int i, int j) { return Bary(1.0 - double(i + j) / n, double(i) / n, double(j) / n); };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i + j < n; ++i) {
      Polygon up;
      up.push(node(i, j));
      up.push(node(i + 1, j));
      up.push(node(i, j + 1));
      cb(up);
      if (i + j + 1 < n) {
        Polygon down;
        down.push(node(i + 1, j));
        down.push(node(i + 1, j + 1));
        down.push(node(i, j + 1));
        cb(down);
      }
    }
}

}  // namespace surfctrl

#pragma once

// Independent reference computations shared by the tests and the acceptance
// report.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <surfctrl/mesh.hpp>

namespace surfctrl::oracles {

// Least-squares slope of log e against log h.
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& e) {
  const double n = static_cast<double>(e.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < e.size(); ++i) mx += std::log(h[i]) / n, my += std::log(e[i]) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    sxy += (std::log(h[i]) - mx) * (std::log(e[i]) - my);
    sxx += (std::log(h[i]) - mx) * (std::log(h[i]) - mx);
  }
  return sxy / sxx;
}

// Gaussian elimination with partial pivoting.
inline Eigen::VectorXd dense_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const int n = static_cast<int>(a.rows());
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    a.row(k).swap(a.row(piv));
    std::swap(b[k], b[piv]);
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a.row(i) -= f * a.row(k);
      b[i] -= f * b[k];
    }
  }
  Eigen::VectorXd x(n);
  for (int i = n - 1; i >= 0; --i) x[i] = (b[i] - a.row(i).tail(n - i - 1).dot(x.tail(n - i - 1))) / a(i, i);
  return x;
}

// Gauss-Legendre on [0, 1], exact for degree 7.
inline constexpr std::array<double, 4> kGaussNodes{0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                                            0.9305681557970263};
inline constexpr std::array<double, 4> kGaussWeights{0.1739274225687269, 0.3260725774312731, 0.3260725774312731,
                                              0.1739274225687269};

struct Breaks {
  std::vector<double> pts;
  void add(double x, double lo, double hi) {
    if (std::isfinite(x) && x > lo && x < hi) pts.push_back(x);
  }
  std::vector<double> sorted(double lo, double hi) {
    pts.push_back(lo);
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    return pts;
  }
};

// Integral over the reference triangle {s, t >= 0, s + t <= 1} of g(s, t, u)
// where u is the piecewise control with switching values f and interior
// values w. Collapsed tensor Gauss rule split at every kink of u, so each
// piece integrates a polynomial of degree <= 7 exactly.
template <class G>
double clamp_oracle(const std::array<double, 3>& f, const std::array<double, 3>& w, double lo, double hi, G&& g) {
  auto lin = [](const std::array<double, 3>& v, double s, double t) {
    return v[0] + (v[1] - v[0]) * s + (v[2] - v[0]) * t;
  };
  auto u = [&](double s, double t) {
    const double sw = lin(f, s, t);
    if (sw < lo) return lo;
    if (sw > hi) return hi;
    return lin(w, s, t);
  };
  Breaks outer;
  for (double level : {lo, hi}) {
    outer.add((level - f[0]) / (f[1] - f[0]), 0.0, 1.0);
    outer.add((level - f[2]) / (f[1] - f[2]), 0.0, 1.0);
  }
  const auto sb = outer.sorted(0.0, 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < sb.size(); ++i) {
    const double s0 = sb[i], s1 = sb[i + 1];
    for (int a = 0; a < 4; ++a) {
      const double s = s0 + (s1 - s0) * kGaussNodes[a];
      const double tmax = 1.0 - s;
      Breaks inner;
      for (double level : {lo, hi}) inner.add((level - f[0] - (f[1] - f[0]) * s) / (f[2] - f[0]), 0.0, tmax);
      const auto tb = inner.sorted(0.0, tmax);
      double line = 0.0;
      for (std::size_t j = 0; j + 1 < tb.size(); ++j)
        for (int b = 0; b < 4; ++b) {
          const double t = tb[j] + (tb[j + 1] - tb[j]) * kGaussNodes[b];
          line += (tb[j + 1] - tb[j]) * kGaussWeights[b] * g(s, t, u(s, t));
        }
      total += (s1 - s0) * kGaussWeights[a] * line;
    }
  }
  return total;
}

// int_0^w clamp(t, a, b) dt for a < 0 < b.
inline double clamp_antiderivative(double w, double a, double b) {
  if (w < a) return a * w - 0.5 * a * a;
  if (w > b) return b * w - 0.5 * b * b;
  return 0.5 * w * w;
}

// m with int_S clamp(k x3 + m, a, b) = 0 on the unit sphere, using that the
// zone {z1 < x3 < z2} has area 2 pi (z2 - z1).
inline double sphere_m(double k, double a, double b) {
  auto f = [&](double m) { return clamp_antiderivative(m + k, a, b) - clamp_antiderivative(m - k, a, b); };
  double lo = a - k, hi = b + k;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Area of the part of the flat triangle p below the plane x3 = z.
inline double area_below(const std::array<Vec3, 3>& p, double z) {
  std::vector<Vec3> poly;
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = p[i];
    const Vec3& b = p[(i + 1) % 3];
    if (a.z() <= z) poly.push_back(a);
    if ((a.z() <= z) != (b.z() <= z)) poly.push_back(a + (z - a.z()) / (b.z() - a.z()) * (b - a));
  }
  double area = 0.0;
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) area += 0.5 * (poly[i] - poly[0]).cross(poly[i + 1] - poly[0]).norm();
  return area;
}

// Oracle for the discrete m of v = k x3 on Gamma^h. On each flat triangle the
// interpolant of k x3 equals k x3, so int clamp(k x3 + m) only depends on the
// area profile A(z) = |{x in Gamma^h : x3 <= z}|, which is piecewise quadratic
// between vertex heights and is integrated by Gauss rules on those pieces.
class ZoneOracle {
 public:
  ZoneOracle(const SurfaceMesh& mesh, double k, double a, double b) : mesh_(mesh), k_(k), a_(a), b_(b) {
    for (const Vec3& v : mesh.vertices) heights_.push_back(v.z());
    std::sort(heights_.begin(), heights_.end());
    heights_.erase(std::unique(heights_.begin(), heights_.end(), [](double x, double y) { return y - x < 1e-15; }),
                   heights_.end());
    for (int t = 0; t < mesh.num_triangles(); ++t) total_ += triangle_area(mesh.corners(t));
  }

  // int clamp(k x3 + m) = b A_tot - k int_{(a-m)/k}^{(b-m)/k} A(z) dz  (k > 0).
  double integral(double m) const {
    const double z0 = std::clamp((a_ - m) / k_, heights_.front(), heights_.back());
    const double z1 = std::clamp((b_ - m) / k_, heights_.front(), heights_.back());
    const double top = std::clamp(k_ * heights_.back() + m, a_, b_);
    return top * total_ - k_ * integral_of_profile(z0, z1);
  }

  double m() const {
    double lo = a_ - k_, hi = b_ + k_;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      (integral(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  double area_profile(double z) const {
    double a = 0.0;
    for (int t = 0; t < mesh_.num_triangles(); ++t) a += area_below(mesh_.corners(t), z);
    return a;
  }

  double integral_of_profile(double z0, double z1) const {
    static constexpr std::array<double, 3> x{0.1127016653792583, 0.5, 0.8872983346207417};
    static constexpr std::array<double, 3> w{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    std::vector<double> cuts{z0};
    for (double h : heights_)
      if (h > z0 && h < z1) cuts.push_back(h);
    cuts.push_back(z1);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      for (int q = 0; q < 3; ++q)
        sum += (cuts[i + 1] - cuts[i]) * w[q] * area_profile(cuts[i] + (cuts[i + 1] - cuts[i]) * x[q]);
    return sum;
  }

  const SurfaceMesh& mesh_;
  double k_, a_, b_;
  std::vector<double> heights_;
  double total_ = 0.0;
};

}  // namespace surfctrl::oracles

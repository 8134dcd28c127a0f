#pragma once

// The four benchmark problems and the generator of targets z from a chosen
// optimal control profile g.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "control.hpp"
#include "profiles.hpp"

namespace surfctrl {

enum class BenchmarkId { SphereI, GraphSquare, SphereII, Torus };

inline constexpr std::array<BenchmarkId, 4> kAllBenchmarks{BenchmarkId::SphereI, BenchmarkId::GraphSquare,
                                                            BenchmarkId::SphereII, BenchmarkId::Torus};

inline std::string_view benchmark_name(BenchmarkId id) {
  switch (id) {
    case BenchmarkId::SphereI: return "sphere1";
    case BenchmarkId::GraphSquare: return "graph";
    case BenchmarkId::SphereII: return "sphere2";
    case BenchmarkId::Torus: return "torus";
  }
  return "";
}

inline BenchmarkId parse_benchmark(std::string_view name) {
  for (BenchmarkId id : kAllBenchmarks)
    if (benchmark_name(id) == name) return id;
  throw InvalidConfig("unknown example '" + std::string(name) + "' (expected sphere1, graph, sphere2 or torus)");
}

inline double clamp_value(double v, double lower, double upper) { return std::min(upper, std::max(lower, v)); }

/// z = alpha (c g - Lap_G g). With r = clamp(g) the optimal state is zero and
/// the adjoint is -alpha g, so the optimal control is clamp(g) (m = 0 when g
/// is odd on a closed surface). Lap_G g integrates to zero on closed
/// surfaces, so the mean-zero variant needs no correction for c = 0.
inline SurfaceFunction generate_z(const AnalyticSurface& surface, const Profile& g, double alpha, double c) {
  return [surface, &g, alpha, c](const Vec3& p) {
    return alpha * (c * g.value(p) - laplace_beltrami_of(surface, g, p));
  };
}

inline SurfaceFunction clamped_profile(const Profile& g, double lower, double upper) {
  return [&g, lower, upper](const Vec3& p) { return clamp_value(g.value(p), lower, upper); };
}

namespace detail {

inline const double kSphereIIConstant = 0.5 - 0.25 * std::atanh(0.5) - std::log(1.5);

// Optimal state of the mean-zero sphere example: solves -Lap y = clamp(2 x3)
// band by band (ln(1 + x3) has Lap = -1, atanh(x3) is harmonic).
inline double sphere2_state(double x3) {
  if (x3 > 0.5) return std::log(x3 + 1.0) + kSphereIIConstant;
  if (x3 < -0.5) return -kSphereIIConstant - std::log(1.0 - x3);
  return x3 - 0.25 * std::atanh(x3);
}

}  // namespace detail

inline double sphere2_state_constant() { return detail::kSphereIIConstant; }

inline ProblemSpec build_example(BenchmarkId id) {
  ProblemSpec s;
  switch (id) {
    case BenchmarkId::SphereI: {
      const Profile& g = find_profile("sphere1");
      s.surface = AnalyticSurface::unit_sphere();
      s.c = 1.0;
      s.alpha = 1.5e-6;
      s.lower = -1.0;
      s.upper = 1.0;
      const double alpha = s.alpha;
      s.target = [alpha](const Vec3& p) { return 52.0 * alpha * p.z() * (p.x() * p.x() - p.y() * p.y()); };
      s.shift = clamped_profile(g, s.lower, s.upper);
      s.exact_control = s.shift;
      break;
    }
    case BenchmarkId::GraphSquare: {
      const Profile& g = find_profile("graph");
      s.surface = AnalyticSurface::graph();
      s.c = 0.0;
      s.dirichlet = true;
      s.alpha = 1e-3;
      s.lower = -0.5;
      s.upper = 0.5;
      s.target = generate_z(s.surface, g, s.alpha, s.c);
      s.shift = clamped_profile(g, s.lower, s.upper);
      s.exact_control = s.shift;
      break;
    }
    case BenchmarkId::SphereII: {
      s.surface = AnalyticSurface::unit_sphere();
      s.c = 0.0;
      s.mean_zero = true;
      s.alpha = 1e-3;
      s.lower = -1.0;
      s.upper = 1.0;
      const double alpha = s.alpha;
      s.target = [alpha](const Vec3& p) { return 4.0 * alpha * p.z() + detail::sphere2_state(p.z()); };
      s.exact_control = clamped_profile(find_profile("sphere2"), s.lower, s.upper);
      break;
    }
    case BenchmarkId::Torus: {
      const Profile& g = find_profile("torus");
      s.surface = AnalyticSurface::torus();
      s.c = 0.0;
      s.mean_zero = true;
      s.alpha = 1e-3;
      s.lower = -1.0;
      s.upper = 1.0;
      s.target = generate_z(s.surface, g, s.alpha, s.c);
      s.shift = clamped_profile(g, s.lower, s.upper);
      s.exact_control = s.shift;
      break;
    }
  }
  return s;
}

inline double exact_control(BenchmarkId id, const Vec3& p) { return build_example(id).exact_control(p); }

/// Reference values for levels 0..5.
struct ReferenceTable {
  std::array<double, 6> l2_error;
  std::array<double, 5> eoc;
  std::array<int, 6> newton_iters;
};

inline const ReferenceTable& reference_table(BenchmarkId id) {
  static const std::array<ReferenceTable, 4> tables{{
      {{5.8925e-01, 1.4299e-01, 3.5120e-02, 8.7123e-03, 2.2057e-03, 5.4855e-04},
       {2.0430, 2.0255, 2.0112, 1.9818, 2.0075},
       {6, 6, 6, 6, 6, 6}},
      {{3.5319e-01, 6.6120e-02, 1.5904e-02, 3.6357e-03, 8.8597e-04, 2.1769e-04},
       {2.4173, 2.0557, 2.1291, 2.0369, 2.0250},
       {11, 12, 12, 11, 13, 12}},
      {{6.7223e-01, 1.6646e-01, 4.3348e-02, 1.1083e-02, 2.7879e-03, 6.9832e-04},
       {2.0138, 1.9412, 1.9677, 1.9911, 1.9972},
       {8, 8, 7, 7, 6, 6}},
      {{3.4603e-01, 9.8016e-02, 2.6178e-02, 6.6283e-03, 1.6680e-03, 4.1889e-04},
       {1.8198, 1.9047, 1.9816, 1.9905, 1.9935},
       {9, 3, 3, 3, 2, 2}},
  }};
  return tables[static_cast<int>(id)];
}

/// Pass/fail bounds of a convergence study.
struct AcceptanceThresholds {
  double eoc_min;
  double eoc_max;
  int newton_max_level0;
  int newton_max_later;
  std::optional<int> newton_center;  // |iters - center| <= newton_spread
  int newton_spread = 0;
  bool newton_nonincreasing = false;
  bool mean_zero_check = false;
  double mean_tol = 1e-9;
  double error_factor = 2.5;
};

inline AcceptanceThresholds acceptance_thresholds(BenchmarkId id) {
  switch (id) {
    case BenchmarkId::SphereI: return {1.85, 2.15, 8, 8, 6, 2};
    case BenchmarkId::GraphSquare: return {1.85, 2.45, 15, 15};
    case BenchmarkId::SphereII: return {1.85, 2.15, 10, 10, std::nullopt, 0, true, true};
    case BenchmarkId::Torus: return {1.75, 2.15, 9, 5, std::nullopt, 0, false, true};
  }
  return {};
}

}  // namespace surfctrl

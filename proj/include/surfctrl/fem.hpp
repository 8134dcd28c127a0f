#pragma once

// Piecewise linear surface finite elements on Gamma^h.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "geometry.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"

namespace surfctrl {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// A function on the smooth surface given in exterior coordinates.
using SurfaceFunction = std::function<double(const Vec3&)>;

/// Element of V_h: one coefficient per vertex of `mesh`.
struct NodalFunction {
  const SurfaceMesh* mesh = nullptr;
  Vector values;

  double at(int tri, const Bary& b) const {
    const Triangle& t = mesh->triangles[tri];
    return b[0] * values[t[0]] + b[1] * values[t[1]] + b[2] * values[t[2]];
  }
};

inline Vec3 point_on_triangle(const std::array<Vec3, 3>& p, const Bary& b) {
  return b[0] * p[0] + b[1] * p[1] + b[2] * p[2];
}

namespace detail {

inline double checked_area(const std::array<Vec3, 3>& p) {
  const double area = triangle_area(p);
  if (area < 1e-14) throw DegenerateTriangle("assembly: triangle area below 1e-14");
  return area;
}

inline SparseMatrix from_triplets(int n, const std::vector<Eigen::Triplet<double>>& triplets) {
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  return a;
}

}  // namespace detail

/// K_ij = int grad phi_i . grad phi_j over Gamma^h, exact per flat triangle.
inline SparseMatrix assemble_stiffness(const SurfaceMesh& mesh) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto p = mesh.corners(t);
    const double area = detail::checked_area(p);
    // Edge opposite to vertex k; grad phi_k is its rotation scaled by 1/(2 area).
    const std::array<Vec3, 3> e{p[2] - p[1], p[0] - p[2], p[1] - p[0]};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        triplets.emplace_back(mesh.triangles[t][i], mesh.triangles[t][j], e[i].dot(e[j]) / (4.0 * area));
  }
  return detail::from_triplets(mesh.num_vertices(), triplets);
}

/// M_ij = int phi_i phi_j over Gamma^h, exact.
inline SparseMatrix assemble_mass(const SurfaceMesh& mesh) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = detail::checked_area(mesh.corners(t));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        triplets.emplace_back(mesh.triangles[t][i], mesh.triangles[t][j], area * (i == j ? 2.0 : 1.0) / 12.0);
  }
  return detail::from_triplets(mesh.num_vertices(), triplets);
}

inline double mesh_area(const SurfaceMesh& mesh) {
  double a = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) a += triangle_area(mesh.corners(t));
  return a;
}

/// Nodal interpolant; vertices lie on the surface so no projection is needed.
inline NodalFunction interpolate(const SurfaceMesh& mesh, const SurfaceFunction& f) {
  NodalFunction v{&mesh, Vector(mesh.num_vertices())};
  for (int i = 0; i < mesh.num_vertices(); ++i) v.values[i] = f(mesh.vertices[i]);
  return v;
}

/// b_i = int f_l phi_i over Gamma^h with f_l = f o a, by the degree-4 rule
/// applied on each triangle (or on its 4^subdivisions uniform pieces).
inline Vector load_vector(const SurfaceMesh& mesh, const AnalyticSurface& surface, const SurfaceFunction& f,
                          int subdivisions = 0) {
  Vector b = Vector::Zero(mesh.num_vertices());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto p = mesh.corners(t);
    const double area = triangle_area(p);
    std::array<double, 3> local{0.0, 0.0, 0.0};
    for_each_subtriangle(subdivisions, [&](const Polygon& piece) {
      for_each_point(piece, kDegree4Rule, [&](const Bary& bc, double w) {
        const double fv = f(surface.project(point_on_triangle(p, bc)));
        for (int k = 0; k < 3; ++k) local[k] += w * fv * bc[k];
      });
    });
    for (int k = 0; k < 3; ++k) b[mesh.triangles[t][k]] += area * local[k];
  }
  return b;
}

/// sqrt(v^T M v)
inline double l2_norm(const SparseMatrix& mass, const Vector& v) { return std::sqrt(v.dot(mass * v)); }

inline double l2_norm(const NodalFunction& v) { return l2_norm(assemble_mass(*v.mesh), v.values); }

/// || v - (u_exact)_l ||_{L2(Gamma^h)} by the degree-4 rule.
inline double l2_error_vs_exact(const AnalyticSurface& surface, const NodalFunction& v,
                                const SurfaceFunction& u_exact, int subdivisions = 0) {
  const SurfaceMesh& mesh = *v.mesh;
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto p = mesh.corners(t);
    const double area = triangle_area(p);
    double local = 0.0;
    for_each_subtriangle(subdivisions, [&](const Polygon& piece) {
      for_each_point(piece, kDegree4Rule, [&](const Bary& bc, double w) {
        const double diff = v.at(t, bc) - u_exact(surface.project(point_on_triangle(p, bc)));
        local += w * diff * diff;
      });
    });
    sum += area * local;
  }
  return std::sqrt(sum);
}

/// Boundary rows and columns removed; solution values there are pinned to zero.
struct DirichletSystem {
  SparseMatrix reduced;
  std::vector<int> free_to_full;
  std::vector<int> full_to_free;  // -1 on boundary vertices

  Vector restrict_vector(const Vector& full) const {
    Vector r(static_cast<Eigen::Index>(free_to_full.size()));
    for (std::size_t i = 0; i < free_to_full.size(); ++i) r[i] = full[free_to_full[i]];
    return r;
  }

  Vector extend(const Vector& reduced_vec) const {
    Vector full = Vector::Zero(static_cast<Eigen::Index>(full_to_free.size()));
    for (std::size_t i = 0; i < free_to_full.size(); ++i) full[free_to_full[i]] = reduced_vec[i];
    return full;
  }
};

inline DirichletSystem apply_dirichlet(const SparseMatrix& system, const std::vector<bool>& boundary) {
  DirichletSystem d;
  d.full_to_free.assign(boundary.size(), -1);
  for (std::size_t i = 0; i < boundary.size(); ++i)
    if (!boundary[i]) {
      d.full_to_free[i] = static_cast<int>(d.free_to_full.size());
      d.free_to_full.push_back(static_cast<int>(i));
    }
  if (d.free_to_full.size() == boundary.size()) throw NoBoundary("apply_dirichlet: mesh has no boundary vertices");

  std::vector<Eigen::Triplet<double>> triplets;
  for (int row = 0; row < system.outerSize(); ++row) {
    const int r = d.full_to_free[row];
    if (r < 0) continue;
    for (SparseMatrix::InnerIterator it(system, row); it; ++it) {
      const int c = d.full_to_free[it.col()];
      if (c >= 0) triplets.emplace_back(r, c, it.value());
    }
  }
  d.reduced = detail::from_triplets(static_cast<int>(d.free_to_full.size()), triplets);
  return d;
}

}  // namespace surfctrl

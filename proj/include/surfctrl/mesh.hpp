#pragma once

// Polyhedral approximations Gamma^h with vertices on the surface: macro
// triangulations and congruent (red) refinement with projected midpoints.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace surfctrl {

using Triangle = std::array<int, 3>;

struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;  // counterclockwise seen from the +nu side
  std::vector<bool> boundary;       // one flag per vertex
  int level = 0;
  double h = 0.0;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  std::array<Vec3, 3> corners(int t) const {
    const Triangle& tri = triangles[t];
    return {vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]};
  }
};

inline double triangle_area(const std::array<Vec3, 3>& p) {
  return 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
}

using Edge = std::pair<int, int>;

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// Edge -> number of incident triangles.
inline std::map<Edge, int> edge_incidence(const SurfaceMesh& mesh) {
  std::map<Edge, int> edges;
  for (const Triangle& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) ++edges[make_edge(t[k], t[(k + 1) % 3])];
  return edges;
}

inline double mesh_size(const SurfaceMesh& mesh) {
  double h = 0.0;
  for (const Triangle& t : mesh.triangles)
    for (int k = 0; k < 3; ++k)
      h = std::max(h, (mesh.vertices[t[k]] - mesh.vertices[t[(k + 1) % 3]]).norm());
  return h;
}

inline int euler_characteristic(const SurfaceMesh& mesh) {
  return mesh.num_vertices() - static_cast<int>(edge_incidence(mesh).size()) + mesh.num_triangles();
}

/// Smallest interior angle over all triangles, in radians.
inline double min_angle(const SurfaceMesh& mesh) {
  double best = std::numbers::pi;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto p = mesh.corners(t);
    for (int k = 0; k < 3; ++k) {
      const Vec3 u = p[(k + 1) % 3] - p[k];
      const Vec3 v = p[(k + 2) % 3] - p[k];
      best = std::min(best, std::atan2(u.cross(v).norm(), u.dot(v)));
    }
  }
  return best;
}

namespace detail {

inline void orient_outward(const AnalyticSurface& surface, SurfaceMesh& mesh) {
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto p = mesh.corners(t);
    const Vec3 centroid = (p[0] + p[1] + p[2]) / 3.0;
    const Vec3 n = (p[1] - p[0]).cross(p[2] - p[0]);
    if (n.dot(surface.normal(centroid)) < 0.0) std::swap(mesh.triangles[t][1], mesh.triangles[t][2]);
  }
}

inline void mark_boundary(SurfaceMesh& mesh) {
  mesh.boundary.assign(mesh.vertices.size(), false);
  for (const auto& [e, count] : edge_incidence(mesh))
    if (count == 1) mesh.boundary[e.first] = mesh.boundary[e.second] = true;
}

// Structured (nu x nv) grid of quads on a parameter rectangle, each split along
// the (i,j)-(i+1,j+1) diagonal. Periodic directions wrap around.
inline SurfaceMesh parametric_grid(const AnalyticSurface& surface, int nu, int nv, double u0, double u1,
                                   double v0, double v1, bool periodic) {
  SurfaceMesh mesh;
  const int cols = periodic ? nu : nu + 1;
  const int rows = periodic ? nv : nv + 1;
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i)
      mesh.vertices.push_back(surface.parametric_point(u0 + (u1 - u0) * i / nu, v0 + (v1 - v0) * j / nv));
  auto id = [&](int i, int j) { return (j % rows) * cols + (i % cols); };
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return mesh;
}

}  // namespace detail

/// Octahedron for the sphere, 8x4 parameter grid for the torus, 2x2 split
/// square for the graph.
inline SurfaceMesh macro_mesh(const AnalyticSurface& surface) {
  SurfaceMesh mesh;
  switch (surface.kind()) {
    case SurfaceKind::UnitSphere:
      mesh.vertices = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(-1, 0, 0), Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1)};
      mesh.triangles = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}, {1, 0, 5}, {2, 1, 5}, {3, 2, 5}, {0, 3, 5}};
      break;
    case SurfaceKind::Torus:
      mesh = detail::parametric_grid(surface, 8, 4, 0.0, 2.0 * std::numbers::pi, 0.0, 2.0 * std::numbers::pi, true);
      break;
    case SurfaceKind::Graph:
      mesh = detail::parametric_grid(surface, 2, 2, 0.0, 1.0, 0.0, 1.0, false);
      break;
  }
  detail::orient_outward(surface, mesh);
  detail::mark_boundary(mesh);
  mesh.level = 0;
  mesh.h = mesh_size(mesh);
  return mesh;
}

/// Red refinement. Children of triangle t are stored at 4t..4t+3; the first
/// three keep a parent corner, the fourth is the middle triangle.
inline SurfaceMesh refine(const SurfaceMesh& mesh, const AnalyticSurface& surface) {
  SurfaceMesh fine;
  fine.vertices = mesh.vertices;
  fine.boundary = mesh.boundary;
  fine.triangles.reserve(4 * mesh.triangles.size());

  const auto incidence = edge_incidence(mesh);
  std::map<Edge, int> midpoint;
  auto mid = [&](int a, int b) {
    const Edge e = make_edge(a, b);
    if (auto it = midpoint.find(e); it != midpoint.end()) return it->second;
    const int id = static_cast<int>(fine.vertices.size());
    fine.vertices.push_back(surface.project(0.5 * (mesh.vertices[a] + mesh.vertices[b])));
    fine.boundary.push_back(incidence.at(e) == 1);
    midpoint.emplace(e, id);
    return id;
  };

  for (const Triangle& t : mesh.triangles) {
    const int m01 = mid(t[0], t[1]);
    const int m12 = mid(t[1], t[2]);
    const int m20 = mid(t[2], t[0]);
    fine.triangles.push_back({t[0], m01, m20});
    fine.triangles.push_back({m01, t[1], m12});
    fine.triangles.push_back({m20, m12, t[2]});
    fine.triangles.push_back({m01, m12, m20});
  }
  fine.level = mesh.level + 1;
  fine.h = mesh_size(fine);
  return fine;
}

inline SurfaceMesh build_mesh(const AnalyticSurface& surface, int level) {
  SurfaceMesh mesh = macro_mesh(surface);
  for (int l = 0; l < level; ++l) mesh = refine(mesh, surface);
  return mesh;
}

}  // namespace surfctrl

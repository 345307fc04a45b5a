#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace stmc {

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Rect {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
};

// Structured conforming triangulation of an axis-aligned rectangle.  Each of
// the nx*ny cells is split along its lower-left -> upper-right diagonal, so
// the mesh is reproducible bit-for-bit.  Immutable after construction.
struct Mesh {
  Rect domain;
  int nx = 0, ny = 0;
  std::vector<double> vx, vy;                 // vertex coordinates
  std::vector<std::array<int, 3>> triangles;  // CCW vertex triples

  std::vector<int> interior_nodes;  // vertex ids, ascending
  std::vector<int> boundary_nodes;
  std::vector<int> interior_index;  // vertex id -> position in interior_nodes, or -1

  // control subdomain (populated by mark_subdomain)
  bool omega_marked = false;
  Rect omega;
  std::vector<int> omega_elements;  // triangle ids whose closure lies in closure(omega)
  std::vector<int> omega_nodes;     // interior vertex ids inside closure(omega), ascending
  std::vector<int> omega_index;     // vertex id -> position in omega_nodes, or -1

  double h = 0;  // maximal triangle diameter

  int n_vertices() const { return static_cast<int>(vx.size()); }
  int n_interior() const { return static_cast<int>(interior_nodes.size()); }
  int n_omega() const { return static_cast<int>(omega_nodes.size()); }
  double tri_area(int t) const;
};

Mesh build_structured_mesh(const Rect& domain, int nx, int ny);

// Marks omega (axis-aligned, corners on grid lines within 1e-12) and returns
// the mesh with omega_elements/omega_nodes populated.  Idempotent.
Mesh mark_subdomain(Mesh mesh, const Rect& omega);

// vertices.csv: id,x,y,boundary ; triangles.csv: id,v0,v1,v2
void export_mesh_csv(const Mesh& mesh, const std::string& vertices_path,
                     const std::string& triangles_path);

} // namespace stmc

#include "stmc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "stmc/csv.hpp"

namespace stmc {

namespace {
constexpr double kTol = 1e-12;

bool close(double a, double b) { return std::fabs(a - b) <= kTol; }
} // namespace

double Mesh::tri_area(int t) const {
  const auto& tri = triangles[t];
  double ax = vx[tri[0]], ay = vy[tri[0]];
  double bx = vx[tri[1]], by = vy[tri[1]];
  double cx = vx[tri[2]], cy = vy[tri[2]];
  return 0.5 * ((bx - ax) * (cy - ay) - (cx - ax) * (by - ay));
}

Mesh build_structured_mesh(const Rect& domain, int nx, int ny) {
  if (nx < 1 || ny < 1) throw MeshError("cell counts must be >= 1");
  if (domain.width() <= 0 || domain.height() <= 0)
    throw MeshError("domain extents must be positive");

  Mesh m;
  m.domain = domain;
  m.nx = nx;
  m.ny = ny;

  const int nvx = nx + 1, nvy = ny + 1;
  m.vx.resize(static_cast<std::size_t>(nvx) * nvy);
  m.vy.resize(m.vx.size());
  const double dx = domain.width() / nx, dy = domain.height() / ny;
  for (int iy = 0; iy < nvy; ++iy)
    for (int ix = 0; ix < nvx; ++ix) {
      int v = iy * nvx + ix;
      m.vx[v] = domain.x0 + ix * dx;
      m.vy[v] = domain.y0 + iy * dy;
    }

  m.triangles.reserve(static_cast<std::size_t>(2) * nx * ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      int a = iy * nvx + ix;        // lower-left
      int b = iy * nvx + ix + 1;    // lower-right
      int c = (iy + 1) * nvx + ix + 1;  // upper-right
      int d = (iy + 1) * nvx + ix;  // upper-left
      m.triangles.push_back({a, b, c});
      m.triangles.push_back({a, c, d});
    }

  m.interior_index.assign(m.vx.size(), -1);
  for (int v = 0; v < m.n_vertices(); ++v) {
    bool on_boundary = close(m.vx[v], domain.x0) || close(m.vx[v], domain.x1) ||
                       close(m.vy[v], domain.y0) || close(m.vy[v], domain.y1);
    if (on_boundary) {
      m.boundary_nodes.push_back(v);
    } else {
      m.interior_index[v] = static_cast<int>(m.interior_nodes.size());
      m.interior_nodes.push_back(v);
    }
  }

  m.h = std::sqrt(dx * dx + dy * dy);
  return m;
}

Mesh mark_subdomain(Mesh mesh, const Rect& omega) {
  if (omega.width() <= 0 || omega.height() <= 0)
    throw MeshError("omega extents must be positive");

  const double dx = mesh.domain.width() / mesh.nx;
  const double dy = mesh.domain.height() / mesh.ny;
  auto grid_index = [&](double coord, double origin, double step, const char* what) {
    double rel = (coord - origin) / step;
    double snapped = std::round(rel);
    if (std::fabs(rel - snapped) * step > kTol)
      throw MeshError(std::string("omega ") + what +
                      " is not aligned with a mesh line");
    return static_cast<int>(snapped);
  };
  int ix0 = grid_index(omega.x0, mesh.domain.x0, dx, "x0");
  int ix1 = grid_index(omega.x1, mesh.domain.x0, dx, "x1");
  int iy0 = grid_index(omega.y0, mesh.domain.y0, dy, "y0");
  int iy1 = grid_index(omega.y1, mesh.domain.y0, dy, "y1");
  if (ix0 < 0 || iy0 < 0 || ix1 > mesh.nx || iy1 > mesh.ny || ix0 >= ix1 || iy0 >= iy1)
    throw MeshError("omega must be a nonempty sub-rectangle of the domain");

  mesh.omega = omega;
  mesh.omega_elements.clear();
  mesh.omega_nodes.clear();
  mesh.omega_index.assign(mesh.vx.size(), -1);

  for (int iy = iy0; iy < iy1; ++iy)
    for (int ix = ix0; ix < ix1; ++ix) {
      int cell = iy * mesh.nx + ix;
      mesh.omega_elements.push_back(2 * cell);
      mesh.omega_elements.push_back(2 * cell + 1);
    }

  for (int v : mesh.interior_nodes) {
    if (mesh.vx[v] >= omega.x0 - kTol && mesh.vx[v] <= omega.x1 + kTol &&
        mesh.vy[v] >= omega.y0 - kTol && mesh.vy[v] <= omega.y1 + kTol) {
      mesh.omega_index[v] = static_cast<int>(mesh.omega_nodes.size());
      mesh.omega_nodes.push_back(v);
    }
  }

  mesh.omega_marked = true;
  return mesh;
}

void export_mesh_csv(const Mesh& mesh, const std::string& vertices_path,
                     const std::string& triangles_path) {
  {
    CsvWriter w(vertices_path);
    w.row("id", "x", "y", "boundary");
    for (int v = 0; v < mesh.n_vertices(); ++v)
      w.row(v, mesh.vx[v], mesh.vy[v], mesh.interior_index[v] < 0 ? 1 : 0);
  }
  {
    CsvWriter w(triangles_path);
    w.row("id", "v0", "v1", "v2");
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
      w.row(t, mesh.triangles[t][0], mesh.triangles[t][1], mesh.triangles[t][2]);
  }
}

} // namespace stmc

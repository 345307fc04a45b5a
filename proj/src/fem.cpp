#include "stmc/fem.hpp"

#include <numeric>

namespace stmc {

namespace {

// local mass pattern: (area/12) * (1 + delta_ij)
void add_local_mass(std::vector<Triplet>& out, const Mesh& mesh, int t,
                    const std::vector<int>& row_index, const std::vector<int>& col_index) {
  const auto& tri = mesh.triangles[t];
  const double a12 = mesh.tri_area(t) / 12.0;
  for (int i = 0; i < 3; ++i) {
    int r = row_index[tri[i]];
    if (r < 0) continue;
    for (int j = 0; j < 3; ++j) {
      int c = col_index[tri[j]];
      if (c < 0) continue;
      out.push_back({r, c, a12 * (i == j ? 2.0 : 1.0)});
    }
  }
}

} // namespace

std::vector<int> all_elements(const Mesh& mesh) {
  std::vector<int> e(mesh.triangles.size());
  std::iota(e.begin(), e.end(), 0);
  return e;
}

SparseMatrix assemble_mass(const Mesh& mesh, NodeSet nodes, IntegrationDomain domain) {
  if ((nodes == NodeSet::Omega || domain == IntegrationDomain::Omega) && !mesh.omega_marked)
    throw MeshError("omega has not been marked on this mesh");

  const std::vector<int>& index =
      nodes == NodeSet::Interior ? mesh.interior_index : mesh.omega_index;
  const int n = nodes == NodeSet::Interior ? mesh.n_interior() : mesh.n_omega();
  const std::vector<int> elems = domain == IntegrationDomain::Full
                                     ? all_elements(mesh)
                                     : mesh.omega_elements;
  std::vector<Triplet> t;
  for (int e : elems) add_local_mass(t, mesh, e, index, index);
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  std::vector<Triplet> t;
  for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
    const auto& tri = mesh.triangles[e];
    const double area = mesh.tri_area(static_cast<int>(e));
    // grad psi_i = (b_i, c_i) / (2 area), b_i = y_j - y_k, c_i = x_k - x_j
    double b[3], c[3];
    for (int i = 0; i < 3; ++i) {
      int j = tri[(i + 1) % 3], k = tri[(i + 2) % 3];
      b[i] = mesh.vy[j] - mesh.vy[k];
      c[i] = mesh.vx[k] - mesh.vx[j];
    }
    for (int i = 0; i < 3; ++i) {
      int r = mesh.interior_index[tri[i]];
      if (r < 0) continue;
      for (int j = 0; j < 3; ++j) {
        int col = mesh.interior_index[tri[j]];
        if (col < 0) continue;
        t.push_back({r, col, (b[i] * b[j] + c[i] * c[j]) / (4.0 * area)});
      }
    }
  }
  return SparseMatrix::from_triplets(mesh.n_interior(), mesh.n_interior(), std::move(t));
}

SparseMatrix assemble_omega_coupling(const Mesh& mesh) {
  if (!mesh.omega_marked) throw MeshError("omega has not been marked on this mesh");
  std::vector<Triplet> t;
  for (int e : mesh.omega_elements)
    add_local_mass(t, mesh, e, mesh.omega_index, mesh.interior_index);
  return SparseMatrix::from_triplets(mesh.n_omega(), mesh.n_interior(), std::move(t));
}

NodalField l2_project_dual(const Mesh& mesh, const SparseMatrix& mass, NodeSet set,
                           const std::vector<double>& rhs) {
  (void)mesh;
  NodalField out;
  out.set = set;
  out.v = solve_spd(mass, rhs);
  return out;
}

} // namespace stmc

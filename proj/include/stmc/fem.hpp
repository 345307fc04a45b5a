#pragma once

#include <vector>

#include "stmc/mesh.hpp"
#include "stmc/sparse.hpp"

namespace stmc {

enum class NodeSet { Interior, Omega };
enum class IntegrationDomain { Full, Omega };

struct NodalField {
  NodeSet set = NodeSet::Interior;
  std::vector<double> v;
};

// P1 mass matrix on the requested node set, integrated over the requested
// domain; entries from the exact local rule (area/12) * [[2,1,1],[1,2,1],[1,1,2]].
// Contributions touching nodes outside the set (boundary nodes, or non-omega
// nodes for the omega set) are dropped (Dirichlet elimination).
SparseMatrix assemble_mass(const Mesh& mesh, NodeSet nodes, IntegrationDomain domain);

// Stiffness on interior nodes from the constant-gradient P1 formula.
SparseMatrix assemble_stiffness(const Mesh& mesh);

// Coupling M_{omega,Omega}: rows omega-nodes, columns interior nodes, entries
// \int_omega psi_i psi_k (assembled over omega elements only, so supports are
// truncated at omega's boundary).
SparseMatrix assemble_omega_coupling(const Mesh& mesh);

// --- 3-point edge-midpoint quadrature (degree-2 exact) ----------------------

// \int_D f for D = the given element set.
template <class F>
double integrate(const Mesh& mesh, const std::vector<int>& elements, F&& f) {
  double total = 0.0;
  for (int t : elements) {
    const auto& tri = mesh.triangles[t];
    const double area = mesh.tri_area(t);
    double s = 0.0;
    for (int e = 0; e < 3; ++e) {
      int i = tri[e], j = tri[(e + 1) % 3];
      s += f(0.5 * (mesh.vx[i] + mesh.vx[j]), 0.5 * (mesh.vy[i] + mesh.vy[j]));
    }
    total += s * area / 3.0;
  }
  return total;
}

// Load vector entries \int f psi_i over the element set, indexed by the target
// node set.  psi_i at the two adjacent edge midpoints is 1/2 and 0 opposite.
template <class F>
std::vector<double> spatial_load(const Mesh& mesh, NodeSet target,
                                 const std::vector<int>& elements, F&& f) {
  const std::vector<int>& index =
      target == NodeSet::Interior ? mesh.interior_index : mesh.omega_index;
  std::vector<double> load(target == NodeSet::Interior
                               ? mesh.interior_nodes.size()
                               : mesh.omega_nodes.size(),
                           0.0);
  for (int t : elements) {
    const auto& tri = mesh.triangles[t];
    const double w = mesh.tri_area(t) / 3.0;
    double fm[3];
    for (int e = 0; e < 3; ++e) {
      int i = tri[e], j = tri[(e + 1) % 3];
      fm[e] = f(0.5 * (mesh.vx[i] + mesh.vx[j]), 0.5 * (mesh.vy[i] + mesh.vy[j]));
    }
    for (int v = 0; v < 3; ++v) {
      int row = index[tri[v]];
      if (row < 0) continue;
      // edges adjacent to vertex v are edge v (v,v+1) and edge v+2 (v+2,v)
      load[row] += w * 0.5 * (fm[v] + fm[(v + 2) % 3]);
    }
  }
  return load;
}

std::vector<int> all_elements(const Mesh& mesh);

// L2 projection pi_h: solves (pi_h v, phi) = rhs for all basis functions of
// the node set, with rhs either a precomputed dual vector or an analytic
// function integrated by the spatial rule.
NodalField l2_project_dual(const Mesh& mesh, const SparseMatrix& mass, NodeSet set,
                           const std::vector<double>& rhs);

template <class F>
NodalField l2_project(const Mesh& mesh, const SparseMatrix& mass, NodeSet set, F&& f) {
  const std::vector<int> elems =
      set == NodeSet::Omega ? mesh.omega_elements : all_elements(mesh);
  return l2_project_dual(mesh, mass, set, spatial_load(mesh, set, elems, f));
}

} // namespace stmc

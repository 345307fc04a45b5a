#pragma once

#include <vector>

#include "stmc/expression.hpp"
#include "stmc/fem.hpp"
#include "stmc/mesh.hpp"
#include "stmc/sparse.hpp"
#include "stmc/time_grid.hpp"

namespace stmc {

// Heat equation on a rectangle with homogeneous Dirichlet walls, tracked
// against u_d over time and (optionally, beta > 0) against u_T at the final
// time.  When has_control is set, a measure-in-time control with L2(omega)
// profiles acts through the window [window_a, window_b], penalized by alpha
// times its measure norm.
struct ProblemSpec {
  Rect domain{0.0, 0.0, 1.0, 1.0};
  int nx = 0, ny = 0;
  double T = 1.0;
  int M = 0;

  bool has_control = false;
  Rect omega{0.0, 0.0, 0.0, 0.0};
  double window_a = 0.0, window_b = 0.0;
  double alpha = 0.0;

  double beta = 0.0;
  Expression f, u0, u_d, u_T;
};

// All grid-level objects the sweeps need, assembled once: matrices, the
// stepping operators M +- (tau/2) K (deduplicated across intervals of equal
// length), their Cholesky factors, and the time-integrated data loads.  The
// factors make every step of a sweep a pair of banded substitutions, which is
// what keeps optimizer runs (hundreds of sweeps against fixed operators)
// affordable.
struct Discretization {
  ProblemSpec spec;
  Mesh mesh;
  TimeGrid grid;

  SparseMatrix mass;        // interior x interior
  SparseMatrix stiffness;   // interior x interior
  SparseMatrix omega_mass;  // omega x omega, control problems only
  SparseMatrix coupling;    // omega x interior, control problems only

  CholeskySolver mass_fac;
  CholeskySolver omega_mass_fac;  // control problems only

  std::vector<double> op_tau;
  std::vector<SparseMatrix> op_plus, op_minus;
  std::vector<CholeskySolver> op_plus_fac;  // parallel to op_plus
  std::vector<int> op_of_interval;          // size M+1, entry 0 unused
  const SparseMatrix& a_plus(int m) const { return op_plus[op_of_interval[m]]; }
  const SparseMatrix& a_minus(int m) const { return op_minus[op_of_interval[m]]; }
  const CholeskySolver& a_plus_fac(int m) const {
    return op_plus_fac[op_of_interval[m]];
  }

  std::vector<double> u0h;  // L2 projection of the initial data (always n() long)
  // F[m] = int f(t) e_{t_m}(t) dt load vectors, m = 0..M; empty when f == 0
  std::vector<std::vector<double>> F;
  // D[m] = int_{I_m} load(u_d(t)) dt, m = 1..M (D[0] unused); empty when u_d == 0
  std::vector<std::vector<double>> D;
  std::vector<double> bT;  // load vector of u_T; empty when u_T == 0
  double ud_sq_int = 0.0;  // ||u_d||^2_{L2(I;L2)} under the assembly quadrature
  double uT_sq_int = 0.0;  // ||u_T||^2_{L2}

  int n() const { return mesh.n_interior(); }
  int n_omega() const { return mesh.n_omega(); }
};

Discretization discretize(const ProblemSpec& spec);

// Copy with all data contributions (f, u_0, u_d, u_T) removed: sweeps on the
// result solve the homogeneous equations, which is what the control-to-state
// map S and its adjoint act through.
Discretization strip_data(const Discretization& d);

} // namespace stmc

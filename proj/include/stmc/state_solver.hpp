#pragma once

#include <vector>

#include "stmc/problem.hpp"
#include "stmc/time_grid.hpp"

namespace stmc {

// Piecewise-constant-in-time state: one interior nodal field per interval
// plus a separate terminal field (the scheme's extra degree of freedom at T).
struct DiscreteState {
  std::vector<std::vector<double>> u;  // u[m-1] is the value on I_m
  std::vector<double> terminal;        // u_{M+1} = u(T)

  int intervals() const { return static_cast<int>(u.size()); }
  const std::vector<double>& on_interval(int m) const { return u[m - 1]; }
  std::vector<double>& on_interval(int m) { return u[m - 1]; }
};

// Sequential sweep:
//   (i)   (M + tau_1/2 K) u_1     = M u_{0h} + F_0
//   (ii)  (M + tau_{m+1}/2 K) u_{m+1} = (M - tau_m/2 K) u_m + F_m + C^T q_m
//   (iii)  M u_{M+1}             = (M - tau_M/2 K) u_M + F_M
// Every step reuses the Cholesky factors held by the discretization.  q may
// be null (no control).
void solve_state(const Discretization& d, const DiscreteControl* q, DiscreteState& out);
DiscreteState solve_state(const Discretization& d, const DiscreteControl& q);
DiscreteState solve_state(const Discretization& d);

// A(u, v) through the dual representation
//   sum_m ([u]_m, v(t_m)) + (u_1, v(0)) + int_I (grad u, grad v) dt
// with v continuous piecewise linear given by nodal fields v[0..M]; the time
// integral is a trapezoid per interval, which is exact here.
double bilinear_form_A(const Discretization& d, const DiscreteState& u,
                       const std::vector<std::vector<double>>& v);

// right-hand side of the discrete state identity at the same test function:
// (u_{0h}, v(0))_{L2} + int_I (f, v) dt + sum_{control m} (q_m, v(t_m))_{L2(omega)}
double state_rhs_functional(const Discretization& d, const DiscreteControl* q,
                            const std::vector<std::vector<double>>& v);

// Largest relative residual of the variational identity over the full test
// basis (every hat time node x every interior spatial node).  Evaluates the
// dual form directly; independent of the sweep's algebra.
double max_scheme_residual(const Discretization& d, const DiscreteControl* q,
                           const DiscreteState& u);

} // namespace stmc

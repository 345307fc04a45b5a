#pragma once

#include <vector>

#include "stmc/problem.hpp"
#include "stmc/state_solver.hpp"

namespace stmc {

// Continuous piecewise-linear-in-time adjoint, one nodal field per time node.
struct DiscreteAdjoint {
  std::vector<std::vector<double>> phi;  // phi[m], m = 0..M

  int nodes() const { return static_cast<int>(phi.size()); }
};

// Generic backward sweep with manufactured data:
//   Mass phi_M = terminal_rhs
//   (Mass + tau_m/2 Stiff) phi_{m-1} = (Mass - tau_m/2 Stiff) phi_m + G[m]
// G has M+1 entries, G[0] unused.
void solve_backward(const Discretization& d, const std::vector<std::vector<double>>& G,
                    const std::vector<double>& terminal_rhs, DiscreteAdjoint& out);

// Adjoint of the tracking cost at the given state:
//   terminal_rhs = beta (Mass u_{M+1} - b_T),  G[m] = tau_m Mass u_m - D_m.
void solve_adjoint(const Discretization& d, const DiscreteState& s, DiscreteAdjoint& out);
DiscreteAdjoint solve_adjoint(const Discretization& d, const DiscreteState& s);

// Riesz representatives of the adjoint on the control nodes:
// g_m = (omega-Mass)^{-1} C phi_m, so (p, g_m)_{L2(omega)} = p^T C phi_m.
std::vector<std::vector<double>> control_gradient(const Discretization& d,
                                                  const DiscreteAdjoint& adj);

// Largest relative residual of the adjoint variational identity over the test
// basis of the trial space (interval indicators plus the terminal slot).
double max_adjoint_residual(const Discretization& d, const DiscreteState& s,
                            const DiscreteAdjoint& adj);

} // namespace stmc

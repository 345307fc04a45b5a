#pragma once

#include <vector>

#include "stmc/adjoint_solver.hpp"
#include "stmc/expression.hpp"
#include "stmc/problem.hpp"
#include "stmc/state_solver.hpp"
#include "stmc/time_grid.hpp"

namespace stmc {

// ---- manufactured-solution metrics -----------------------------------------

struct MmsStateErrors {
  double l2l2 = 0.0;      // ||u_sigma - u_ex||_{L2(I;L2)}, 4-point Gauss in time
  double terminal = 0.0;  // ||u_sigma(T) - u_ex(T)||_{L2}
  double midpoint = 0.0;  // interval-midpoint sampling of the nodal error
};

MmsStateErrors mms_state_errors(const Discretization& d, const DiscreteState& s,
                                const Expression& u_ex);

// interval loads G[m] = int_{I_m} load(g(t)) dt for the backward sweep
std::vector<std::vector<double>> backward_interval_loads(const Discretization& d,
                                                         const Expression& g);

// sup over time nodes of ||z_m - z_ex(t_m)||_{L2}
double adjoint_sup_error(const Discretization& d, const DiscreteAdjoint& z,
                         const Expression& z_ex);

// ---- nested-grid transfer ---------------------------------------------------

// Coefficients of the same P1 function on a nested refinement (fine counts
// are multiples of the coarse ones, same domain and diagonal direction, so
// the coarse space is a subspace and the transfer is exact).
std::vector<double> embed_p1(const Mesh& coarse, const Mesh& fine,
                             const std::vector<double>& coarse_interior);

// ||u_coarse - u_ref||^2_{L2(I;L2)} and the squared terminal gap, evaluated
// on the reference discretization (exact for nested grids: coarse intervals
// are unions of fine ones).
struct StateDistance {
  double l2l2_sq = 0.0;
  double terminal_sq = 0.0;
};

StateDistance state_error_on_reference(const Discretization& ref,
                                       const DiscreteState& s_ref, const Mesh& coarse,
                                       const TimeGrid& coarse_grid,
                                       const DiscreteState& s_coarse);

// ---- scalar observables -----------------------------------------------------

// <q, v> = sum_m (q_m, v(., t_m))_{L2(omega)} for an analytic test function
double control_pairing(const Discretization& d, const DiscreteControl& q,
                       const Expression& v);

double grad_l2l2_norm(const Discretization& d, const DiscreteState& s);
double terminal_l2_norm(const Discretization& d, const DiscreteState& s);

// ---- rate fitting -----------------------------------------------------------

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;  // points actually used (positive x and error)
};

// least squares on (log x, log err); rows with nonpositive entries are skipped
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& err);

} // namespace stmc

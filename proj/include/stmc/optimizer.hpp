#pragma once

#include <utility>
#include <vector>

#include "stmc/adjoint_solver.hpp"
#include "stmc/problem.hpp"
#include "stmc/state_solver.hpp"

namespace stmc {

// ||v||_{L2(omega)} = sqrt(v^T (omega-Mass) v)
double omega_norm(const SparseMatrix& omega_mass, const std::vector<double>& v);

// measure norm of the control: sum of the group L2(omega) norms
double m_norm(const Discretization& d, const DiscreteControl& q);

struct ObjectiveParts {
  double total = 0.0, smooth = 0.0, sparse = 0.0;
};

// tracking + terminal cost of an already-solved state (no alpha term)
double smooth_objective(const Discretization& d, const DiscreteState& s);
// full objective at q: solves the state, adds alpha * m_norm(q)
ObjectiveParts objective(const Discretization& d, const DiscreteControl& q);

// block soft-thresholding in the omega-mass norm:
// (1 - threshold/||v||)_+ v, the zero vector when ||v|| <= threshold
std::vector<double> prox_group(const SparseMatrix& omega_mass,
                               const std::vector<double>& v, double threshold);

// gradient of the smooth cost part in L2(omega) representation, one group per
// control node: state sweep, adjoint sweep, Riesz solves
std::vector<std::vector<double>> smooth_gradient(const Discretization& d,
                                                 const DiscreteControl& q);

// same map with all data stripped (the self-adjoint positive operator S*S)
std::vector<std::vector<double>> homogeneous_gradient(const Discretization& d,
                                                      const DiscreteControl& q);

// Largest eigenvalue of S*S on the control space by power iteration (50 steps
// or relative change < 1e-6, fixed seed), returned with a 1% safety margin.
// A zero operator gets a tiny positive floor; *floored reports that case.
double estimate_lipschitz(const Discretization& d, bool* floored = nullptr);

// max_m ||g_m|| at q = 0: exactly the penalty level above which q = 0 is optimal
double alpha_zero_bound(const Discretization& d);

struct Certificate {
  double r_bound = 0.0;  // max(0, max_m ||g_m|| - alpha)
  double r_align = 0.0;  // worst active-group misalignment of q_m with -g_m
  double gap = 0.0;      // |alpha * m_norm(q) + sum_m (q_m, g_m)|
  std::vector<double> grad_norms;
};

// optimality residuals from fresh sweeps at q
Certificate optimality_certificate(const Discretization& d, const DiscreteControl& q);

struct FistaOptions {
  int max_iter = 5000;
  double tol_bound = -1.0;  // -1: 1e-6 * alpha
  double tol_align = 1e-6;
  bool restart = true;      // gradient-based adaptive restart
  const DiscreteControl* init = nullptr;  // default: q = 0
};

struct OptimizerReport {
  int iterations = 0;
  bool converged = false;
  double j_total = 0.0, j_smooth = 0.0, j_sparse = 0.0;
  double r_bound = 0.0, r_align = 0.0, gap = 0.0;
  double lipschitz = 0.0;
  bool lipschitz_floored = false;
  int restarts = 0;
  std::vector<double> objective_at_restarts;
  std::vector<int> support;         // control node indices m with ||q_m|| > 0
  std::vector<double> group_norms;  // ||q_m||, one per control node
  std::vector<double> grad_norms;   // ||g_m|| at the returned iterate
  int certificate_evals = 0;
};

// Accelerated proximal gradient on the control coefficients with step 1/L and
// the prox in the omega-mass norm.  Stops once r_bound <= tol_bound and
// r_align <= tol_align (certified on the iterate, not the extrapolated
// point).  Never throws on non-convergence: returns the best iterate seen
// with converged = false.
std::pair<DiscreteControl, OptimizerReport> solve_fista(const Discretization& d,
                                                        const FistaOptions& opt = {});

} // namespace stmc

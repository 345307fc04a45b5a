#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include "stmc/fem.hpp"
#include "stmc/mesh.hpp"
#include "stmc/sparse.hpp"

namespace stmc {

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Temporal partition 0 = t_0 < ... < t_M = T with the control window aligned
// to nodes.  The control node set is the contiguous range k_lo..k_hi (empty
// when no window is set); it never contains 0 or M.
struct TimeGrid {
  double T = 0;
  int M = 0;
  std::vector<double> t;    // size M+1
  std::vector<double> tau;  // tau[m] = t[m] - t[m-1], m >= 1; tau[0] = 0
  double tau_max = 0;

  bool has_window = false;
  double window_a = 0, window_b = 0;
  int k_lo = 1, k_hi = 0;  // empty range by default

  int n_controls() const { return has_window ? k_hi - k_lo + 1 : 0; }
  bool is_control_node(int m) const { return has_window && m >= k_lo && m <= k_hi; }

  // temporal hat  e_{t_m}(x)
  double hat(int m, double x) const;
};

TimeGrid build_uniform_grid(double T, int M);

// Uniform grid with the control window [a,b] snapped onto nodes; endpoints
// that are not grid nodes (beyond 1e-12 relative fuzz) are an error, as are
// endpoints outside (0,T).  a == b yields a single control node.
TimeGrid build_time_grid(double T, int M, double window_a, double window_b);

// \int e_{t_m} over interval I_i = (t_{i-1}, t_i]:  tau_i/2 when i is m or m+1.
double hat_integral_on_interval(const TimeGrid& grid, int m, int interval);
// over the full support of the hat inside [0,T]
double hat_integral_support(const TimeGrid& grid, int m);
// over the control window
double hat_integral_window(const TimeGrid& grid, int m);

// Scalar measure on the closed control window: point atoms plus an optional
// piecewise-polynomial density (degree <= 2 per cell, global t coordinate).
struct TemporalMeasure {
  struct Atom {
    double t, w;
  };
  struct Cell {
    double a, b;
    std::array<double, 3> c;  // c[0] + c[1] t + c[2] t^2
  };
  std::vector<Atom> atoms;
  std::vector<Cell> cells;

  // sum of |atom weights| + \int |density| (exact, quadratics split at roots)
  double total_variation() const;
};

// weights w_m = \int e_{t_m} dq for m in the control range (index 0 = k_lo)
std::vector<double> lambda_tau(const TemporalMeasure& q, const TimeGrid& grid);

// nodal values v(t_m) for m in the control range
std::vector<double> pi_tau(const std::function<double(double)>& v, const TimeGrid& grid);

// value at time x of the piecewise-linear interpolant with the given control
// node values (zero weight from nodes outside the window)
double eval_window_interpolant(const std::vector<double>& nodal, const TimeGrid& grid,
                               double x);

// independent evaluations of <q, Pi_tau v> and <Lambda_tau q, v>
std::pair<double, double> pairing_duality_check(const TemporalMeasure& q,
                                                const std::function<double(double)>& v,
                                                const TimeGrid& grid);

// Control iterate q = sum_m q_m (x) delta_{t_m}: one L2(omega) coefficient
// group per control node, index 0 = k_lo.
struct DiscreteControl {
  std::vector<std::vector<double>> groups;

  static DiscreteControl zeros(int n_controls, int n_omega) {
    DiscreteControl q;
    q.groups.assign(n_controls, std::vector<double>(n_omega, 0.0));
    return q;
  }
};

// Measure with spatial profiles: atoms (t, profile), the profile either a
// coefficient vector in U_h (already discrete in space) or an analytic
// function on omega.
struct SpaceTimeMeasure {
  struct FieldAtom {
    double t;
    std::vector<double> profile;  // omega-node coefficients
  };
  struct FuncAtom {
    double t;
    std::function<double(double, double)> profile;
  };
  std::vector<FieldAtom> field_atoms;
  std::vector<FuncAtom> func_atoms;
};

// Lambda_sigma = pi_h composed with Lambda_tau; identity on DiscreteControl.
DiscreteControl lambda_sigma(const SpaceTimeMeasure& q, const Mesh& mesh,
                             const SparseMatrix& omega_mass, const TimeGrid& grid);

} // namespace stmc

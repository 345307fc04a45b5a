#include "stmc/time_grid.hpp"

#include <algorithm>
#include <cmath>

#include "stmc/kernels.hpp"

namespace stmc {

namespace {

constexpr double kNodeFuzz = 1e-12;

double snap_fuzz(double T) { return kNodeFuzz * std::max(1.0, T); }

// 2-point Gauss on [a,b]; exact for cubics, which covers every product of a
// degree-2 density with a hat segment.
template <class F>
double gauss2(double a, double b, F&& f) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double off = half / std::sqrt(3.0);
  return half * (f(mid - off) + f(mid + off));
}

double poly2(const std::array<double, 3>& c, double x) {
  return c[0] + x * (c[1] + x * c[2]);
}

// antiderivative of c0 + c1 t + c2 t^2
double poly2_prim(const std::array<double, 3>& c, double x) {
  return x * (c[0] + x * (c[1] / 2.0 + x * c[2] / 3.0));
}

} // namespace

double TimeGrid::hat(int m, double x) const {
  if (m > 0 && x >= t[m - 1] && x <= t[m]) return (x - t[m - 1]) / tau[m];
  if (m < M && x >= t[m] && x <= t[m + 1]) return (t[m + 1] - x) / tau[m + 1];
  return 0.0;
}

TimeGrid build_uniform_grid(double T, int M) {
  if (!(T > 0.0)) throw GridError("final time must be positive");
  if (M < 1) throw GridError("time grid needs at least 1 interval");
  TimeGrid g;
  g.T = T;
  g.M = M;
  g.t.resize(M + 1);
  g.tau.assign(M + 1, 0.0);
  for (int m = 0; m <= M; ++m) g.t[m] = T * static_cast<double>(m) / M;
  for (int m = 1; m <= M; ++m) g.tau[m] = g.t[m] - g.t[m - 1];
  g.tau_max = *std::max_element(g.tau.begin() + 1, g.tau.end());
  return g;
}

TimeGrid build_time_grid(double T, int M, double window_a, double window_b) {
  if (M < 4) throw GridError("time grid needs at least 4 intervals");
  TimeGrid g = build_uniform_grid(T, M);
  if (!(window_a > 0.0) || !(window_b < T))
    throw GridError("control window must lie strictly inside (0, T)");
  if (window_a > window_b) throw GridError("control window is empty");

  const double step = T / M;
  const double fuzz = snap_fuzz(T);
  auto snap = [&](double x, const char* which) {
    const long k = std::lround(x / step);
    if (k < 1 || k > M - 1 || std::abs(g.t[static_cast<size_t>(k)] - x) > fuzz)
      throw GridError(std::string("control window ") + which +
                      " does not sit on a grid node");
    return static_cast<int>(k);
  };
  g.k_lo = snap(window_a, "start");
  g.k_hi = snap(window_b, "end");
  g.has_window = true;
  g.window_a = g.t[g.k_lo];
  g.window_b = g.t[g.k_hi];
  return g;
}

double hat_integral_on_interval(const TimeGrid& grid, int m, int interval) {
  if (interval < 1 || interval > grid.M) throw GridError("interval index out of range");
  if (m < 0 || m > grid.M) throw GridError("node index out of range");
  if (interval == m || interval == m + 1) return 0.5 * grid.tau[interval];
  return 0.0;
}

double hat_integral_support(const TimeGrid& grid, int m) {
  if (m < 0 || m > grid.M) throw GridError("node index out of range");
  double s = 0.0;
  if (m >= 1) s += 0.5 * grid.tau[m];
  if (m < grid.M) s += 0.5 * grid.tau[m + 1];
  return s;
}

double hat_integral_window(const TimeGrid& grid, int m) {
  if (!grid.has_window) return 0.0;
  double s = 0.0;
  for (int i = grid.k_lo + 1; i <= grid.k_hi; ++i)
    s += hat_integral_on_interval(grid, m, i);
  return s;
}

double TemporalMeasure::total_variation() const {
  double tv = 0.0;
  for (const Atom& a : atoms) tv += std::abs(a.w);
  for (const Cell& cell : cells) {
    if (!(cell.b > cell.a)) continue;
    // split the quadratic at its real roots so each piece has one sign
    std::vector<double> cut = {cell.a, cell.b};
    if (cell.c[2] != 0.0) {
      const double disc = cell.c[1] * cell.c[1] - 4.0 * cell.c[2] * cell.c[0];
      if (disc > 0.0) {
        const double sq = std::sqrt(disc);
        const double qq = -0.5 * (cell.c[1] + std::copysign(sq, cell.c[1]));
        const double r1 = qq / cell.c[2];
        if (r1 > cell.a && r1 < cell.b) cut.push_back(r1);
        if (qq != 0.0) {
          const double r2 = cell.c[0] / qq;
          if (r2 > cell.a && r2 < cell.b) cut.push_back(r2);
        }
      }
    } else if (cell.c[1] != 0.0) {
      const double r = -cell.c[0] / cell.c[1];
      if (r > cell.a && r < cell.b) cut.push_back(r);
    }
    std::sort(cut.begin(), cut.end());
    for (size_t i = 0; i + 1 < cut.size(); ++i)
      tv += std::abs(poly2_prim(cell.c, cut[i + 1]) - poly2_prim(cell.c, cut[i]));
  }
  return tv;
}

namespace {
// Integrate density * f over one cell, where f is piecewise smooth with
// breakpoints at grid nodes (hat functions, interpolants).
template <class F>
double integrate_cell_against(const TemporalMeasure::Cell& cell, const TimeGrid& grid,
                              F&& f) {
  std::vector<double> cut = {cell.a, cell.b};
  for (int m = 0; m <= grid.M; ++m)
    if (grid.t[m] > cell.a && grid.t[m] < cell.b) cut.push_back(grid.t[m]);
  std::sort(cut.begin(), cut.end());
  double s = 0.0;
  for (size_t i = 0; i + 1 < cut.size(); ++i)
    s += gauss2(cut[i], cut[i + 1],
                [&](double x) { return poly2(cell.c, x) * f(x); });
  return s;
}

void check_in_window(double t, const TimeGrid& grid) {
  if (!grid.has_window) throw GridError("grid has no control window");
  if (t < grid.window_a - snap_fuzz(grid.T) || t > grid.window_b + snap_fuzz(grid.T))
    throw GridError("measure has support outside the control window");
}
} // namespace

std::vector<double> lambda_tau(const TemporalMeasure& q, const TimeGrid& grid) {
  if (!grid.has_window) throw GridError("grid has no control window");
  std::vector<double> w(grid.n_controls(), 0.0);
  for (const TemporalMeasure::Atom& a : q.atoms) {
    check_in_window(a.t, grid);
    const double ta = std::clamp(a.t, grid.window_a, grid.window_b);
    for (int m = grid.k_lo; m <= grid.k_hi; ++m) {
      const double e = grid.hat(m, ta);
      if (e != 0.0) w[m - grid.k_lo] += a.w * e;
    }
  }
  for (const TemporalMeasure::Cell& cell : q.cells) {
    if (!(cell.b > cell.a)) continue;
    check_in_window(cell.a, grid);
    check_in_window(cell.b, grid);
    for (int m = grid.k_lo; m <= grid.k_hi; ++m)
      w[m - grid.k_lo] += integrate_cell_against(
          cell, grid, [&](double x) { return grid.hat(m, x); });
  }
  return w;
}

std::vector<double> pi_tau(const std::function<double(double)>& v, const TimeGrid& grid) {
  if (!grid.has_window) throw GridError("grid has no control window");
  std::vector<double> out(grid.n_controls());
  for (int m = grid.k_lo; m <= grid.k_hi; ++m) out[m - grid.k_lo] = v(grid.t[m]);
  return out;
}

double eval_window_interpolant(const std::vector<double>& nodal, const TimeGrid& grid,
                               double x) {
  if (!grid.has_window) throw GridError("grid has no control window");
  if (static_cast<int>(nodal.size()) != grid.n_controls())
    throw GridError("nodal value count does not match the control range");
  double s = 0.0;
  for (int m = grid.k_lo; m <= grid.k_hi; ++m) {
    const double e = grid.hat(m, x);
    if (e != 0.0) s += nodal[m - grid.k_lo] * e;
  }
  return s;
}

std::pair<double, double> pairing_duality_check(const TemporalMeasure& q,
                                                const std::function<double(double)>& v,
                                                const TimeGrid& grid) {
  const std::vector<double> nodal = pi_tau(v, grid);
  double lhs = 0.0;  // <q, Pi_tau v>
  for (const TemporalMeasure::Atom& a : q.atoms) {
    const double ta = std::clamp(a.t, grid.window_a, grid.window_b);
    lhs += a.w * eval_window_interpolant(nodal, grid, ta);
  }
  for (const TemporalMeasure::Cell& cell : q.cells) {
    if (!(cell.b > cell.a)) continue;
    lhs += integrate_cell_against(cell, grid, [&](double x) {
      return eval_window_interpolant(nodal, grid, x);
    });
  }
  const std::vector<double> w = lambda_tau(q, grid);
  double rhs = 0.0;  // <Lambda_tau q, v>
  for (int m = grid.k_lo; m <= grid.k_hi; ++m) rhs += w[m - grid.k_lo] * v(grid.t[m]);
  return {lhs, rhs};
}

DiscreteControl lambda_sigma(const SpaceTimeMeasure& q, const Mesh& mesh,
                             const SparseMatrix& omega_mass, const TimeGrid& grid) {
  if (!grid.has_window) throw GridError("grid has no control window");
  const int nc = grid.n_controls();
  DiscreteControl out = DiscreteControl::zeros(nc, mesh.n_omega());

  for (const SpaceTimeMeasure::FieldAtom& a : q.field_atoms) {
    check_in_window(a.t, grid);
    if (a.profile.size() != static_cast<size_t>(mesh.n_omega()))
      throw GridError("field atom profile size does not match omega");
    const double ta = std::clamp(a.t, grid.window_a, grid.window_b);
    for (int m = grid.k_lo; m <= grid.k_hi; ++m) {
      const double e = grid.hat(m, ta);
      if (e != 0.0)
        kern::axpy(e, a.profile.data(), out.groups[m - grid.k_lo].data(),
                   a.profile.size());
    }
  }

  if (!q.func_atoms.empty()) {
    // accumulate dual loads per group, then one L2(omega) projection each
    std::vector<std::vector<double>> rhs(nc, std::vector<double>(mesh.n_omega(), 0.0));
    std::vector<bool> touched(nc, false);
    for (const SpaceTimeMeasure::FuncAtom& a : q.func_atoms) {
      check_in_window(a.t, grid);
      const double ta = std::clamp(a.t, grid.window_a, grid.window_b);
      const std::vector<double> load =
          spatial_load(mesh, NodeSet::Omega, mesh.omega_elements, a.profile);
      for (int m = grid.k_lo; m <= grid.k_hi; ++m) {
        const double e = grid.hat(m, ta);
        if (e != 0.0) {
          kern::axpy(e, load.data(), rhs[m - grid.k_lo].data(), load.size());
          touched[m - grid.k_lo] = true;
        }
      }
    }
    for (int j = 0; j < nc; ++j) {
      if (!touched[j]) continue;
      const std::vector<double> coef = solve_spd(omega_mass, rhs[j]);
      kern::axpy(1.0, coef.data(), out.groups[j].data(), coef.size());
    }
  }
  return out;
}

} // namespace stmc

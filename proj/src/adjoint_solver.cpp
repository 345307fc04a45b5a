#include "stmc/adjoint_solver.hpp"

#include <cmath>
#include <stdexcept>

#include "stmc/kernels.hpp"

namespace stmc {

void solve_backward(const Discretization& d, const std::vector<std::vector<double>>& G,
                    const std::vector<double>& terminal_rhs, DiscreteAdjoint& out) {
  const int n = d.n();
  const int M = d.spec.M;
  if (static_cast<int>(G.size()) != M + 1)
    throw std::invalid_argument("solve_backward: need M+1 interval sources");
  if (out.nodes() != M + 1 || static_cast<int>(out.phi[0].size()) != n)
    out.phi.assign(M + 1, std::vector<double>(n, 0.0));

  d.mass_fac.solve(terminal_rhs.data(), out.phi[M].data());
  std::vector<double> rhs(n);
  for (int m = M; m >= 1; --m) {
    rhs = d.a_minus(m).mul(out.phi[m]);
    kern::axpy(1.0, G[m].data(), rhs.data(), rhs.size());
    d.a_plus_fac(m).solve(rhs.data(), out.phi[m - 1].data());
  }
}

void solve_adjoint(const Discretization& d, const DiscreteState& s, DiscreteAdjoint& out) {
  const int n = d.n();
  const int M = d.spec.M;
  if (s.intervals() != M)
    throw std::invalid_argument("solve_adjoint: state does not match the grid");

  std::vector<double> terminal(n, 0.0);
  if (d.spec.beta > 0.0) {
    terminal = d.mass.mul(s.terminal);
    if (!d.bT.empty()) kern::axpy(-1.0, d.bT.data(), terminal.data(), terminal.size());
    kern::scale(d.spec.beta, terminal.data(), terminal.size());
  }

  std::vector<std::vector<double>> G(M + 1);
  for (int m = 1; m <= M; ++m) {
    G[m] = d.mass.mul(s.u[m - 1]);
    kern::scale(d.grid.tau[m], G[m].data(), G[m].size());
    if (!d.D.empty()) kern::axpy(-1.0, d.D[m].data(), G[m].data(), G[m].size());
  }
  solve_backward(d, G, terminal, out);
}

DiscreteAdjoint solve_adjoint(const Discretization& d, const DiscreteState& s) {
  DiscreteAdjoint adj;
  solve_adjoint(d, s, adj);
  return adj;
}

std::vector<std::vector<double>> control_gradient(const Discretization& d,
                                                  const DiscreteAdjoint& adj) {
  if (!d.grid.has_window)
    throw std::invalid_argument("control_gradient: grid has no control window");
  if (adj.nodes() != d.spec.M + 1)
    throw std::invalid_argument("control_gradient: adjoint does not match the grid");
  std::vector<std::vector<double>> g(d.grid.n_controls());
  for (int m = d.grid.k_lo; m <= d.grid.k_hi; ++m) {
    const std::vector<double> rhs = d.coupling.mul(adj.phi[m]);
    g[m - d.grid.k_lo] = d.omega_mass_fac.solve(rhs);
  }
  return g;
}

double max_adjoint_residual(const Discretization& d, const DiscreteState& s,
                            const DiscreteAdjoint& adj) {
  const int n = d.n();
  const int M = d.spec.M;
  auto inf_norm = [n](const std::vector<double>& x) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
    return m;
  };

  double worst = 0.0;
  std::vector<double> r(n);
  double scale = 0.0;
  auto add = [&](double c, const std::vector<double>& term) {
    kern::axpy(c, term.data(), r.data(), term.size());
    scale = std::max(scale, std::abs(c) * inf_norm(term));
  };

  // terminal test slot: Mass phi_M = beta (Mass u(T) - b_T)
  r.assign(n, 0.0);
  scale = 0.0;
  add(1.0, d.mass.mul(adj.phi[M]));
  if (d.spec.beta > 0.0) {
    add(-d.spec.beta, d.mass.mul(s.terminal));
    if (!d.bT.empty()) add(d.spec.beta, d.bT);
  }
  worst = std::max(worst, inf_norm(r) / (scale == 0.0 ? 1.0 : scale));

  // interval indicator tests
  for (int m = 1; m <= M; ++m) {
    r.assign(n, 0.0);
    scale = 0.0;
    const double tau = d.grid.tau[m];
    add(1.0, d.mass.mul(adj.phi[m - 1]));
    add(-1.0, d.mass.mul(adj.phi[m]));
    add(0.5 * tau, d.stiffness.mul(adj.phi[m - 1]));
    add(0.5 * tau, d.stiffness.mul(adj.phi[m]));
    add(-tau, d.mass.mul(s.u[m - 1]));
    if (!d.D.empty()) add(1.0, d.D[m]);
    worst = std::max(worst, inf_norm(r) / (scale == 0.0 ? 1.0 : scale));
  }
  return worst;
}

} // namespace stmc

#include "stmc/state_solver.hpp"

#include <cmath>

#include "stmc/kernels.hpp"

namespace stmc {

namespace {

const std::vector<double>* control_at(const Discretization& d, const DiscreteControl* q,
                                      int m) {
  if (q == nullptr || !d.grid.is_control_node(m)) return nullptr;
  return &q->groups[m - d.grid.k_lo];
}

} // namespace

void solve_state(const Discretization& d, const DiscreteControl* q, DiscreteState& out) {
  const int n = d.n();
  const int M = d.spec.M;
  if (q != nullptr &&
      static_cast<int>(q->groups.size()) != d.grid.n_controls())
    throw std::invalid_argument("control group count does not match the grid");

  if (out.intervals() != M || (M > 0 && static_cast<int>(out.u[0].size()) != n)) {
    out.u.assign(M, std::vector<double>(n, 0.0));
    out.terminal.assign(n, 0.0);
  }

  std::vector<double> rhs = d.mass.mul(d.u0h);
  if (!d.F.empty()) kern::axpy(1.0, d.F[0].data(), rhs.data(), rhs.size());
  d.a_plus_fac(1).solve(rhs.data(), out.u[0].data());

  for (int m = 1; m < M; ++m) {
    rhs = d.a_minus(m).mul(out.u[m - 1]);
    if (!d.F.empty()) kern::axpy(1.0, d.F[m].data(), rhs.data(), rhs.size());
    if (const std::vector<double>* qm = control_at(d, q, m)) {
      const std::vector<double> cq = d.coupling.mul_transpose(*qm);
      kern::axpy(1.0, cq.data(), rhs.data(), rhs.size());
    }
    d.a_plus_fac(m + 1).solve(rhs.data(), out.u[m].data());
  }

  rhs = d.a_minus(M).mul(out.u[M - 1]);
  if (!d.F.empty()) kern::axpy(1.0, d.F[M].data(), rhs.data(), rhs.size());
  d.mass_fac.solve(rhs.data(), out.terminal.data());
}

DiscreteState solve_state(const Discretization& d, const DiscreteControl& q) {
  DiscreteState s;
  solve_state(d, &q, s);
  return s;
}

DiscreteState solve_state(const Discretization& d) {
  DiscreteState s;
  solve_state(d, nullptr, s);
  return s;
}

double bilinear_form_A(const Discretization& d, const DiscreteState& u,
                       const std::vector<std::vector<double>>& v) {
  const int M = d.spec.M;
  if (u.intervals() != M || static_cast<int>(v.size()) != M + 1)
    throw std::invalid_argument("bilinear_form_A: mismatched discretizations");

  double a = 0.0;
  // jump terms: [u]_m = u_{m+1} - u_m for m < M, [u]_M = u(T) - u_M
  std::vector<double> tmp(d.n());
  for (int m = 1; m <= M; ++m) {
    const std::vector<double>& next = (m == M) ? u.terminal : u.u[m];
    for (size_t i = 0; i < tmp.size(); ++i) tmp[i] = next[i] - u.u[m - 1][i];
    a += kern::dot(d.mass.mul(tmp).data(), v[m].data(), tmp.size());
  }
  // initial pairing (u_1, v(0))
  a += kern::dot(d.mass.mul(u.u[0]).data(), v[0].data(), v[0].size());
  // int (grad u, grad v): grad u constant per interval, grad v linear
  for (int m = 1; m <= M; ++m) {
    const std::vector<double> ku = d.stiffness.mul(u.u[m - 1]);
    const double w = 0.5 * d.grid.tau[m];
    a += w * (kern::dot(ku.data(), v[m - 1].data(), ku.size()) +
              kern::dot(ku.data(), v[m].data(), ku.size()));
  }
  return a;
}

double state_rhs_functional(const Discretization& d, const DiscreteControl* q,
                            const std::vector<std::vector<double>>& v) {
  const int M = d.spec.M;
  if (static_cast<int>(v.size()) != M + 1)
    throw std::invalid_argument("state_rhs_functional: test field size mismatch");
  double s = kern::dot(d.mass.mul(d.u0h).data(), v[0].data(), v[0].size());
  if (!d.F.empty())
    for (int m = 0; m <= M; ++m)
      s += kern::dot(d.F[m].data(), v[m].data(), v[m].size());
  for (int m = 1; m < M; ++m)
    if (const std::vector<double>* qm = control_at(d, q, m))
      s += kern::dot(qm->data(), d.coupling.mul(v[m]).data(), qm->size());
  return s;
}

double max_scheme_residual(const Discretization& d, const DiscreteControl* q,
                           const DiscreteState& u) {
  const int M = d.spec.M;
  const int n = d.n();
  auto inf_norm = [n](const std::vector<double>& x) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
    return m;
  };

  double worst = 0.0;
  // test with e_{t_m} x (all interior hats at once): the residual vector of
  // the identity row block m
  for (int m = 0; m <= M; ++m) {
    std::vector<double> r(n, 0.0);
    double scale = 0.0;
    auto add = [&](double c, const std::vector<double>& term) {
      kern::axpy(c, term.data(), r.data(), term.size());
      scale = std::max(scale, std::abs(c) * inf_norm(term));
    };
    if (m == 0) {
      add(1.0, d.mass.mul(u.u[0]));
      add(0.5 * d.grid.tau[1], d.stiffness.mul(u.u[0]));
      add(-1.0, d.mass.mul(d.u0h));
    } else {
      const std::vector<double>& next = (m == M) ? u.terminal : u.u[m];
      add(1.0, d.mass.mul(next));
      add(-1.0, d.mass.mul(u.u[m - 1]));
      add(0.5 * d.grid.tau[m], d.stiffness.mul(u.u[m - 1]));
      if (m < M) add(0.5 * d.grid.tau[m + 1], d.stiffness.mul(next));
      if (const std::vector<double>* qm = control_at(d, q, m))
        add(-1.0, d.coupling.mul_transpose(*qm));
    }
    if (!d.F.empty()) add(-1.0, d.F[m]);
    if (scale == 0.0) scale = 1.0;
    worst = std::max(worst, inf_norm(r) / scale);
  }
  return worst;
}

} // namespace stmc

#include "stmc/problem.hpp"

#include <cmath>
#include <stdexcept>

#include "stmc/kernels.hpp"

namespace stmc {

namespace {

// dedupe key: intervals whose lengths agree to machine precision share operators
int operator_index(Discretization& d, double tau) {
  for (size_t j = 0; j < d.op_tau.size(); ++j)
    if (std::abs(d.op_tau[j] - tau) <= 1e-14 * d.grid.tau_max) return static_cast<int>(j);
  d.op_tau.push_back(tau);
  d.op_plus.push_back(lincomb(1.0, d.mass, 0.5 * tau, d.stiffness));
  d.op_minus.push_back(lincomb(1.0, d.mass, -0.5 * tau, d.stiffness));
  d.op_plus_fac.emplace_back(d.op_plus.back());
  return static_cast<int>(d.op_tau.size() - 1);
}

} // namespace

Discretization discretize(const ProblemSpec& spec) {
  if (spec.nx < 2 || spec.ny < 2)
    throw std::invalid_argument("mesh needs at least 2 cells per direction");
  if (spec.M < 1) throw std::invalid_argument("time grid needs at least 1 interval");
  if (spec.beta < 0.0) throw std::invalid_argument("terminal weight must be >= 0");

  Discretization d;
  d.spec = spec;
  d.mesh = build_structured_mesh(spec.domain, spec.nx, spec.ny);
  if (spec.has_control) {
    if (!(spec.alpha > 0.0))
      throw std::invalid_argument("control penalty alpha must be positive");
    d.mesh = mark_subdomain(d.mesh, spec.omega);
    d.grid = build_time_grid(spec.T, spec.M, spec.window_a, spec.window_b);
    d.omega_mass = assemble_mass(d.mesh, NodeSet::Omega, IntegrationDomain::Omega);
    d.coupling = assemble_omega_coupling(d.mesh);
  } else {
    d.grid = build_uniform_grid(spec.T, spec.M);
  }
  d.mass = assemble_mass(d.mesh, NodeSet::Interior, IntegrationDomain::Full);
  d.stiffness = assemble_stiffness(d.mesh);
  d.mass_fac = CholeskySolver(d.mass);
  if (spec.has_control) d.omega_mass_fac = CholeskySolver(d.omega_mass);

  d.op_of_interval.assign(spec.M + 1, -1);
  for (int m = 1; m <= spec.M; ++m)
    d.op_of_interval[m] = operator_index(d, d.grid.tau[m]);

  const std::vector<int> elems = all_elements(d.mesh);
  const int n = d.mesh.n_interior();

  d.u0h.assign(n, 0.0);
  if (!spec.u0.is_zero_literal()) {
    const std::vector<double> rhs = spatial_load(
        d.mesh, NodeSet::Interior, elems,
        [&](double x, double y) { return spec.u0.eval(x, y, 0.0); });
    d.u0h = d.mass_fac.solve(rhs);
  }

  // Time integrals use 2-point Gauss per interval: exact for the linear hat
  // weights against data that is smooth in t.
  const double goff = 0.5 / std::sqrt(3.0);
  if (!spec.f.is_zero_literal()) {
    d.F.assign(spec.M + 1, std::vector<double>(n, 0.0));
    for (int m = 1; m <= spec.M; ++m) {
      const double tau = d.grid.tau[m];
      const double w = 0.5 * tau;
      for (int g = 0; g < 2; ++g) {
        const double lam = 0.5 + (g == 0 ? -goff : goff);
        const double tg = d.grid.t[m - 1] + lam * tau;
        const std::vector<double> load = spatial_load(
            d.mesh, NodeSet::Interior, elems,
            [&](double x, double y) { return spec.f.eval(x, y, tg); });
        kern::axpy(w * (1.0 - lam), load.data(), d.F[m - 1].data(), load.size());
        kern::axpy(w * lam, load.data(), d.F[m].data(), load.size());
      }
    }
  }

  if (!spec.u_d.is_zero_literal()) {
    d.D.assign(spec.M + 1, std::vector<double>(n, 0.0));
    for (int m = 1; m <= spec.M; ++m) {
      const double tau = d.grid.tau[m];
      for (int g = 0; g < 2; ++g) {
        const double lam = 0.5 + (g == 0 ? -goff : goff);
        const double tg = d.grid.t[m - 1] + lam * tau;
        const std::vector<double> load = spatial_load(
            d.mesh, NodeSet::Interior, elems,
            [&](double x, double y) { return spec.u_d.eval(x, y, tg); });
        kern::axpy(0.5 * tau, load.data(), d.D[m].data(), load.size());
        d.ud_sq_int += 0.5 * tau *
                       integrate(d.mesh, elems, [&](double x, double y) {
                         const double v = spec.u_d.eval(x, y, tg);
                         return v * v;
                       });
      }
    }
  }

  if (spec.beta > 0.0 && !spec.u_T.is_zero_literal()) {
    d.bT = spatial_load(d.mesh, NodeSet::Interior, elems, [&](double x, double y) {
      return spec.u_T.eval(x, y, spec.T);
    });
    d.uT_sq_int = integrate(d.mesh, elems, [&](double x, double y) {
      const double v = spec.u_T.eval(x, y, spec.T);
      return v * v;
    });
  }

  return d;
}

Discretization strip_data(const Discretization& d) {
  Discretization h = d;
  h.u0h.assign(h.mesh.n_interior(), 0.0);
  h.F.clear();
  h.D.clear();
  h.bT.clear();
  h.ud_sq_int = 0.0;
  h.uT_sq_int = 0.0;
  h.spec.f = Expression::parse("0");
  h.spec.u0 = Expression::parse("0");
  h.spec.u_d = Expression::parse("0");
  h.spec.u_T = Expression::parse("0");
  return h;
}

} // namespace stmc

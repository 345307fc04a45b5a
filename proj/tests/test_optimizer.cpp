#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "stmc/expression.hpp"
#include "stmc/optimizer.hpp"
#include "stmc/problem.hpp"
#include "stmc/state_solver.hpp"

using namespace stmc;

namespace {

// forced tracking problem with an interior control patch; nx=8/M=16 keeps a
// default-tolerance solve in the hundreds of sweeps
ProblemSpec control_spec(int nx, int M) {
  ProblemSpec s;
  s.nx = nx;
  s.ny = nx;
  s.T = 1.0;
  s.M = M;
  s.beta = 1.0;
  s.f = Expression::parse("sin(pi*x)*sin(pi*y)");
  s.u0 = Expression::parse("0");
  s.u_d = Expression::parse("exp(-40*(t-0.55)^2)*sin(pi*x)*sin(pi*y)");
  s.u_T = Expression::parse("0.3*sin(pi*x)*sin(pi*y)");
  s.has_control = true;
  s.omega = {0.25, 0.25, 0.75, 0.75};
  s.window_a = 0.25;
  s.window_b = 0.75;
  s.alpha = 1.0;
  return s;
}

DiscreteControl random_control(const Discretization& d, unsigned seed, double scale) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  DiscreteControl q = DiscreteControl::zeros(d.grid.n_controls(), d.n_omega());
  for (auto& g : q.groups)
    for (double& x : g) x = dist(rng);
  return q;
}

// one plain proximal-gradient step with step size 1/L
DiscreteControl pg_step(const Discretization& d, const DiscreteControl& q, double L) {
  const std::vector<std::vector<double>> g = smooth_gradient(d, q);
  DiscreteControl out = q;
  for (size_t m = 0; m < q.groups.size(); ++m) {
    std::vector<double> v = q.groups[m];
    for (size_t i = 0; i < v.size(); ++i) v[i] -= g[m][i] / L;
    out.groups[m] = prox_group(d.omega_mass, v, d.spec.alpha / L);
  }
  return out;
}

// sum_m ||q_m - (pg step)(q)_m||_omega, zero exactly at optimality
double fixed_point_residual(const Discretization& d, const DiscreteControl& q, double L) {
  const DiscreteControl p = pg_step(d, q, L);
  double r = 0.0;
  for (size_t m = 0; m < q.groups.size(); ++m) {
    std::vector<double> diff = q.groups[m];
    for (size_t i = 0; i < diff.size(); ++i) diff[i] -= p.groups[m][i];
    r += omega_norm(d.omega_mass, diff);
  }
  return r;
}

} // namespace

TEST_CASE("measure norm adds the group omega norms") {
  const Discretization d = discretize(control_spec(8, 16));
  const int nc = d.grid.n_controls();
  const int nw = d.n_omega();

  DiscreteControl q = DiscreteControl::zeros(nc, nw);
  CHECK(m_norm(d, q) == 0.0);

  // the hats of the omega nodes sum to 1 inside omega, so the all-ones group
  // is the constant 1 there and its L2(omega) norm is sqrt(|omega|)
  q.groups[2].assign(nw, 1.0);
  CHECK(m_norm(d, q) == doctest::Approx(0.5).epsilon(1e-13));

  q.groups[5] = q.groups[2];
  CHECK(m_norm(d, q) == doctest::Approx(1.0).epsilon(1e-13));

  const DiscreteControl r = random_control(d, 17, 1.0);
  double sum = 0.0;
  for (const auto& g : r.groups) sum += omega_norm(d.omega_mass, g);
  CHECK(m_norm(d, r) == doctest::Approx(sum).epsilon(1e-15));
}

TEST_CASE("objective replays the scalar recurrence on a one-node mesh") {
  // 2x2 mesh: single interior node with mass 0.125 and stiffness 4 (see
  // test_state)
  ProblemSpec s;
  s.nx = 2;
  s.ny = 2;
  s.T = 1.0;
  s.beta = 0.7;
  s.f = Expression::parse("t");
  s.u0 = Expression::parse("1");
  s.u_d = Expression::parse("0");
  s.u_T = Expression::parse("0");

  const double kM = 0.125, kK = 4.0;

  SUBCASE("two steps without a control") {
    s.M = 2;
    const Discretization d = discretize(s);

    // pi_h of the constant 1: (1, psi)/(psi, psi) = 0.25/0.125
    CHECK(d.u0h[0] == doctest::Approx(2.0).epsilon(1e-13));

    const double tau = 0.5;
    const double ap = kM + 0.5 * tau * kK;
    const double am = kM - 0.5 * tau * kK;
    const double u1 = (kM * d.u0h[0] + d.F[0][0]) / ap;
    const double u2 = (am * u1 + d.F[1][0]) / ap;
    const double uT = (am * u2 + d.F[2][0]) / kM;
    const double j_hand =
        0.5 * tau * kM * (u1 * u1 + u2 * u2) + 0.5 * s.beta * kM * uT * uT;

    const ObjectiveParts parts = objective(d, DiscreteControl::zeros(0, 0));
    CHECK(parts.smooth == doctest::Approx(j_hand).epsilon(1e-12));
    CHECK(parts.sparse == 0.0);
    CHECK(parts.total == doctest::Approx(j_hand).epsilon(1e-12));

    ProblemSpec z = s;
    z.f = Expression::parse("0");
    z.u0 = Expression::parse("0");
    const ObjectiveParts zero = objective(discretize(z), DiscreteControl::zeros(0, 0));
    CHECK(zero.total == 0.0);
  }

  SUBCASE("one control atom feeding the step after its node") {
    // omega = one cell, window = one node: the control is a single scalar
    s.M = 4;
    s.has_control = true;
    s.omega = {0.0, 0.0, 0.5, 0.5};
    s.window_a = 0.5;
    s.window_b = 0.5;
    s.alpha = 0.4;
    const Discretization d = discretize(s);
    REQUIRE(d.n_omega() == 1);
    REQUIRE(d.grid.n_controls() == 1);
    REQUIRE(d.grid.k_lo == 2);

    const double momega = d.omega_mass.mul(std::vector<double>{1.0})[0];
    const double c = d.coupling.mul(std::vector<double>{1.0})[0];
    const double x = 0.3;

    DiscreteControl q = DiscreteControl::zeros(1, 1);
    q.groups[0][0] = x;

    const double tau = 0.25;
    const double ap = kM + 0.5 * tau * kK;
    const double am = kM - 0.5 * tau * kK;
    double track = 0.0;
    double u = 0.0;
    for (int m = 1; m <= s.M; ++m) {
      const double load = d.F[m - 1][0] + (m - 1 == d.grid.k_lo ? c * x : 0.0);
      u = m == 1 ? (kM * d.u0h[0] + load) / ap : (am * u + load) / ap;
      track += 0.5 * tau * kM * u * u;
    }
    const double uT = (am * u + d.F[s.M][0]) / kM;
    const double j_smooth = track + 0.5 * s.beta * kM * uT * uT;
    const double j_sparse = s.alpha * x * std::sqrt(momega);

    const ObjectiveParts parts = objective(d, q);
    CHECK(parts.smooth == doctest::Approx(j_smooth).epsilon(1e-12));
    CHECK(parts.sparse == doctest::Approx(j_sparse).epsilon(1e-12));
    CHECK(parts.total == doctest::Approx(j_smooth + j_sparse).epsilon(1e-12));
  }
}

TEST_CASE("prox shrinkage follows the closed form") {
  const Discretization d = discretize(control_spec(8, 16));
  const int nw = d.n_omega();
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  std::vector<double> v(nw);
  for (double& x : v) x = dist(rng);
  const double nv0 = omega_norm(d.omega_mass, v);
  for (double& x : v) x *= 2.0 / nv0;  // ||v|| = 2 up to rounding

  const std::vector<double> half = prox_group(d.omega_mass, v, 1.0);
  const double nv = omega_norm(d.omega_mass, v);
  for (int i = 0; i < nw; ++i)
    CHECK(half[i] == doctest::Approx((1.0 - 1.0 / nv) * v[i]).epsilon(1e-14));
  CHECK(omega_norm(d.omega_mass, half) == doctest::Approx(1.0).epsilon(1e-12));

  // at or below the threshold the group collapses to exactly zero,
  // including the tie ||v|| = theta
  for (const double theta : {nv, 1.0000001 * nv}) {
    const std::vector<double> out = prox_group(d.omega_mass, v, theta);
    for (double x : out) CHECK(x == 0.0);
  }

  CHECK_THROWS_AS(prox_group(d.omega_mass, v, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(prox_group(d.omega_mass, v, -1.0), std::invalid_argument);

  // subgradient characterization: v - out lies in the theta-ball and is
  // aligned with out whenever out != 0
  std::uniform_real_distribution<double> tdist(0.1, 2.0);
  for (unsigned seed = 40; seed < 60; ++seed) {
    std::mt19937 r2(seed);
    std::vector<double> w(nw);
    for (double& x : w) x = dist(r2);
    const double theta = tdist(r2);
    const std::vector<double> out = prox_group(d.omega_mass, w, theta);

    std::vector<double> res = w;
    for (int i = 0; i < nw; ++i) res[i] -= out[i];
    CHECK(omega_norm(d.omega_mass, res) <= theta * (1.0 + 1e-12));

    const double no = omega_norm(d.omega_mass, out);
    if (no > 0.0) {
      for (int i = 0; i < nw; ++i) res[i] -= theta * out[i] / no;
      CHECK(omega_norm(d.omega_mass, res) <= 1e-12 * theta);
    }
  }
}

TEST_CASE("lipschitz estimate matches a dense power-iteration oracle") {
  ProblemSpec s = control_spec(4, 6);
  s.beta = 0.9;
  s.window_a = 1.0 / 3.0;
  s.window_b = 2.0 / 3.0;
  const Discretization d = discretize(s);
  const int nc = d.grid.n_controls();
  const int nw = d.n_omega();
  REQUIRE(nc == 3);
  REQUIRE(nw == 9);
  const int dim = nc * nw;

  // densify the homogeneous gradient map by applying it to basis controls
  std::vector<std::vector<double>> col(dim);
  for (int j = 0; j < dim; ++j) {
    DiscreteControl e = DiscreteControl::zeros(nc, nw);
    e.groups[j / nw][j % nw] = 1.0;
    const auto g = homogeneous_gradient(d, e);
    col[j].reserve(dim);
    for (const auto& grp : g)
      col[j].insert(col[j].end(), grp.begin(), grp.end());
  }

  // power iteration in the omega-mass metric, where the map is self-adjoint
  const auto wdot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (int m = 0; m < nc; ++m) {
      const std::vector<double> bm(b.begin() + m * nw, b.begin() + (m + 1) * nw);
      const std::vector<double> mb = d.omega_mass.mul(bm);
      for (int i = 0; i < nw; ++i) acc += a[m * nw + i] * mb[i];
    }
    return acc;
  };
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x(dim), y(dim);
  for (double& xi : x) xi = dist(rng);
  double lambda = 0.0;
  for (int it = 0; it < 3000; ++it) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i) y[i] += col[j][i] * x[j];
    lambda = wdot(x, y) / wdot(x, x);
    const double ny = std::sqrt(wdot(y, y));
    REQUIRE(ny > 0.0);
    for (int i = 0; i < dim; ++i) x[i] = y[i] / ny;
  }

  bool floored = true;
  const double L = estimate_lipschitz(d, &floored);
  CHECK_FALSE(floored);
  CHECK(L >= 0.999 * lambda);
  CHECK(L <= 1.02 * lambda);

  // the map never sees the data, so scaling it cannot move the estimate
  ProblemSpec s5 = s;
  s5.f = Expression::parse("5*(sin(pi*x)*sin(pi*y))");
  s5.u_d = Expression::parse("5*(exp(-40*(t-0.55)^2)*sin(pi*x)*sin(pi*y))");
  s5.u_T = Expression::parse("5*(0.3*sin(pi*x)*sin(pi*y))");
  const double L5 = estimate_lipschitz(discretize(s5));
  CHECK(L5 == L);
}

TEST_CASE("accelerated solve matches the scalar shrinkage closed form") {
  // one omega node, one control node: the problem collapses to
  // min a x^2/2 - b x + alpha sqrt(m_omega) |x|
  ProblemSpec s;
  s.nx = 2;
  s.ny = 2;
  s.T = 1.0;
  s.M = 4;
  s.beta = 0.5;
  s.f = Expression::parse("0");
  s.u0 = Expression::parse("0");
  s.u_d = Expression::parse("sin(pi*x)*sin(pi*y)");
  s.u_T = Expression::parse("x*y");
  s.has_control = true;
  s.omega = {0.0, 0.0, 0.5, 0.5};
  s.window_a = 0.5;
  s.window_b = 0.5;
  s.alpha = 1.0;

  const Discretization d = discretize(s);
  REQUIRE(d.n_omega() == 1);
  REQUIRE(d.grid.n_controls() == 1);

  const auto at = [&](double x) {
    DiscreteControl q = DiscreteControl::zeros(1, 1);
    q.groups[0][0] = x;
    return objective(d, q).smooth;
  };
  const double j0 = at(0.0), jp = at(1.0), jm = at(-1.0);
  const double a = jp + jm - 2.0 * j0;
  const double b = 0.5 * (jm - jp);
  REQUIRE(a > 0.0);
  REQUIRE(b != 0.0);

  DiscreteControl unit = DiscreteControl::zeros(1, 1);
  unit.groups[0][0] = 1.0;
  const double sm = m_norm(d, unit);  // sqrt of the 1x1 omega mass

  // the zero threshold is |b|/sqrt(m_omega): the quadratic fit and the
  // adjoint-based bound must agree
  const double a0 = alpha_zero_bound(d);
  CHECK(a0 == doctest::Approx(std::abs(b) / sm).epsilon(1e-10));

  ProblemSpec sa = s;
  sa.alpha = 0.4 * a0;
  const Discretization da = discretize(sa);
  FistaOptions opt;
  opt.tol_bound = 1e-10 * sa.alpha;
  opt.tol_align = 1e-10;
  opt.max_iter = 50000;
  const auto [q, rep] = solve_fista(da, opt);
  REQUIRE(rep.converged);

  const double shrunk =
      (b > 0 ? 1.0 : -1.0) * (std::abs(b) - sa.alpha * sm) / a;
  CHECK(std::abs(q.groups[0][0] - shrunk) <= 1e-8 * std::max(1.0, std::abs(shrunk)));
  REQUIRE(rep.support.size() == 1);
  CHECK(rep.support[0] == d.grid.k_lo);
}

TEST_CASE("penalty at or above the zero threshold returns the zero control") {
  ProblemSpec s = control_spec(8, 16);
  const double a0 = alpha_zero_bound(discretize(s));
  REQUIRE(a0 > 0.0);

  for (const double factor : {1.0, 1.25}) {
    CAPTURE(factor);
    s.alpha = factor * a0;
    const auto [q, rep] = solve_fista(discretize(s));
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    CHECK(rep.support.empty());
    CHECK(rep.j_sparse == 0.0);
    CHECK(rep.r_bound == 0.0);
    CHECK(rep.r_align == 0.0);
    CHECK(rep.gap == 0.0);
    for (const auto& g : q.groups)
      for (double x : g) CHECK(x == 0.0);
  }
}

TEST_CASE("optimality certificate accepts converged runs and flags perturbations") {
  ProblemSpec s = control_spec(8, 16);
  const double a0 = alpha_zero_bound(discretize(s));

  s.alpha = 10.0 * a0;
  const Discretization dh = discretize(s);
  const Certificate huge = optimality_certificate(
      dh, DiscreteControl::zeros(dh.grid.n_controls(), dh.n_omega()));
  CHECK(huge.r_bound == 0.0);
  CHECK(huge.r_align == 0.0);
  CHECK(huge.gap == 0.0);

  s.alpha = 0.3 * a0;
  const Discretization d = discretize(s);
  const auto [q, rep] = solve_fista(d);
  REQUIRE(rep.converged);
  CHECK(rep.r_bound <= 1e-6 * s.alpha);
  CHECK(rep.r_align <= 1e-6);
  CHECK(rep.gap <= 1e-8 * (1.0 + std::abs(rep.j_total)));
  REQUIRE_FALSE(rep.support.empty());
  CHECK(rep.support.size() < static_cast<size_t>(d.grid.n_controls()));
  for (int m : rep.support) {
    CHECK(m >= d.grid.k_lo);
    CHECK(m <= d.grid.k_hi);
  }

  // a fresh certificate reproduces the report exactly
  const Certificate cert = optimality_certificate(d, q);
  CHECK(cert.r_bound == rep.r_bound);
  CHECK(cert.r_align == rep.r_align);
  CHECK(cert.gap == rep.gap);

  // inflating one active group must break the pairing identity
  size_t widest = 0;
  for (size_t j = 1; j < rep.group_norms.size(); ++j)
    if (rep.group_norms[j] > rep.group_norms[widest]) widest = j;
  DiscreteControl bad = q;
  for (double& x : bad.groups[widest]) x *= 1.1;
  const Certificate flagged = optimality_certificate(d, bad);
  CHECK(flagged.gap > 1e-7);
  CHECK(flagged.gap > 100.0 * cert.gap);
}

TEST_CASE("plain proximal gradient is monotone and cannot beat the accelerated solve") {
  ProblemSpec s = control_spec(8, 16);
  const double a0 = alpha_zero_bound(discretize(s));
  s.alpha = 0.3 * a0;
  const Discretization d = discretize(s);

  FistaOptions opt;
  opt.max_iter = 400;
  const auto [q, rep] = solve_fista(d, opt);
  REQUIRE(rep.converged);
  const double L = rep.lipschitz;

  DiscreteControl p = DiscreteControl::zeros(d.grid.n_controls(), d.n_omega());
  double prev = objective(d, p).total;
  for (int it = 0; it < 10 * opt.max_iter; ++it) {
    p = pg_step(d, p, L);
    const double now = objective(d, p).total;
    CHECK(now <= prev + 1e-12 * (1.0 + std::abs(prev)));
    prev = now;
  }
  CHECK(rep.j_total <= prev + 1e-8 * (1.0 + std::abs(prev)));
}

TEST_CASE("a tightly converged control is a proximal fixed point and conversely") {
  ProblemSpec s = control_spec(8, 16);
  const double a0 = alpha_zero_bound(discretize(s));
  s.alpha = 0.3 * a0;
  const Discretization d = discretize(s);

  FistaOptions opt;
  opt.tol_bound = 1e-10 * s.alpha;
  opt.tol_align = 1e-10;
  opt.max_iter = 30000;
  const auto [q, rep] = solve_fista(d, opt);
  REQUIRE(rep.converged);
  CHECK(fixed_point_residual(d, q, rep.lipschitz) <= 1e-8 * (1.0 + m_norm(d, q)));

  // far from optimality both the fixed-point residual and the certificate
  // must be loud
  const DiscreteControl r = random_control(d, 5, a0);
  CHECK(fixed_point_residual(d, r, rep.lipschitz) > 1e-4 * (1.0 + m_norm(d, r)));
  const Certificate cert = optimality_certificate(d, r);
  CHECK(std::max(cert.r_bound / s.alpha, cert.r_align) > 1e-3);
}

TEST_CASE("restart objectives are non-increasing and supports stay sparse") {
  ProblemSpec s = control_spec(8, 16);
  const double a0 = alpha_zero_bound(discretize(s));

  s.alpha = 0.3 * a0;
  const auto [q, rep] = solve_fista(discretize(s));
  REQUIRE(rep.converged);
  CHECK(rep.restarts == static_cast<int>(rep.objective_at_restarts.size()));
  REQUIRE(rep.restarts >= 1);
  for (size_t i = 1; i < rep.objective_at_restarts.size(); ++i) {
    const double prev = rep.objective_at_restarts[i - 1];
    CHECK(rep.objective_at_restarts[i] <= prev + 1e-12 * (1.0 + std::abs(prev)));
  }

  // moderate penalties keep the active set a nonempty strict subset
  for (const double factor : {0.1, 0.9}) {
    CAPTURE(factor);
    s.alpha = factor * a0;
    const Discretization d = discretize(s);
    const auto [qf, rf] = solve_fista(d);
    REQUIRE(rf.converged);
    CHECK(rf.support.size() > 0);
    CHECK(rf.support.size() < static_cast<size_t>(d.grid.n_controls()));
  }
}

TEST_CASE("seeded initial iterates agree on the solution") {
  ProblemSpec s = control_spec(8, 16);
  const double a0 = alpha_zero_bound(discretize(s));
  s.alpha = 0.3 * a0;
  const Discretization d = discretize(s);

  const DiscreteControl i1 = random_control(d, 21, 0.5 * a0);
  const DiscreteControl i2 = random_control(d, 22, 0.5 * a0);
  FistaOptions o1, o2;
  o1.init = &i1;
  o2.init = &i2;
  const auto [qa, ra] = solve_fista(d, o1);
  const auto [qb, rb] = solve_fista(d, o2);
  REQUIRE(ra.converged);
  REQUIRE(rb.converged);
  CHECK(ra.support == rb.support);
  CHECK(std::abs(ra.j_total - rb.j_total) <= 1e-8 * (1.0 + std::abs(ra.j_total)));
}

TEST_CASE("scaling the problem data scales the control linearly") {
  ProblemSpec s = control_spec(8, 16);
  const double a0 = alpha_zero_bound(discretize(s));
  s.alpha = 0.3 * a0;

  ProblemSpec s2 = s;
  s2.f = Expression::parse("2*(sin(pi*x)*sin(pi*y))");
  s2.u_d = Expression::parse("2*(exp(-40*(t-0.55)^2)*sin(pi*x)*sin(pi*y))");
  s2.u_T = Expression::parse("2*(0.3*sin(pi*x)*sin(pi*y))");
  s2.alpha = 2.0 * s.alpha;

  const Discretization d1 = discretize(s);
  const Discretization d2 = discretize(s2);

  // doubling is exact in floating point, so everything doubles bitwise
  CHECK(alpha_zero_bound(d2) == 2.0 * a0);
  CHECK(estimate_lipschitz(d2) == estimate_lipschitz(d1));

  const auto [q1, r1] = solve_fista(d1);
  const auto [q2, r2] = solve_fista(d2);
  REQUIRE(r1.converged);
  REQUIRE(r2.converged);
  CHECK(r1.iterations == r2.iterations);
  CHECK(r1.support == r2.support);
  for (size_t m = 0; m < q1.groups.size(); ++m)
    for (size_t i = 0; i < q1.groups[m].size(); ++i)
      CHECK(q2.groups[m][i] == 2.0 * q1.groups[m][i]);
}

TEST_CASE("alpha threshold is linear in the data and tracks the window") {
  // matched data: nothing to correct, so the threshold vanishes
  ProblemSpec z = control_spec(8, 16);
  z.f = Expression::parse("0");
  z.u_d = Expression::parse("0");
  z.u_T = Expression::parse("0");
  CHECK(alpha_zero_bound(discretize(z)) == 0.0);

  // the tracking misfit lives early in time; the adjoint only sees the part
  // of it after the window, so later windows feel less of it
  ProblemSpec s = control_spec(8, 16);
  s.beta = 0.0;
  s.f = Expression::parse("0");
  s.u_d = Expression::parse("exp(-8*t)*sin(pi*x)*sin(pi*y)");
  s.u_T = Expression::parse("0");
  double prev = std::numeric_limits<double>::infinity();
  for (const double a : {0.25, 0.375, 0.5, 0.625}) {
    s.window_a = a;
    s.window_b = a + 0.25;
    const double bound = alpha_zero_bound(discretize(s));
    CHECK(bound > 0.0);
    CHECK(bound < prev);
    prev = bound;
  }
}

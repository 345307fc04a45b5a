#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "stmc/fem.hpp"
#include "stmc/mesh.hpp"
#include "stmc/time_grid.hpp"

using namespace stmc;

TEST_CASE("uniform grid basics") {
  const TimeGrid g = build_uniform_grid(2.0, 4);
  REQUIRE(g.t.size() == 5u);
  CHECK(g.t[0] == 0.0);
  CHECK(g.t[4] == 2.0);
  CHECK(g.tau[0] == 0.0);
  for (int m = 1; m <= 4; ++m) CHECK(g.tau[m] == doctest::Approx(0.5));
  CHECK(g.tau_max == doctest::Approx(0.5));
  CHECK(!g.has_window);
  CHECK(g.n_controls() == 0);
  CHECK(!g.is_control_node(2));
}

TEST_CASE("control node range for aligned windows") {
  const TimeGrid g = build_time_grid(1.0, 8, 0.25, 0.75);
  CHECK(g.k_lo == 2);
  CHECK(g.k_hi == 6);
  CHECK(g.n_controls() == 5);
  CHECK(!g.is_control_node(1));
  CHECK(g.is_control_node(2));
  CHECK(g.is_control_node(6));
  CHECK(!g.is_control_node(7));

  const TimeGrid g2 = build_time_grid(2.0, 4, 0.5, 1.5);
  CHECK(g2.k_lo == 1);
  CHECK(g2.k_hi == 3);
  CHECK(g2.n_controls() == 3);

  // zero-width window: a single control node
  const TimeGrid g3 = build_time_grid(1.0, 4, 0.5, 0.5);
  CHECK(g3.k_lo == 2);
  CHECK(g3.k_hi == 2);
  CHECK(g3.n_controls() == 1);
}

TEST_CASE("window endpoints must sit on grid nodes strictly inside (0,T)") {
  CHECK_THROWS_AS(build_time_grid(1.0, 8, 0.3, 0.7), GridError);
  CHECK_THROWS_AS(build_time_grid(1.0, 8, 0.25, 0.7), GridError);
  CHECK_THROWS_AS(build_time_grid(1.0, 8, 0.0, 0.5), GridError);
  CHECK_THROWS_AS(build_time_grid(1.0, 8, 0.5, 1.0), GridError);
  CHECK_THROWS_AS(build_time_grid(1.0, 8, 0.75, 0.25), GridError);  // empty window
  CHECK_THROWS_AS(build_time_grid(1.0, 2, 0.5, 0.5), GridError);    // M too small
}

TEST_CASE("temporal hats and their integrals") {
  const TimeGrid g = build_time_grid(1.0, 8, 0.25, 0.75);
  for (int m = 0; m <= 8; ++m) {
    CHECK(g.hat(m, g.t[m]) == 1.0);
    if (m > 0) CHECK(g.hat(m, g.t[m - 1]) == 0.0);
    if (m < 8) CHECK(g.hat(m, g.t[m + 1]) == 0.0);
  }
  CHECK(g.hat(3, 0.5 * (g.t[2] + g.t[3])) == doctest::Approx(0.5));
  CHECK(g.hat(3, 0.5 * (g.t[3] + g.t[4])) == doctest::Approx(0.5));
  CHECK(g.hat(0, -0.1) == 0.0);  // outside [0,T]
  CHECK(g.hat(8, 1.1) == 0.0);

  const double tau = 1.0 / 8.0;
  CHECK(hat_integral_on_interval(g, 3, 3) == doctest::Approx(tau / 2));
  CHECK(hat_integral_on_interval(g, 3, 4) == doctest::Approx(tau / 2));
  CHECK(hat_integral_on_interval(g, 3, 5) == 0.0);
  CHECK(hat_integral_support(g, 3) == doctest::Approx(tau));
  CHECK(hat_integral_support(g, 0) == doctest::Approx(tau / 2));
  CHECK(hat_integral_support(g, 8) == doctest::Approx(tau / 2));

  // window [t_2, t_6]: edge hats keep only their inner half
  CHECK(hat_integral_window(g, 2) == doctest::Approx(tau / 2));
  CHECK(hat_integral_window(g, 4) == doctest::Approx(tau));
  CHECK(hat_integral_window(g, 6) == doctest::Approx(tau / 2));
}

TEST_CASE("total variation of atoms and sign-changing densities") {
  TemporalMeasure q;
  q.atoms.push_back({0.3, 2.0});
  q.atoms.push_back({0.5, -3.0});
  CHECK(q.total_variation() == doctest::Approx(5.0));

  // linear density with a root inside the cell
  TemporalMeasure lin;
  lin.cells.push_back({0.0, 1.0, {-0.5, 1.0, 0.0}});  // t - 0.5
  CHECK(lin.total_variation() == doctest::Approx(0.25).epsilon(1e-13));

  // quadratic with two interior roots: (t-1/4)(t-3/4) on [0,1]
  TemporalMeasure quad;
  quad.cells.push_back({0.0, 1.0, {3.0 / 16.0, -1.0, 1.0}});
  double riemann = 0.0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const double t = (i + 0.5) / N;
    riemann += std::abs(3.0 / 16.0 - t + t * t) / N;
  }
  CHECK(quad.total_variation() == doctest::Approx(riemann).epsilon(1e-8));
}

TEST_CASE("lambda_tau on atoms reproduces hat weights") {
  const TimeGrid g = build_time_grid(1.0, 8, 0.25, 0.75);
  TemporalMeasure q;
  const double ta = 0.4009;
  q.atoms.push_back({ta, 2.5});
  const std::vector<double> w = lambda_tau(q, g);
  REQUIRE(w.size() == 5u);
  CHECK(w[0] == 0.0);                                     // m = 2
  CHECK(w[1] == doctest::Approx(2.5 * g.hat(3, ta)));     // m = 3
  CHECK(w[2] == doctest::Approx(2.5 * g.hat(4, ta)));     // m = 4
  CHECK(w[3] == 0.0);
  CHECK(w[4] == 0.0);
  CHECK(w[1] + w[2] == doctest::Approx(2.5));

  // an atom on the window edge lands entirely on the edge node
  TemporalMeasure edge;
  edge.atoms.push_back({0.25, 1.0});
  CHECK(lambda_tau(edge, g)[0] == doctest::Approx(1.0));

  // atoms outside the window are rejected
  TemporalMeasure out;
  out.atoms.push_back({0.1, 1.0});
  CHECK_THROWS_AS(lambda_tau(out, g), GridError);
}

TEST_CASE("lambda_tau on a constant density gives the window hat integrals") {
  const TimeGrid g = build_time_grid(1.0, 8, 0.25, 0.75);
  TemporalMeasure q;
  q.cells.push_back({0.25, 0.75, {1.0, 0.0, 0.0}});
  const std::vector<double> w = lambda_tau(q, g);
  for (int j = 0; j < 5; ++j)
    CHECK(w[j] == doctest::Approx(hat_integral_window(g, g.k_lo + j)).epsilon(1e-14));
}

TEST_CASE("interpolation duality holds exactly") {
  const TimeGrid g = build_time_grid(1.0, 8, 0.25, 0.75);
  auto v = [](double t) { return std::sin(3.0 * t) + t * t - 0.3; };

  std::mt19937 rng(101);
  std::uniform_real_distribution<double> pos(0.25, 0.75);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int rep = 0; rep < 25; ++rep) {
    TemporalMeasure q;
    q.atoms.push_back({pos(rng), coef(rng)});
    q.atoms.push_back({pos(rng), coef(rng)});
    const double a = pos(rng), b = pos(rng);
    if (a < b) q.cells.push_back({a, b, {coef(rng), coef(rng), coef(rng)}});
    const auto [lhs, rhs] = pairing_duality_check(q, v, g);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("lambda_tau is a contraction in total variation") {
  std::mt19937 rng(202);
  std::uniform_real_distribution<double> pos(0.25, 0.75);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_int_distribution<int> n_atoms(0, 4);
  std::uniform_int_distribution<int> n_cells(0, 2);
  int violations = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const TimeGrid g = build_time_grid(1.0, 8, 0.25, 0.75);
    TemporalMeasure q;
    const int na = n_atoms(rng), nc = n_cells(rng);
    for (int i = 0; i < na; ++i) q.atoms.push_back({pos(rng), coef(rng)});
    for (int i = 0; i < nc; ++i) {
      double a = pos(rng), b = pos(rng);
      if (a > b) std::swap(a, b);
      if (a < b) q.cells.push_back({a, b, {coef(rng), coef(rng), coef(rng)}});
    }
    const std::vector<double> w = lambda_tau(q, g);
    double discrete_tv = 0.0;
    for (double x : w) discrete_tv += std::abs(x);
    if (discrete_tv > q.total_variation() * (1.0 + 1e-14) + 1e-15) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("window interpolant evaluates hats of the control nodes") {
  const TimeGrid g = build_time_grid(1.0, 8, 0.25, 0.75);
  const std::vector<double> nodal = {1.0, 2.0, -1.0, 0.5, 3.0};
  for (int j = 0; j < 5; ++j)
    CHECK(eval_window_interpolant(nodal, g, g.t[g.k_lo + j]) ==
          doctest::Approx(nodal[j]));
  CHECK(eval_window_interpolant(nodal, g, 0.5 * (g.t[2] + g.t[3])) ==
        doctest::Approx(0.5 * (1.0 + 2.0)));
  // outside the window the edge hat decays linearly to zero
  CHECK(eval_window_interpolant(nodal, g, 0.5 * (g.t[1] + g.t[2])) ==
        doctest::Approx(0.5));
  CHECK(eval_window_interpolant(nodal, g, 0.1) == 0.0);
}

TEST_CASE("pi_tau samples at control nodes") {
  const TimeGrid g = build_time_grid(1.0, 8, 0.25, 0.75);
  const std::vector<double> s = pi_tau([](double t) { return 2.0 * t + 1.0; }, g);
  REQUIRE(s.size() == 5u);
  for (int j = 0; j < 5; ++j) CHECK(s[j] == doctest::Approx(2.0 * g.t[2 + j] + 1.0));
}

TEST_CASE("lambda_sigma is the identity on discrete controls") {
  Mesh mesh = build_structured_mesh({0, 0, 1, 1}, 8, 8);
  mesh = mark_subdomain(std::move(mesh), {0.25, 0.25, 0.75, 0.75});
  const SparseMatrix Mw =
      assemble_mass(mesh, NodeSet::Omega, IntegrationDomain::Omega);
  const TimeGrid g = build_time_grid(1.0, 8, 0.25, 0.75);

  std::mt19937 rng(55);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  SpaceTimeMeasure q;
  std::vector<std::vector<double>> want;
  for (int m = g.k_lo; m <= g.k_hi; ++m) {
    std::vector<double> prof(mesh.n_omega());
    for (double& x : prof) x = coef(rng);
    want.push_back(prof);
    q.field_atoms.push_back({g.t[m], std::move(prof)});
  }
  const DiscreteControl back = lambda_sigma(q, mesh, Mw, g);
  REQUIRE(back.groups.size() == want.size());
  for (size_t j = 0; j < want.size(); ++j)
    for (size_t i = 0; i < want[j].size(); ++i)
      CHECK(std::abs(back.groups[j][i] - want[j][i]) <= 1e-10);
}

TEST_CASE("lambda_sigma projects analytic profiles") {
  Mesh mesh = build_structured_mesh({0, 0, 1, 1}, 8, 8);
  mesh = mark_subdomain(std::move(mesh), {0.25, 0.25, 0.75, 0.75});
  const SparseMatrix Mw =
      assemble_mass(mesh, NodeSet::Omega, IntegrationDomain::Omega);
  const TimeGrid g = build_time_grid(1.0, 8, 0.25, 0.75);

  auto f = [](double x, double y) { return x * x + 0.5 * y; };
  SpaceTimeMeasure q;
  q.func_atoms.push_back({g.t[3], f});
  const DiscreteControl got = lambda_sigma(q, mesh, Mw, g);
  const NodalField ref = l2_project(mesh, Mw, NodeSet::Omega, f);

  const int j = 3 - g.k_lo;
  for (int i = 0; i < mesh.n_omega(); ++i)
    CHECK(got.groups[j][i] == doctest::Approx(ref.v[i]).epsilon(1e-10));
  // all other groups stay zero
  for (size_t jj = 0; jj < got.groups.size(); ++jj) {
    if (static_cast<int>(jj) == j) continue;
    for (double x : got.groups[jj]) CHECK(x == 0.0);
  }
}

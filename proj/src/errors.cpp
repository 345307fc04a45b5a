#include "stmc/errors.hpp"

#include <cmath>
#include <stdexcept>

#include "stmc/fem.hpp"
#include "stmc/kernels.hpp"

namespace stmc {

namespace {

// 4-point Gauss-Legendre on [-1, 1]
constexpr double kGx[4] = {-0.8611363115940526, -0.3399810435848563,
                           0.3399810435848563, 0.8611363115940526};
constexpr double kGw[4] = {0.3478548451374538, 0.6521451548625461,
                           0.6521451548625461, 0.3478548451374538};

std::vector<double> to_vertex_values(const Mesh& mesh,
                                     const std::vector<double>& interior) {
  std::vector<double> full(mesh.n_vertices(), 0.0);
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    const int k = mesh.interior_index[v];
    if (k >= 0) full[v] = interior[k];
  }
  return full;
}

// || u_h - f ||^2_{L2} with the edge-midpoint rule (exact for the P1 part)
template <class F>
double l2_sq_diff(const Mesh& mesh, const std::vector<double>& vertex_values, F&& f) {
  double acc = 0.0;
  for (size_t e = 0; e < mesh.triangles.size(); ++e) {
    const std::array<int, 3>& tri = mesh.triangles[e];
    const double w = mesh.tri_area(static_cast<int>(e)) / 3.0;
    for (int v = 0; v < 3; ++v) {
      const int a = tri[v], b = tri[(v + 1) % 3];
      const double mx = 0.5 * (mesh.vx[a] + mesh.vx[b]);
      const double my = 0.5 * (mesh.vy[a] + mesh.vy[b]);
      const double uh = 0.5 * (vertex_values[a] + vertex_values[b]);
      const double diff = uh - f(mx, my);
      acc += w * diff * diff;
    }
  }
  return acc;
}

double mass_sq(const SparseMatrix& mass, const std::vector<double>& v) {
  const std::vector<double> mv = mass.mul(v);
  return kern::dot(mv.data(), v.data(), v.size());
}

} // namespace

MmsStateErrors mms_state_errors(const Discretization& d, const DiscreteState& s,
                                const Expression& u_ex) {
  MmsStateErrors err;
  double l2l2_sq = 0.0, mid_sq = 0.0;
  for (int m = 1; m <= d.spec.M; ++m) {
    const std::vector<double> vert = to_vertex_values(d.mesh, s.u[m - 1]);
    const double tau = d.grid.tau[m];
    const double mid = 0.5 * (d.grid.t[m - 1] + d.grid.t[m]);
    for (int g = 0; g < 4; ++g) {
      const double tg = mid + 0.5 * tau * kGx[g];
      l2l2_sq += 0.5 * tau * kGw[g] *
                 l2_sq_diff(d.mesh, vert,
                            [&](double x, double y) { return u_ex.eval(x, y, tg); });
    }
    mid_sq += tau * l2_sq_diff(d.mesh, vert, [&](double x, double y) {
                return u_ex.eval(x, y, mid);
              });
  }
  err.l2l2 = std::sqrt(l2l2_sq);
  err.midpoint = std::sqrt(mid_sq);

  const std::vector<double> vterm = to_vertex_values(d.mesh, s.terminal);
  err.terminal = std::sqrt(l2_sq_diff(d.mesh, vterm, [&](double x, double y) {
    return u_ex.eval(x, y, d.spec.T);
  }));
  return err;
}

std::vector<std::vector<double>> backward_interval_loads(const Discretization& d,
                                                         const Expression& g) {
  const std::vector<int> elems = all_elements(d.mesh);
  std::vector<std::vector<double>> G(d.spec.M + 1);
  const double goff = 0.5 / std::sqrt(3.0);
  for (int m = 1; m <= d.spec.M; ++m) {
    G[m].assign(d.n(), 0.0);
    const double tau = d.grid.tau[m];
    for (int gp = 0; gp < 2; ++gp) {
      const double tg = d.grid.t[m - 1] + (0.5 + (gp == 0 ? -goff : goff)) * tau;
      const std::vector<double> load = spatial_load(
          d.mesh, NodeSet::Interior, elems,
          [&](double x, double y) { return g.eval(x, y, tg); });
      kern::axpy(0.5 * tau, load.data(), G[m].data(), load.size());
    }
  }
  return G;
}

double adjoint_sup_error(const Discretization& d, const DiscreteAdjoint& z,
                         const Expression& z_ex) {
  double worst = 0.0;
  for (int m = 0; m <= d.spec.M; ++m) {
    const std::vector<double> vert = to_vertex_values(d.mesh, z.phi[m]);
    const double tm = d.grid.t[m];
    worst = std::max(worst, l2_sq_diff(d.mesh, vert, [&](double x, double y) {
              return z_ex.eval(x, y, tm);
            }));
  }
  return std::sqrt(worst);
}

std::vector<double> embed_p1(const Mesh& coarse, const Mesh& fine,
                             const std::vector<double>& coarse_interior) {
  const Rect& a = coarse.domain;
  const Rect& b = fine.domain;
  if (std::abs(a.x0 - b.x0) > 1e-12 || std::abs(a.y0 - b.y0) > 1e-12 ||
      std::abs(a.x1 - b.x1) > 1e-12 || std::abs(a.y1 - b.y1) > 1e-12)
    throw std::invalid_argument("embed_p1: meshes cover different domains");
  if (fine.nx % coarse.nx != 0 || fine.ny % coarse.ny != 0)
    throw std::invalid_argument("embed_p1: fine mesh is not a nested refinement");
  const int rx = fine.nx / coarse.nx;
  const int ry = fine.ny / coarse.ny;

  const std::vector<double> cv = to_vertex_values(coarse, coarse_interior);
  auto coarse_vertex = [&](int ix, int iy) {
    return cv[static_cast<size_t>(iy) * (coarse.nx + 1) + ix];
  };

  std::vector<double> out(fine.n_interior(), 0.0);
  for (int v : fine.interior_nodes) {
    const int fi = v % (fine.nx + 1);
    const int fj = v / (fine.nx + 1);
    const int ix = fi / rx, iy = fj / ry;
    const double xi = static_cast<double>(fi - ix * rx) / rx;
    const double eta = static_cast<double>(fj - iy * ry) / ry;
    // both triangles of the coarse cell share the (0,0)-(1,1) diagonal,
    // matching the fine cells, so the transfer is nodal-exact
    const double va = coarse_vertex(ix, iy);
    const double vb = coarse_vertex(ix + 1, iy);
    const double vc = coarse_vertex(ix + 1, iy + 1);
    const double vd = coarse_vertex(ix, iy + 1);
    double val;
    if (xi >= eta)
      val = va + (vb - va) * xi + (vc - vb) * eta;
    else
      val = va + (vc - vd) * xi + (vd - va) * eta;
    out[fine.interior_index[v]] = val;
  }
  return out;
}

StateDistance state_error_on_reference(const Discretization& ref,
                                       const DiscreteState& s_ref, const Mesh& coarse,
                                       const TimeGrid& coarse_grid,
                                       const DiscreteState& s_coarse) {
  const int Mr = ref.spec.M;
  const int Mc = coarse_grid.M;
  if (Mr % Mc != 0 || std::abs(ref.grid.T - coarse_grid.T) > 1e-12 * ref.grid.T)
    throw std::invalid_argument("reference time grid is not a nested refinement");
  const int rt = Mr / Mc;

  std::vector<std::vector<double>> emb(Mc);
  for (int mc = 1; mc <= Mc; ++mc)
    emb[mc - 1] = embed_p1(coarse, ref.mesh, s_coarse.u[mc - 1]);
  const std::vector<double> emb_term = embed_p1(coarse, ref.mesh, s_coarse.terminal);

  StateDistance dist;
  std::vector<double> diff(ref.n());
  for (int k = 1; k <= Mr; ++k) {
    const std::vector<double>& uc = emb[(k - 1) / rt];
    const std::vector<double>& ur = s_ref.u[k - 1];
    for (int i = 0; i < ref.n(); ++i) diff[i] = ur[i] - uc[i];
    dist.l2l2_sq += ref.grid.tau[k] * mass_sq(ref.mass, diff);
  }
  for (int i = 0; i < ref.n(); ++i) diff[i] = s_ref.terminal[i] - emb_term[i];
  dist.terminal_sq = mass_sq(ref.mass, diff);
  return dist;
}

double control_pairing(const Discretization& d, const DiscreteControl& q,
                       const Expression& v) {
  if (!d.grid.has_window)
    throw std::invalid_argument("control_pairing: grid has no control window");
  double s = 0.0;
  for (int m = d.grid.k_lo; m <= d.grid.k_hi; ++m) {
    const double tm = d.grid.t[m];
    const std::vector<double> load = spatial_load(
        d.mesh, NodeSet::Omega, d.mesh.omega_elements,
        [&](double x, double y) { return v.eval(x, y, tm); });
    const std::vector<double>& qm = q.groups[m - d.grid.k_lo];
    s += kern::dot(qm.data(), load.data(), qm.size());
  }
  return s;
}

double grad_l2l2_norm(const Discretization& d, const DiscreteState& s) {
  double acc = 0.0;
  for (int m = 1; m <= d.spec.M; ++m) {
    const std::vector<double> ku = d.stiffness.mul(s.u[m - 1]);
    acc += d.grid.tau[m] * kern::dot(ku.data(), s.u[m - 1].data(), ku.size());
  }
  return std::sqrt(std::max(0.0, acc));
}

double terminal_l2_norm(const Discretization& d, const DiscreteState& s) {
  return std::sqrt(std::max(0.0, mass_sq(d.mass, s.terminal)));
}

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& err) {
  if (x.size() != err.size()) throw std::invalid_argument("fit_rate: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(err[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  RateFit fit;
  fit.points = n;
  if (n >= 2) {
    const double det = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy * sxx - sx * sxy) / det;
  }
  return fit;
}

} // namespace stmc

#include "stmc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "stmc/adjoint_solver.hpp"
#include "stmc/csv.hpp"
#include "stmc/fem.hpp"
#include "stmc/kernels.hpp"
#include "stmc/mesh.hpp"
#include "stmc/state_solver.hpp"
#include "stmc/time_grid.hpp"

namespace stmc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

// ---- config parsing ---------------------------------------------------------

const json& need(const json& j, const char* key, const char* ctx) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string(ctx) + " is missing required key '" + key + "'", -1,
                      key);
  return *it;
}

double need_num(const json& j, const char* key, const char* ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number())
    throw ConfigError(std::string(ctx) + " key '" + key + "' must be a number", -1, key);
  return v.get<double>();
}

int need_int(const json& j, const char* key, const char* ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number_integer())
    throw ConfigError(std::string(ctx) + " key '" + key + "' must be an integer", -1,
                      key);
  return v.get<int>();
}

Expression need_expr(const json& j, const char* key, const char* ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_string())
    throw ConfigError(std::string(ctx) + " key '" + key + "' must be an expression string",
                      -1, key);
  try {
    return Expression::parse(v.get<std::string>());
  } catch (const ExprError& e) {
    throw ConfigError(std::string(ctx) + " key '" + key + "': " + e.what(),
                      static_cast<long>(e.offset), key);
  }
}

Rect need_rect(const json& j, const char* key, const char* ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_object())
    throw ConfigError(std::string(ctx) + " key '" + key +
                          "' must be an object with x0, y0, x1, y1",
                      -1, key);
  Rect r{need_num(v, "x0", key), need_num(v, "y0", key), need_num(v, "x1", key),
         need_num(v, "y1", key)};
  if (!(r.x1 > r.x0) || !(r.y1 > r.y0))
    throw ConfigError(std::string(ctx) + " key '" + key + "' is a degenerate rectangle",
                      -1, key);
  return r;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const char* ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError(std::string(ctx) + " has unknown key '" + it.key() + "'", -1,
                        it.key());
  }
}

json parse_json_text(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": " + e.what(), static_cast<long>(e.byte));
  }
}

} // namespace

RunConfig load_config(const std::string& path) {
  RunConfig c;
  c.text = read_file(path);
  const json j = parse_json_text(c.text, "config JSON");
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(j,
                 {"domain", "nx", "ny", "T", "M", "beta", "f", "u0", "u_d", "u_T",
                  "control", "optimizer", "mms"},
                 "config");

  c.spec.domain = need_rect(j, "domain", "config");
  c.spec.nx = need_int(j, "nx", "config");
  c.spec.ny = need_int(j, "ny", "config");
  c.spec.T = need_num(j, "T", "config");
  c.spec.M = need_int(j, "M", "config");
  c.spec.beta = need_num(j, "beta", "config");
  c.spec.f = need_expr(j, "f", "config");
  c.spec.u0 = need_expr(j, "u0", "config");
  c.spec.u_d = need_expr(j, "u_d", "config");
  c.spec.u_T = need_expr(j, "u_T", "config");

  if (j.contains("control")) {
    const json& ctl = j["control"];
    reject_unknown(ctl, {"omega", "window", "alpha", "alpha_relative"}, "control");
    c.spec.has_control = true;
    c.spec.omega = need_rect(ctl, "omega", "control");
    const json& win = need(ctl, "window", "control");
    if (!win.is_array() || win.size() != 2 || !win[0].is_number() || !win[1].is_number())
      throw ConfigError("control key 'window' must be an array [a, b]", -1, "window");
    c.spec.window_a = win[0].get<double>();
    c.spec.window_b = win[1].get<double>();

    const bool has_abs = ctl.contains("alpha");
    const bool has_rel = ctl.contains("alpha_relative");
    if (has_abs == has_rel)
      throw ConfigError("control must set exactly one of 'alpha' and 'alpha_relative'",
                        -1, "alpha");
    if (has_abs) {
      c.spec.alpha = need_num(ctl, "alpha", "control");
      if (!(c.spec.alpha > 0.0))
        throw ConfigError("control key 'alpha' must be positive", -1, "alpha");
    } else {
      c.alpha_is_relative = true;
      c.alpha_relative = need_num(ctl, "alpha_relative", "control");
      if (!(c.alpha_relative > 0.0))
        throw ConfigError("control key 'alpha_relative' must be positive", -1,
                          "alpha_relative");
      c.spec.alpha = 1.0;  // placeholder until the threshold is known
    }
  }

  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    reject_unknown(o, {"max_iter", "tol_bound", "tol_align", "restart"}, "optimizer");
    if (o.contains("max_iter")) c.fista.max_iter = need_int(o, "max_iter", "optimizer");
    if (o.contains("tol_bound")) c.fista.tol_bound = need_num(o, "tol_bound", "optimizer");
    if (o.contains("tol_align")) c.fista.tol_align = need_num(o, "tol_align", "optimizer");
    if (o.contains("restart")) {
      if (!o["restart"].is_boolean())
        throw ConfigError("optimizer key 'restart' must be a boolean", -1, "restart");
      c.fista.restart = o["restart"].get<bool>();
    }
  }

  if (j.contains("mms")) {
    const json& m = j["mms"];
    reject_unknown(m, {"exact_u", "exact_z", "z_source"}, "mms");
    c.has_exact_u = true;
    c.exact_u = need_expr(m, "exact_u", "mms");
    const bool hz = m.contains("exact_z"), hs = m.contains("z_source");
    if (hz != hs)
      throw ConfigError("mms needs both 'exact_z' and 'z_source' or neither", -1,
                        "exact_z");
    if (hz) {
      c.has_backward = true;
      c.exact_z = need_expr(m, "exact_z", "mms");
      c.z_source = need_expr(m, "z_source", "mms");
    }
  }
  return c;
}

namespace {

LadderPoint parse_point(const json& v, const char* ctx) {
  if (!v.is_object()) throw ConfigError(std::string(ctx) + " must be an object");
  reject_unknown(v, {"nx", "ny", "M"}, ctx);
  LadderPoint p;
  p.nx = need_int(v, "nx", ctx);
  p.ny = v.contains("ny") ? need_int(v, "ny", ctx) : p.nx;
  p.M = need_int(v, "M", ctx);
  return p;
}

} // namespace

LadderSpec load_ladder(const std::string& path) {
  LadderSpec l;
  l.text = read_file(path);
  const json j = parse_json_text(l.text, "ladder JSON");
  if (!j.is_object()) throw ConfigError("ladder root must be a JSON object");
  reject_unknown(j, {"axis", "points", "reference", "pairing_test"}, "ladder");

  const json& axis = need(j, "axis", "ladder");
  if (!axis.is_string()) throw ConfigError("ladder key 'axis' must be a string", -1, "axis");
  l.axis = axis.get<std::string>();
  if (l.axis != "temporal" && l.axis != "spatial")
    throw ConfigError("ladder axis must be 'temporal' or 'spatial'", -1, "axis");

  const json& pts = need(j, "points", "ladder");
  if (!pts.is_array() || pts.empty())
    throw ConfigError("ladder key 'points' must be a non-empty array", -1, "points");
  for (const json& v : pts) l.points.push_back(parse_point(v, "ladder point"));

  if (j.contains("reference")) {
    l.has_reference = true;
    l.reference = parse_point(j["reference"], "ladder reference");
  }
  if (j.contains("pairing_test")) {
    l.has_pairing = true;
    l.pairing_test = need_expr(j, "pairing_test", "ladder");
  }
  return l;
}

namespace {

void validate_ladder(const LadderSpec& l, bool need_reference) {
  const bool temporal = l.axis == "temporal";
  for (size_t i = 0; i < l.points.size(); ++i) {
    const LadderPoint& p = l.points[i];
    if (p.nx < 2 || p.ny < 2 || p.M < 1)
      throw ConfigError("ladder point has invalid dimensions");
    if (i == 0) continue;
    const LadderPoint& prev = l.points[i - 1];
    if (temporal) {
      if (p.nx != prev.nx || p.ny != prev.ny || p.M <= prev.M)
        throw ConfigError("temporal ladder must keep the mesh fixed and increase M");
    } else {
      if (p.M != prev.M || p.nx <= prev.nx || p.ny <= prev.ny)
        throw ConfigError("spatial ladder must keep M fixed and refine the mesh");
    }
  }
  if (!need_reference) return;
  if (!l.has_reference) throw ConfigError("ladder needs a 'reference' discretization");
  const LadderPoint& r = l.reference;
  for (const LadderPoint& p : l.points) {
    const bool nested = r.nx % p.nx == 0 && r.ny % p.ny == 0 && r.M % p.M == 0;
    const bool finer = r.nx >= p.nx && r.ny >= p.ny && r.M >= p.M &&
                       (r.nx > p.nx || r.ny > p.ny || r.M > p.M);
    if (!nested || !finer)
      throw ConfigError("reference must be a strictly finer nested refinement of every "
                        "ladder point");
  }
}

// ---- worker pool ------------------------------------------------------------

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---- artifact writers -------------------------------------------------------

void write_state_csv(const fs::path& path, const Discretization& d,
                     const DiscreteState& s) {
  CsvWriter w(path.string());
  w.row("m", "t_begin", "t_end", "node", "value");
  for (int m = 1; m <= d.spec.M; ++m)
    for (int i = 0; i < d.n(); ++i)
      w.row(m, d.grid.t[m - 1], d.grid.t[m], d.mesh.interior_nodes[i], s.u[m - 1][i]);
  for (int i = 0; i < d.n(); ++i)
    w.row(d.spec.M + 1, d.spec.T, d.spec.T, d.mesh.interior_nodes[i], s.terminal[i]);
}

void write_adjoint_csv(const fs::path& path, const Discretization& d,
                       const DiscreteAdjoint& adj) {
  CsvWriter w(path.string());
  w.row("m", "t", "node", "value");
  for (int m = 0; m <= d.spec.M; ++m)
    for (int i = 0; i < d.n(); ++i)
      w.row(m, d.grid.t[m], d.mesh.interior_nodes[i], adj.phi[m][i]);
}

void write_control_csv(const fs::path& path, const Discretization& d,
                       const DiscreteControl& q) {
  CsvWriter w(path.string());
  w.row("m", "t", "node", "value");
  for (int m = d.grid.k_lo; m <= d.grid.k_hi; ++m)
    for (int i = 0; i < d.n_omega(); ++i)
      w.row(m, d.grid.t[m], d.mesh.omega_nodes[i], q.groups[m - d.grid.k_lo][i]);
}

void write_group_norms_csv(const fs::path& path, const Discretization& d,
                           const DiscreteControl& q) {
  CsvWriter w(path.string());
  w.row("m", "t", "group_norm");
  for (int m = d.grid.k_lo; m <= d.grid.k_hi; ++m)
    w.row(m, d.grid.t[m], omega_norm(d.omega_mass, q.groups[m - d.grid.k_lo]));
}

// curve of ||g|| over the window; interval midpoints are sampled as well
// since the continuous bound constrains all of I_c, not just the nodes
void write_gradient_curve_csv(const fs::path& path, const Discretization& d,
                              const std::vector<std::vector<double>>& g) {
  CsvWriter w(path.string());
  w.row("m", "t", "grad_norm");
  std::vector<double> mid;
  for (int m = d.grid.k_lo; m <= d.grid.k_hi; ++m) {
    const int j = m - d.grid.k_lo;
    w.row(static_cast<double>(m), d.grid.t[m], omega_norm(d.omega_mass, g[j]));
    if (m < d.grid.k_hi) {
      mid = g[j];
      for (size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (mid[i] + g[j + 1][i]);
      w.row(m + 0.5, 0.5 * (d.grid.t[m] + d.grid.t[m + 1]),
            omega_norm(d.omega_mass, mid));
    }
  }
}

json report_to_json(const Discretization& d, const OptimizerReport& rep, double alpha0,
                    const DiscreteState& s) {
  json r;
  r["alpha"] = d.spec.alpha;
  r["alpha_zero"] = alpha0;
  r["alpha_ratio"] = alpha0 > 0.0 ? d.spec.alpha / alpha0 : 0.0;
  r["beta"] = d.spec.beta;
  r["iterations"] = rep.iterations;
  r["converged"] = rep.converged;
  r["objective"] = {{"total", rep.j_total}, {"smooth", rep.j_smooth},
                    {"sparse", rep.j_sparse}};
  r["certificate"] = {{"r_bound", rep.r_bound}, {"r_align", rep.r_align},
                      {"gap", rep.gap}};
  r["lipschitz"] = rep.lipschitz;
  r["lipschitz_floored"] = rep.lipschitz_floored;
  r["restarts"] = rep.restarts;
  r["objective_at_restarts"] = rep.objective_at_restarts;
  r["support"] = rep.support;
  r["group_norms"] = rep.group_norms;
  r["grad_norms"] = rep.grad_norms;
  r["certificate_evals"] = rep.certificate_evals;
  r["zero_control_via_threshold"] = rep.support.empty() && d.spec.alpha >= alpha0;
  r["state_norms"] = {{"grad_l2l2", grad_l2l2_norm(d, s)},
                      {"terminal_l2", terminal_l2_norm(d, s)}};
  return r;
}

json base_manifest(const char* command, const std::string& config_path,
                   const std::string& config_text) {
  json m;
  m["command"] = command;
  m["config"] = config_path;
  m["config_hash"] = fnv1a64_hex(config_text);
  m["backend"] = kern::active_backend();
  m["workers"] = worker_count();
  return m;
}

void write_error_json(const std::string& out_dir, const std::string& msg, long offset,
                      const std::string& field, int code) {
  std::cerr << "error: " << msg << "\n";
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) return;
  json e;
  e["error"] = msg;
  e["exit_code"] = code;
  if (offset >= 0) e["offset"] = offset;
  if (!field.empty()) e["field"] = field;
  std::ofstream out(fs::path(out_dir) / "error.json", std::ios::binary);
  if (out) out << e.dump(2) << "\n";
}

int guarded(const std::string& out_dir, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    write_error_json(out_dir, e.what(), e.offset, e.field, 1);
    return 1;
  } catch (const ExprError& e) {
    write_error_json(out_dir, e.what(), static_cast<long>(e.offset), "", 1);
    return 1;
  } catch (const SolverError& e) {
    write_error_json(out_dir, e.what(), -1, "", 2);
    return 2;
  } catch (const MeshError& e) {
    write_error_json(out_dir, e.what(), -1, "", 1);
    return 1;
  } catch (const GridError& e) {
    write_error_json(out_dir, e.what(), -1, "", 1);
    return 1;
  } catch (const std::invalid_argument& e) {
    write_error_json(out_dir, e.what(), -1, "", 1);
    return 1;
  } catch (const std::exception& e) {
    write_error_json(out_dir, e.what(), -1, "", 2);
    return 2;
  }
}

ProblemSpec spec_at(const ProblemSpec& base, const LadderPoint& p) {
  ProblemSpec s = base;
  s.nx = p.nx;
  s.ny = p.ny;
  s.M = p.M;
  return s;
}

} // namespace

int worker_count() {
  if (const char* env = std::getenv("STMC_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

int run_solve(const std::string& config_path, const std::string& out_dir) {
  return guarded(out_dir, [&] {
    const auto t0 = Clock::now();
    const RunConfig cfg = load_config(config_path);
    if (!cfg.spec.has_control)
      throw ConfigError("solve requires a 'control' block in the config");
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    Discretization d = discretize(cfg.spec);
    const double setup_s = seconds_since(t0);

    const double alpha0 = alpha_zero_bound(d);
    if (cfg.alpha_is_relative) d.spec.alpha = cfg.alpha_relative * alpha0;

    const auto t1 = Clock::now();
    auto [q, rep] = solve_fista(d, cfg.fista);
    const double solve_s = seconds_since(t1);

    const DiscreteState s = solve_state(d, q);
    const DiscreteAdjoint adj = solve_adjoint(d, s);
    const std::vector<std::vector<double>> g = control_gradient(d, adj);

    write_state_csv(out / "state.csv", d, s);
    write_adjoint_csv(out / "adjoint.csv", d, adj);
    write_control_csv(out / "control.csv", d, q);
    write_group_norms_csv(out / "control_group_norms.csv", d, q);
    write_gradient_curve_csv(out / "gradient_curve.csv", d, g);
    write_json_file(out / "report.json", report_to_json(d, rep, alpha0, s));

    json m = base_manifest("solve", config_path, cfg.text);
    m["artifacts"] = {"state.csv", "adjoint.csv", "control.csv",
                      "control_group_norms.csv", "gradient_curve.csv", "report.json"};
    m["timings"] = {{"setup_seconds", setup_s}, {"optimizer_seconds", solve_s},
                    {"total_seconds", seconds_since(t0)}};
    write_json_file(out / "manifest.json", m);
  });
}

int run_rates(const std::string& config_path, const std::string& ladder_path,
              const std::string& out_dir) {
  return guarded(out_dir, [&] {
    const auto t0 = Clock::now();
    const RunConfig cfg = load_config(config_path);
    if (!cfg.spec.has_control)
      throw ConfigError("rates requires a 'control' block in the config");
    const LadderSpec ladder = load_ladder(ladder_path);
    validate_ladder(ladder, /*need_reference=*/true);
    if (!ladder.has_pairing)
      throw ConfigError("rates ladder needs a 'pairing_test' expression");
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    // reference level: solves first, also fixes alpha when given relatively
    const auto t_ref = Clock::now();
    Discretization d_ref = discretize(spec_at(cfg.spec, ladder.reference));
    const double alpha = cfg.alpha_is_relative
                             ? cfg.alpha_relative * alpha_zero_bound(d_ref)
                             : cfg.spec.alpha;
    d_ref.spec.alpha = alpha;
    auto [q_ref, rep_ref] = solve_fista(d_ref, cfg.fista);
    const DiscreteState s_ref = solve_state(d_ref, q_ref);
    const double pairing_ref = control_pairing(d_ref, q_ref, ladder.pairing_test);
    const double ref_seconds = seconds_since(t_ref);

    struct Row {
      LadderPoint p;
      double h = 0, tau = 0, j = 0, j_err = 0;
      double l2l2_sq = 0, terminal_sq = 0, err_sq = 0, pairing_err = 0;
      double grad_norm = 0, terminal_norm = 0;
      double r_bound = 0, r_align = 0, gap = 0;
      int support_size = 0;
      bool certified = false;
      double seconds = 0;
    };
    const int n = static_cast<int>(ladder.points.size());
    std::vector<Row> rows(n);

    parallel_for(n, [&](int i) {
      const auto tp = Clock::now();
      Row& r = rows[i];
      r.p = ladder.points[i];
      ProblemSpec sp = spec_at(cfg.spec, r.p);
      sp.alpha = alpha;
      const Discretization d = discretize(sp);
      auto [q, rep] = solve_fista(d, cfg.fista);
      const DiscreteState s = solve_state(d, q);
      const StateDistance dist =
          state_error_on_reference(d_ref, s_ref, d.mesh, d.grid, s);

      r.h = d.mesh.h;
      r.tau = d.grid.tau_max;
      r.j = rep.j_total;
      r.j_err = std::abs(rep.j_total - rep_ref.j_total);
      r.l2l2_sq = dist.l2l2_sq;
      r.terminal_sq = dist.terminal_sq;
      r.err_sq = dist.l2l2_sq + d.spec.beta * dist.terminal_sq;
      r.pairing_err =
          std::abs(control_pairing(d, q, ladder.pairing_test) - pairing_ref);
      r.grad_norm = grad_l2l2_norm(d, s);
      r.terminal_norm = terminal_l2_norm(d, s);
      r.r_bound = rep.r_bound;
      r.r_align = rep.r_align;
      r.gap = rep.gap;
      r.support_size = static_cast<int>(rep.support.size());
      r.certified = rep.converged;
      r.seconds = seconds_since(tp);
    });

    {
      CsvWriter w((out / "rates.csv").string());
      w.row("is_reference", "nx", "ny", "M", "h", "tau", "alpha", "j", "j_err",
            "state_l2l2_sq", "state_terminal_sq", "state_err_sq", "pairing_err",
            "grad_norm", "terminal_norm", "support_size", "r_bound", "r_align", "gap",
            "certified");
      for (const Row& r : rows)
        w.row(0, r.p.nx, r.p.ny, r.p.M, r.h, r.tau, alpha, r.j, r.j_err, r.l2l2_sq,
              r.terminal_sq, r.err_sq, r.pairing_err, r.grad_norm, r.terminal_norm,
              r.support_size, r.r_bound, r.r_align, r.gap, r.certified ? 1 : 0);
      w.row(1, ladder.reference.nx, ladder.reference.ny, ladder.reference.M,
            d_ref.mesh.h, d_ref.grid.tau_max, alpha, rep_ref.j_total, 0.0, 0.0, 0.0,
            0.0, 0.0, grad_l2l2_norm(d_ref, s_ref), terminal_l2_norm(d_ref, s_ref),
            static_cast<int>(rep_ref.support.size()), rep_ref.r_bound, rep_ref.r_align,
            rep_ref.gap, rep_ref.converged ? 1 : 0);
    }

    {
      CsvWriter w((out / "rates_fits.csv").string());
      w.row("metric", "variant", "slope", "intercept", "points");
      const bool temporal = ladder.axis == "temporal";
      auto emit = [&](const char* metric, const std::function<double(const Row&)>& get) {
        std::vector<double> xs, es;
        for (const Row& r : rows) {
          if (!r.certified) continue;  // uncertified rows are excluded from fits
          xs.push_back(temporal ? r.tau : r.h);
          es.push_back(get(r));
        }
        const RateFit all = fit_rate(xs, es);
        if (all.points >= 3) w.row(metric, "all", all.slope, all.intercept, all.points);
        if (xs.size() > 1) {
          const RateFit drop = fit_rate({xs.begin() + 1, xs.end()},
                                        {es.begin() + 1, es.end()});
          if (drop.points >= 3)
            w.row(metric, "drop_first", drop.slope, drop.intercept, drop.points);
        }
      };
      emit("j_err", [](const Row& r) { return r.j_err; });
      emit("state_err_sq", [](const Row& r) { return r.err_sq; });
      emit("pairing_err", [](const Row& r) { return r.pairing_err; });
    }

    json m = base_manifest("rates", config_path, cfg.text);
    m["ladder"] = ladder_path;
    m["ladder_hash"] = fnv1a64_hex(ladder.text);
    m["alpha"] = alpha;
    m["artifacts"] = {"rates.csv", "rates_fits.csv"};
    json timings;
    timings["reference_seconds"] = ref_seconds;
    for (const Row& r : rows)
      timings["point_nx" + std::to_string(r.p.nx) + "_M" + std::to_string(r.p.M) +
              "_seconds"] = r.seconds;
    timings["total_seconds"] = seconds_since(t0);
    m["timings"] = timings;
    write_json_file(out / "manifest.json", m);
  });
}

int run_verify_state(const std::string& config_path, const std::string& ladder_path,
                     const std::string& out_dir) {
  return guarded(out_dir, [&] {
    const auto t0 = Clock::now();
    const RunConfig cfg = load_config(config_path);
    if (!cfg.has_exact_u)
      throw ConfigError("verify-state requires an 'mms' block with 'exact_u'");
    if (cfg.spec.has_control)
      throw ConfigError("verify-state runs without a 'control' block");
    const LadderSpec ladder = load_ladder(ladder_path);
    validate_ladder(ladder, /*need_reference=*/false);
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    struct Row {
      LadderPoint p;
      double h = 0, tau = 0;
      MmsStateErrors err;
      double adjoint_sup = 0;
      double seconds = 0;
    };
    const int n = static_cast<int>(ladder.points.size());
    std::vector<Row> rows(n);

    parallel_for(n, [&](int i) {
      const auto tp = Clock::now();
      Row& r = rows[i];
      r.p = ladder.points[i];
      const Discretization d = discretize(spec_at(cfg.spec, r.p));
      r.h = d.mesh.h;
      r.tau = d.grid.tau_max;
      const DiscreteState s = solve_state(d);
      r.err = mms_state_errors(d, s, cfg.exact_u);
      if (cfg.has_backward) {
        const std::vector<std::vector<double>> G =
            backward_interval_loads(d, cfg.z_source);
        const std::vector<double> terminal_rhs = spatial_load(
            d.mesh, NodeSet::Interior, all_elements(d.mesh),
            [&](double x, double y) { return cfg.exact_z.eval(x, y, d.spec.T); });
        DiscreteAdjoint z;
        solve_backward(d, G, terminal_rhs, z);
        r.adjoint_sup = adjoint_sup_error(d, z, cfg.exact_z);
      }
      r.seconds = seconds_since(tp);
    });

    {
      CsvWriter w((out / "verify.csv").string());
      w.row("nx", "ny", "M", "h", "tau", "state_l2l2", "state_terminal",
            "state_midpoint", "adjoint_sup");
      for (const Row& r : rows)
        w.row(r.p.nx, r.p.ny, r.p.M, r.h, r.tau, r.err.l2l2, r.err.terminal,
              r.err.midpoint, r.adjoint_sup);
    }
    {
      CsvWriter w((out / "verify_fits.csv").string());
      w.row("metric", "variant", "slope", "intercept", "points");
      const bool temporal = ladder.axis == "temporal";
      auto emit = [&](const char* metric, const std::function<double(const Row&)>& get) {
        std::vector<double> xs, es;
        for (const Row& r : rows) {
          xs.push_back(temporal ? r.tau : r.h);
          es.push_back(get(r));
        }
        const RateFit all = fit_rate(xs, es);
        if (all.points >= 3) w.row(metric, "all", all.slope, all.intercept, all.points);
        if (xs.size() > 1) {
          const RateFit drop = fit_rate({xs.begin() + 1, xs.end()},
                                        {es.begin() + 1, es.end()});
          if (drop.points >= 3)
            w.row(metric, "drop_first", drop.slope, drop.intercept, drop.points);
        }
      };
      emit("state_l2l2", [](const Row& r) { return r.err.l2l2; });
      emit("state_terminal", [](const Row& r) { return r.err.terminal; });
      emit("state_midpoint", [](const Row& r) { return r.err.midpoint; });
      emit("adjoint_sup", [](const Row& r) { return r.adjoint_sup; });
    }

    json m = base_manifest("verify-state", config_path, cfg.text);
    m["ladder"] = ladder_path;
    m["ladder_hash"] = fnv1a64_hex(ladder.text);
    m["artifacts"] = {"verify.csv", "verify_fits.csv"};
    json timings;
    for (const Row& r : rows)
      timings["point_nx" + std::to_string(r.p.nx) + "_M" + std::to_string(r.p.M) +
              "_seconds"] = r.seconds;
    timings["total_seconds"] = seconds_since(t0);
    m["timings"] = timings;
    write_json_file(out / "manifest.json", m);
  });
}

int run_sparsity(const std::string& config_path, const std::string& alphas,
                 const std::string& out_dir) {
  return guarded(out_dir, [&] {
    const auto t0 = Clock::now();
    const RunConfig cfg = load_config(config_path);
    if (!cfg.spec.has_control)
      throw ConfigError("sparsity requires a 'control' block in the config");

    std::vector<double> sweep;
    {
      std::stringstream ss(alphas);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        size_t pos = 0;
        double v = 0;
        try {
          v = std::stod(tok, &pos);
        } catch (const std::exception&) {
          throw ConfigError("cannot parse alpha value '" + tok + "'");
        }
        if (pos != tok.size() || !(v > 0))
          throw ConfigError("alpha values must be positive numbers, got '" + tok + "'");
        sweep.push_back(v);
      }
    }
    if (sweep.empty()) throw ConfigError("sparsity needs at least one alpha value");
    std::sort(sweep.begin(), sweep.end());

    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    const Discretization d_base = discretize(cfg.spec);
    const double alpha0 = alpha_zero_bound(d_base);

    struct Run {
      double alpha = 0;
      DiscreteControl q;
      OptimizerReport rep;
      double m_norm_val = 0;
      double seconds = 0;
    };
    const int n = static_cast<int>(sweep.size());
    std::vector<Run> runs(n);

    parallel_for(n, [&](int i) {
      const auto tp = Clock::now();
      Run& r = runs[i];
      r.alpha = sweep[i];
      Discretization d = d_base;
      d.spec.alpha = r.alpha;
      auto [q, rep] = solve_fista(d, cfg.fista);
      r.m_norm_val = m_norm(d, q);
      r.q = std::move(q);
      r.rep = std::move(rep);
      r.seconds = seconds_since(tp);
    });

    {
      CsvWriter w((out / "sparsity.csv").string());
      w.row("alpha", "alpha_ratio", "support_size", "m_norm", "j_total", "r_bound",
            "r_align", "gap", "converged");
      for (const Run& r : runs)
        w.row(r.alpha, alpha0 > 0 ? r.alpha / alpha0 : 0.0,
              static_cast<int>(r.rep.support.size()), r.m_norm_val, r.rep.j_total,
              r.rep.r_bound, r.rep.r_align, r.rep.gap, r.rep.converged ? 1 : 0);
    }
    {
      CsvWriter w((out / "active_nodes.csv").string());
      w.row("alpha", "m", "t", "group_norm", "grad_norm");
      for (const Run& r : runs)
        for (int mi : r.rep.support) {
          const int j = mi - d_base.grid.k_lo;
          w.row(r.alpha, mi, d_base.grid.t[mi], r.rep.group_norms[j],
                r.rep.grad_norms[j]);
        }
    }
    {
      json rj;
      rj["alpha_zero"] = alpha0;
      rj["alphas"] = sweep;
      json sizes = json::array();
      bool monotone = true;
      for (int i = 0; i < n; ++i) {
        sizes.push_back(runs[i].rep.support.size());
        if (i > 0 && runs[i].rep.support.size() > runs[i - 1].rep.support.size())
          monotone = false;
      }
      rj["support_sizes"] = sizes;
      rj["support_monotone_nonincreasing"] = monotone;
      write_json_file(out / "sparsity_report.json", rj);
    }

    json m = base_manifest("sparsity", config_path, cfg.text);
    m["alphas"] = sweep;
    m["artifacts"] = {"sparsity.csv", "active_nodes.csv", "sparsity_report.json"};
    json timings;
    for (const Run& r : runs)
      timings["alpha_" + format_double(r.alpha) + "_seconds"] = r.seconds;
    timings["total_seconds"] = seconds_since(t0);
    m["timings"] = timings;
    write_json_file(out / "manifest.json", m);
  });
}

} // namespace stmc

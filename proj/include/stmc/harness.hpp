#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "stmc/errors.hpp"
#include "stmc/expression.hpp"
#include "stmc/optimizer.hpp"
#include "stmc/problem.hpp"

namespace stmc {

// Configuration / input validation failure.  offset is a byte position when
// the failure came from parsing (JSON or an embedded expression), else -1;
// field names the offending config key when known.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg, long offset_ = -1,
                       std::string field_ = {})
      : std::runtime_error(msg), offset(offset_), field(std::move(field_)) {}
  long offset;
  std::string field;
};

// One problem instance as read from a JSON config.  Physical fields are all
// explicit; exactly one of alpha / alpha_relative is given for control runs
// (alpha_relative scales the computed zero-control threshold).
struct RunConfig {
  ProblemSpec spec;
  bool alpha_is_relative = false;
  double alpha_relative = 0.0;
  FistaOptions fista;

  bool has_exact_u = false;
  Expression exact_u;
  bool has_backward = false;
  Expression exact_z, z_source;

  std::string text;  // raw file bytes, fingerprinted into the manifest
};

RunConfig load_config(const std::string& path);

struct LadderPoint {
  int nx = 0, ny = 0, M = 0;
};

// Refinement study: monotone points plus a strictly finer nested reference.
struct LadderSpec {
  std::string axis;  // "temporal" or "spatial"
  std::vector<LadderPoint> points;
  bool has_reference = false;
  LadderPoint reference{};
  bool has_pairing = false;
  Expression pairing_test;
  std::string text;
};

LadderSpec load_ladder(const std::string& path);

// Subcommand drivers.  Each writes its artifacts under out_dir and returns
// the process exit status (0 ok, 1 validation failure, 2 solver failure); on
// failure an error.json with a machine-readable description is left behind.
int run_solve(const std::string& config_path, const std::string& out_dir);
int run_rates(const std::string& config_path, const std::string& ladder_path,
              const std::string& out_dir);
int run_verify_state(const std::string& config_path, const std::string& ladder_path,
                     const std::string& out_dir);
int run_sparsity(const std::string& config_path, const std::string& alphas,
                 const std::string& out_dir);

// ladder worker pool width: STMC_WORKERS env var, default hardware threads
int worker_count();

} // namespace stmc

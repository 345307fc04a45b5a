#include <string>

#include "CLI11.hpp"

#include "stmc/harness.hpp"
#include "stmc/kernels.hpp"

int main(int argc, char** argv) {
  CLI::App app{"space-time measure control: sparse-in-time parabolic control solver"};
  app.require_subcommand(1);

  std::string config, ladder, alphas, out;

  CLI::App* solve = app.add_subcommand(
      "solve", "solve one control problem and write state/adjoint/control artifacts");
  solve->add_option("--config", config, "problem config (JSON)")->required();
  solve->add_option("--out", out, "output directory")->required();

  CLI::App* rates = app.add_subcommand(
      "rates", "refinement study against a nested reference discretization");
  rates->add_option("--config", config, "problem config (JSON)")->required();
  rates->add_option("--ladder", ladder, "refinement ladder (JSON)")->required();
  rates->add_option("--out", out, "output directory")->required();

  CLI::App* verify = app.add_subcommand(
      "verify-state", "manufactured-solution error study for the forward/backward sweeps");
  verify->add_option("--config", config, "problem config with an mms block (JSON)")
      ->required();
  verify->add_option("--ladder", ladder, "refinement ladder (JSON)")->required();
  verify->add_option("--out", out, "output directory")->required();

  CLI::App* sparsity = app.add_subcommand(
      "sparsity", "support of the optimal control across a penalty sweep");
  sparsity->add_option("--config", config, "problem config (JSON)")->required();
  sparsity
      ->add_option("--alphas", alphas, "comma-separated list of penalty values")
      ->required();
  sparsity->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (app.got_subcommand(solve)) return stmc::run_solve(config, out);
  if (app.got_subcommand(rates)) return stmc::run_rates(config, ladder, out);
  if (app.got_subcommand(verify)) return stmc::run_verify_state(config, ladder, out);
  return stmc::run_sparsity(config, alphas, out);
}

// hb: command-line front end (solve / verify / oracle / refine).

#include <CLI11.hpp>
#include <iostream>

#include "hbflow/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Two-fluid Herschel-Bulkley channel solver"};
  app.require_subcommand(1);

  std::string config;
  auto* solve = app.add_subcommand("solve", "solve the transmission problem of a config");
  solve->add_option("config", config, "config file")->required();

  unsigned long long seed = hbflow::VerifyOptions{}.seed;
  bool self_test = false;
  auto* verify = app.add_subcommand("verify", "run the property suite");
  verify->add_option("--seed", seed, "sampling seed");
  verify->add_flag("--self-test", self_test, "corrupt the monotonicity constant; the suite must report it");

  auto* oracle = app.add_subcommand("oracle", "exact two-layer channel profile");
  oracle->add_option("config", config, "config file")->required();

  int levels = 3;
  auto* refine = app.add_subcommand("refine", "mesh refinement study against the oracle");
  refine->add_option("config", config, "config file")->required();
  refine->add_option("--levels", levels, "number of levels")->check(CLI::Range(2, 8));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hbflow::exit_input_error;
  }

  try {
    if (*verify) {
      hbflow::VerifyOptions opt;
      opt.seed = seed;
      opt.corrupt_certificate = self_test;
      return hbflow::run_verify(opt, std::cout);
    }
    const hbflow::RunConfig cfg = hbflow::load_config(config);
    if (*solve) return hbflow::run_solve(cfg, std::cout);
    if (*oracle) return hbflow::run_oracle(cfg, std::cout);
    return hbflow::run_refine(cfg, levels, std::cout);
  } catch (const hbflow::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hbflow::exit_input_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hbflow::exit_not_converged;
  }
}

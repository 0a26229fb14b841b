#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cpl/config.hpp"
#include "cpl/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"compressible Prandtl/thermal layer solver suite"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  int jobs = 1;
  std::uint64_t seed = 12345;

  auto* run = app.add_subcommand("run", "execute a configured case");
  run->add_option("--config", config_path, "configuration file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--jobs", jobs, "worker threads for sweep entries");
  run->add_option("--seed", seed, "seed for the synthetic-field identity checks");

  auto* validate = app.add_subcommand("validate", "parse and validate a configuration");
  validate->add_option("--config", config_path, "configuration file")->required();

  auto* list = app.add_subcommand("list-cases", "print the available case kinds");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (auto k : {cpl::CaseKind::prandtl0, cpl::CaseKind::euler_layer,
                   cpl::CaseKind::prandtl_lin, cpl::CaseKind::hierarchy,
                   cpl::CaseKind::ns_sweep, cpl::CaseKind::identity_suite})
      std::cout << cpl::case_kind_name(k) << "\n";
    return 0;
  }

  cpl::RunConfig cfg;
  try {
    cfg = cpl::parse_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  if (validate->parsed()) {
    std::cout << "ok: " << cpl::case_kind_name(cfg.kind) << "\n";
    return 0;
  }
  return cpl::run_case(cfg, out_dir, jobs, seed);
}

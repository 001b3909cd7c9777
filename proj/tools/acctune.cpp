#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "acctune/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"loop offload autotuner: probe for GPU-safe loops, then search combinations with a GA"};
  app.require_subcommand(1);

  std::string analyze_config;
  auto* analyze = app.add_subcommand("analyze", "scan and probe, report the candidate loops");
  analyze->add_option("config", analyze_config, "run config (json)")->required();

  std::string tune_config;
  std::uint64_t seed = 0;
  std::string sim_override;
  auto* tune = app.add_subcommand("tune", "search offload combinations and keep the best variant");
  tune->add_option("config", tune_config, "run config (json)")->required();
  auto* seed_opt = tune->add_option("--seed", seed, "override ga.seed");
  auto* sim_opt = tune->add_option("--sim", sim_override, "take timings from this cost model instead of the toolchain");

  std::string workdir;
  auto* report = app.add_subcommand("report", "render the log of a finished workdir");
  report->add_option("workdir", workdir, "workdir of an earlier tune run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (analyze->parsed()) return acctune::cmd_analyze(analyze_config, std::cout, std::cerr);
  if (tune->parsed()) {
    acctune::TuneOptions options;
    if (seed_opt->count() > 0) options.seed = seed;
    if (sim_opt->count() > 0) options.sim_model = sim_override;
    return acctune::cmd_tune(tune_config, options, std::cout, std::cerr);
  }
  if (report->parsed()) return acctune::cmd_report(workdir, std::cout, std::cerr);
  return 2;
}

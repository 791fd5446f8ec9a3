#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rhsim/config.hpp"
#include "rhsim/errors.hpp"
#include "rhsim/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Markovian rough Heston simulation and pricing experiments"};
  app.require_subcommand(1, 1);

  std::string config_path;
  rhsim::RunOptions opt;
  std::string rng;
  std::size_t shifts = 0;
  std::size_t points = 0;

  for (const char* name : {"smile", "surface", "asian", "bermudan", "convergence", "kernel-error"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "experiment configuration file")->required();
    sub->add_option("--seed", opt.seed, "override rng.seed");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--rng", rng, "uniform source")->check(CLI::IsMember({"pseudo", "sobol"}));
    sub->add_option("--shifts", shifts, "override rng.shifts")->check(CLI::PositiveNumber);
    sub->add_option("--points-per-shift", points, "override rng.points_per_shift")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", opt.quiet, "suppress progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  opt.has_seed = sub->count("--seed") > 0;
  opt.has_threads = sub->count("--threads") > 0;
  opt.has_out = sub->count("--out") > 0;

  rhsim::RunConfig config;
  try {
    config = rhsim::load_config(config_path);
    const rhsim::ExperimentKind kind = rhsim::experiment_from_string(sub->get_name());
    config.kind = kind;
    if (!rng.empty()) config.stream.kind = rhsim::stream_kind_from_string(rng);
    if (shifts > 0) config.stream.shifts = shifts;
    if (points > 0) config.stream.points_per_shift = points;
  } catch (const rhsim::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }
  return rhsim::run_and_report(config, opt);
}

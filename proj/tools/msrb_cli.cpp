// Experiment driver for the multiscale reduced basis solver. Declarative
// configs select one of the paper-style studies; basis-build / pod / solve
// run the offline and online stages separately against the snapshot cache.

#include <CLI11.hpp>

#include <iostream>

#include "msrb/config.hpp"
#include "msrb/experiments.hpp"
#include "msrb/mesh.hpp"
#include "msrb/random_field.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "experiment config file")
      ->required();
  const auto flag = [&args, cmd](const std::string& name, const std::string& path,
                                 const std::string& help) {
    cmd->add_option_function<std::string>(
        name,
        [&args, path](const std::string& v) { args.overrides.push_back({path, v}); },
        help);
  };
  flag("--epsilon", "experiment.epsilon", "semiclassical parameter");
  flag("--sigma", "potential.sigma", "potential strength");
  flag("--beta", "potential.beta", "potential mode decay exponent");
  flag("--m", "potential.m", "random dimension");
  flag("--coarse-cells", "grid.coarse-cells", "coarse cells per axis");
  flag("--fine-cells", "grid.fine-cells", "fine cells per axis");
  flag("--T", "time.T", "final time");
  flag("--dt", "time.dt", "time step");
  flag("--samples", "sampling.samples", "online sample count(s)");
  flag("--offline-samples", "offline.samples", "offline sample count(s)");
  flag("--seed", "experiment.seed", "random seed");
  flag("--out", "experiment.out", "artifact directory");
  flag("--pod-modes", "offline.pod-modes", "POD modes per node");
  flag("--rho", "offline.rho", "POD energy ratio criterion");
  flag("--cache", "experiment.cache", "cache directory");
}

msrb::Config load_config(const CommonArgs& args) {
  msrb::Config cfg = msrb::Config::parse_file(args.config_path);
  for (const auto& [path, value] : args.overrides) cfg.set(path, value);
  return cfg;
}

void print_metrics(const std::map<std::string, double>& metrics) {
  for (const auto& [k, v] : metrics)
    std::cout << "  " << k << " = " << msrb::format_double(v) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiscale reduced basis experiments for the random "
               "semiclassical Schrodinger equation"};
  app.require_subcommand(1);

  CommonArgs run_args, build_args, pod_args, solve_args;
  CLI::App* run = app.add_subcommand("run", "run a declarative experiment");
  add_common(run, run_args);
  CLI::App* build = app.add_subcommand("basis-build", "offline snapshot stage");
  add_common(build, build_args);
  CLI::App* pod = app.add_subcommand("pod", "compress snapshots to reduced bases");
  add_common(pod, pod_args);
  CLI::App* solve = app.add_subcommand("solve", "online evolution stage");
  add_common(solve, solve_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto out = msrb::run_experiment(load_config(run_args));
      std::cout << "experiment artifacts in " << out.out_dir.string() << "\n";
      for (const auto& f : out.files) std::cout << "  wrote " << f.string() << "\n";
      print_metrics(out.metrics);
    } else if (build->parsed()) {
      const auto res = msrb::stage_basis_build(load_config(build_args));
      std::cout << res.message << "\n"
                << (res.cache_hit ? "cache hit" : "cache miss") << "\n";
    } else if (pod->parsed()) {
      const auto res = msrb::stage_pod(load_config(pod_args));
      std::cout << res.message;
      print_metrics(res.metrics);
    } else if (solve->parsed()) {
      const auto out = msrb::stage_solve(load_config(solve_args));
      for (const auto& f : out.files) std::cout << "wrote " << f.string() << "\n";
      print_metrics(out.metrics);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

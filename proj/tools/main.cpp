#include <cstdio>
#include <exception>

#include "CLI11.hpp"
#include "runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"exactdiff: exact (discretization-free) simulation of one-dimensional diffusions"};
  app.require_subcommand(1);

  exactdiff::cli::CommonArgs args;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", args.config_path, "configuration file")->required();
    cmd->add_option("--out", args.out_dir, "output directory (default: current)");
    cmd->add_option("--jobs", args.jobs, "worker threads for sweep cells");
    cmd->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
      seed_set = true;
    });
  };

  CLI::App* bench = app.add_subcommand("bench", "run a benchmark sweep, write bench.csv and bench.json");
  add_common(bench);
  CLI::App* simulate =
      app.add_subcommand("simulate", "sample skeletons and filled paths, write skeletons.json and paths.csv");
  add_common(simulate);
  CLI::App* validate =
      app.add_subcommand("validate", "run a named oracle suite, write validate.json; exit 2 on failure");
  add_common(validate);

  CLI11_PARSE(app, argc, argv);
  if (seed_set) args.seed_override = seed;

  try {
    if (bench->parsed()) return exactdiff::cli::cmd_bench(args);
    if (simulate->parsed()) return exactdiff::cli::cmd_simulate(args);
    if (validate->parsed()) return exactdiff::cli::cmd_validate(args);
  } catch (const exactdiff::cli::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#pragma once

#include <string>

#include "config.hpp"

namespace exactdiff::cli {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  int jobs = 1;
  std::optional<std::uint64_t> seed_override;
};

int cmd_bench(const CommonArgs& args);
int cmd_simulate(const CommonArgs& args);
int cmd_validate(const CommonArgs& args);

}  // namespace exactdiff::cli

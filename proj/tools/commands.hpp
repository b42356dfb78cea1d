#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mweica/types.hpp"

namespace mweica::cli {

struct RunConfig {
  std::string subcommand;
  std::vector<std::string> inputs;
  std::string method = "mweica";  // mweica | weica | fastica
  Index n_weights = 0;            // 0 = module default, min(32, k)
  std::uint64_t seed = 0;
  double tol = 1e-9;
  int max_sweeps = 100;
  int trials = 20;
  std::string out_dir;
};

// Each command stages its outputs under temporary names and renames them
// only after every write succeeded, so failures leave no partial artifacts.
// Returns the process exit code: 0 success, 2 input/validation failure,
// 3 algorithmic failure.
int run(const RunConfig& config);

int run_mix(const RunConfig& config);
int run_unmix(const RunConfig& config);
int run_index(const RunConfig& config);
int run_bench(const RunConfig& config);

}  // namespace mweica::cli

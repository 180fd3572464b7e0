// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "pinn/cli.hpp"

namespace {

constexpr const char* kUsage = R"(pinnbench - adaptive collocation sampling benchmark

usage: pinnbench <subcommand> [flags]

subcommands:
  run      execute one experiment and write its run directory
  sweep    run a (method x seed) grid with idempotent resume, then report
  report   aggregate finished run directories into summary.csv and plots
  verify   run the oracle self-checks (derivatives, ansatz, influence)

flags:
  --config PATH       flat key=value config file (supports `preset = ...`)
  --set key=value     override a single config key (repeatable)
  --out DIR           output directory root (default: runs)
  --jobs N            parallel sweep cells (default: 1)
  --deterministic     zero wall-clock fields; byte-stable records.csv
  --methods a,b,c     sweep: methods to run (default: all)
  --seeds 0,1,2       sweep: seeds to run (default: 0,1,2)

environment:
  PINN_DATA_DIR       cache directory for ground-truth grids
)";

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    std::cout << kUsage;
    return args.empty() ? 2 : 0;
  }
  return pinn::cli_main(args, std::cout, std::cerr);
}

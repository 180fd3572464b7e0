// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: `run` executes one experiment, `sweep` a
// (method x seed) grid with idempotent resume, `report` aggregates finished
// run directories, `verify` runs the oracle self-checks. Everything here is
// a thin layer over the library so tests can drive it without a process.

#pragma once

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <thread>

#include "pinn/config.hpp"
#include "pinn/verify.hpp"

namespace pinn {

struct CliArgs {
  std::string subcommand;
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir = "runs";
  std::size_t jobs = 1;
  bool deterministic = false;
  std::vector<std::string> methods;   // sweep axis; empty = all methods
  std::vector<std::uint64_t> seeds;   // sweep axis; empty = {0, 1, 2}
};

inline CliArgs parse_cli(const std::vector<std::string>& argv) {
  CliArgs args;
  if (argv.empty())
    throw ConfigError("usage: pinnbench run|sweep|report|verify [flags]");
  args.subcommand = argv[0];
  if (args.subcommand != "run" && args.subcommand != "sweep" &&
      args.subcommand != "report" && args.subcommand != "verify")
    throw ConfigError("unknown subcommand '" + args.subcommand + "'");

  const auto need_value = [&](std::size_t i, const std::string& flag) {
    if (i + 1 >= argv.size())
      throw ConfigError("flag " + flag + " needs a value");
    return argv[i + 1];
  };
  for (std::size_t i = 1; i < argv.size(); ++i) {
    const auto& a = argv[i];
    if (a == "--config") {
      args.config_path = need_value(i++, a);
    } else if (a == "--set") {
      args.sets.push_back(need_value(i++, a));
    } else if (a == "--out") {
      args.out_dir = need_value(i++, a);
    } else if (a == "--jobs") {
      args.jobs = detail::parse_size(need_value(i++, a), "--jobs");
      if (args.jobs == 0) throw ConfigError("--jobs must be >= 1");
    } else if (a == "--deterministic") {
      args.deterministic = true;
    } else if (a == "--methods") {
      std::stringstream ss(need_value(i++, a));
      std::string tok;
      while (std::getline(ss, tok, ','))
        args.methods.push_back(detail::trim(tok));
    } else if (a == "--seeds") {
      std::stringstream ss(need_value(i++, a));
      std::string tok;
      while (std::getline(ss, tok, ','))
        args.seeds.push_back(detail::parse_size(detail::trim(tok), "--seeds"));
    } else {
      throw ConfigError("unknown flag '" + a + "'");
    }
  }
  return args;
}

// Base config for a CLI invocation: file (if given) plus --set overrides,
// then the environment's ground-truth cache location and the determinism
// switch.
inline ExperimentConfig cli_config(const CliArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_path.empty()) {
    cfg = parse_config_file(args.config_path, args.sets);
  } else {
    for (const auto& kv : args.sets) apply_override(cfg, kv);
    cfg.validate();
  }
  if (const char* env = std::getenv("PINN_DATA_DIR"); env && *env)
    cfg.data_dir = env;
  if (args.deterministic) cfg.deterministic = true;
  return cfg;
}

inline int cmd_run(const CliArgs& args, std::ostream& out) {
  const auto cfg = cli_config(args);
  const auto st = run_to_dir(cfg, args.out_dir);
  const auto& last = st.records.back();
  out << cfg.problem << "/" << cfg.method << "/" << cfg.mode << "/seed"
      << cfg.seed << ": ";
  if (st.failed) {
    out << "FAILED after cycle " << last.cycle << " (" << st.failure << ")\n";
  } else {
    char buf[96];
    std::snprintf(buf, sizeof buf, "l2 %.3e, test loss %.3e, %zu cycles",
                  last.l2_rel_error, last.test_loss, st.records.size() - 1);
    out << buf << "\n";
  }
  out << "artifacts: " << run_dir(args.out_dir, cfg) << "\n";
  return st.failed ? 1 : 0;
}

// ---------------------------------------------------------------------------

inline std::vector<RunSeries> collect_runs(const std::string& outdir) {
  std::vector<RunSeries> runs;
  namespace fs = std::filesystem;
  if (!fs::exists(outdir)) return runs;
  for (const auto& entry : fs::recursive_directory_iterator(outdir)) {
    if (!entry.is_regular_file() ||
        entry.path().filename() != "records.csv")
      continue;
    // <outdir>/<problem>/<method>/<mode>/seed<k>/records.csv
    const auto seed_dir = entry.path().parent_path();
    const auto mode_dir = seed_dir.parent_path();
    const auto method_dir = mode_dir.parent_path();
    const auto problem_dir = method_dir.parent_path();
    const auto seed_name = seed_dir.filename().string();
    if (seed_name.rfind("seed", 0) != 0) continue;
    RunSeries rs;
    rs.problem = problem_dir.filename().string();
    rs.method = method_dir.filename().string();
    rs.mode = mode_dir.filename().string();
    try {
      rs.seed = detail::parse_size(seed_name.substr(4), "seed dir");
      rs.records = load_records(entry.path().string());
    } catch (const std::exception&) {
      continue;  // foreign or half-written directory; not ours to report
    }
    runs.push_back(std::move(rs));
  }
  std::sort(runs.begin(), runs.end(), [](const RunSeries& a,
                                         const RunSeries& b) {
    return std::tie(a.problem, a.method, a.mode, a.seed) <
           std::tie(b.problem, b.method, b.mode, b.seed);
  });
  return runs;
}

inline int cmd_report(const CliArgs& args, std::ostream& out) {
  const auto runs = collect_runs(args.out_dir);
  if (runs.empty()) {
    out << "no runs found under " << args.out_dir << "\n";
    return 1;
  }
  const auto summary = summarize(runs);
  const auto report_dir =
      (std::filesystem::path(args.out_dir) / "report").string();
  emit(summary, report_dir);
  for (const auto& m : summary.methods) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%-16s %-12s %-8s runs %zu (failed %zu)  l2 %.3e +- %.3e",
                  m.problem.c_str(), m.method.c_str(), m.mode.c_str(),
                  m.seed_count, m.failed_count, m.mean_l2, m.std_l2);
    out << buf << "\n";
  }
  out << "report written to " << report_dir << "\n";
  return 0;
}

inline int cmd_sweep(const CliArgs& args, std::ostream& out) {
  const auto base = cli_config(args);
  const auto methods =
      args.methods.empty() ? scoring_method_names() : args.methods;
  const auto seeds = args.seeds.empty()
                         ? std::vector<std::uint64_t>{0, 1, 2}
                         : args.seeds;
  for (const auto& m : methods) scoring_method_from_name(m);  // fail early

  struct Cell {
    ExperimentConfig cfg;
    bool skipped = false, failed = false;
  };
  std::vector<Cell> cells;
  for (const auto& m : methods)
    for (const auto s : seeds) {
      Cell cell;
      cell.cfg = base;
      cell.cfg.method = m;
      cell.cfg.seed = s;
      cell.cfg.validate();
      cells.push_back(std::move(cell));
    }

  std::atomic<std::size_t> next{0};
  std::mutex out_mu;
  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < cells.size();
         i = next.fetch_add(1)) {
      auto& cell = cells[i];
      const auto dir = run_dir(args.out_dir, cell.cfg);
      if (run_is_complete(dir, cell.cfg)) {
        cell.skipped = true;
        std::lock_guard lock(out_mu);
        out << "skip " << dir << " (complete)\n";
        continue;
      }
      const auto st = run_to_dir(cell.cfg, args.out_dir);
      cell.failed = st.failed;
      std::lock_guard lock(out_mu);
      out << (st.failed ? "fail " : "done ") << dir << "\n";
    }
  };
  const std::size_t n_workers = std::min(args.jobs, cells.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  const int report_rc = cmd_report(args, out);
  bool any_failed = report_rc != 0;
  for (const auto& cell : cells) any_failed = any_failed || cell.failed;
  return any_failed ? 1 : 0;
}

inline int cmd_verify(const CliArgs&, std::ostream& out,
                      const VerifyOptions& opt = {}) {
  bool all_ok = true;
  for (const auto& check : run_verify_checks(opt)) {
    all_ok = all_ok && check.passed;
    out << (check.passed ? "[ ok ] " : "[FAIL] ") << check.name;
    if (!check.detail.empty()) out << " | " << check.detail;
    out << "\n";
  }
  out << (all_ok ? "all checks passed\n" : "verification FAILED\n");
  return all_ok ? 0 : 1;
}

inline int cli_main(const std::vector<std::string>& argv, std::ostream& out,
                    std::ostream& err) {
  try {
    const auto args = parse_cli(argv);
    if (args.subcommand == "run") return cmd_run(args, out);
    if (args.subcommand == "sweep") return cmd_sweep(args, out);
    if (args.subcommand == "report") return cmd_report(args, out);
    return cmd_verify(args, out);
  } catch (const std::exception& e) {
    err << "pinnbench: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace pinn

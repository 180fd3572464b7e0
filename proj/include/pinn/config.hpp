// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value experiment configs with named presets. A config file is a
// sequence of `key = value` lines; `preset = <name>` loads a whole bundle of
// defaults, and any line (or command-line --set) after it overrides single
// fields. Keys mirror config_items() exactly, so every recorded field is
// settable from a file or the command line.

#pragma once

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pinn/trainer.hpp"

namespace pinn {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::size_t parse_size(const std::string& v, const std::string& key) {
  std::size_t out = 0;
  const auto* first = v.data();
  const auto* last = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last)
    throw ConfigError("key '" + key + "' needs a non-negative integer, got '" +
                      v + "'");
  return out;
}

inline f64 parse_real(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const f64 out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "' needs a real number, got '" + v + "'");
}

inline bool parse_flag(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("key '" + key + "' needs 0/1/true/false, got '" + v + "'");
}

inline std::vector<int> parse_widths(const std::string& v,
                                     const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    const auto n = parse_size(tok, key);
    if (n == 0 || n > 4096)
      throw ConfigError("key '" + key + "': width out of range: '" + tok + "'");
    out.push_back(static_cast<int>(n));
  }
  if (out.empty())
    throw ConfigError("key '" + key + "' needs a comma-separated width list");
  return out;
}

}  // namespace detail

// The paper_* presets fix one (problem, mode) cell: problem-sized training
// set and network, 10,000 candidates per cycle, 100 cycles of 1,000 Adam +
// 1,000 L-BFGS, and the mode's sampling temperature (add: alpha=2, c=0;
// replace: alpha=1, c=1).
inline ExperimentConfig preset_config(const std::string& name) {
  const auto us = name.rfind('_');
  if (name.rfind("paper_", 0) != 0 || us == std::string::npos ||
      us <= 6)
    throw ConfigError("unknown preset '" + name + "'");
  const std::string problem = name.substr(6, us - 6);
  const std::string mode = name.substr(us + 1);

  ExperimentConfig cfg;
  cfg.problem = problem;
  cfg.mode = mode;
  const auto pb = problem_from_name(problem);  // throws on bad name
  if (mode != "add" && mode != "replace")
    throw ConfigError("unknown preset '" + name + "'");
  cfg.mlp.hidden = pb.default_hidden;
  cfg.n_train = pb.default_n_train;
  cfg.n_new = mode == "replace" ? pb.default_n_train : pb.default_n_new;
  cfg.n_cand = 10000;
  cfg.cycles = 100;
  cfg.adam_iters = 1000;
  cfg.lbfgs_iters = 1000;
  if (mode == "add") {
    cfg.alpha = 2.0;
    cfg.c = 0.0;
  } else {
    cfg.alpha = 1.0;
    cfg.c = 1.0;
  }
  return cfg;
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : problem_names())
    for (const char* m : {"add", "replace"})
      out.push_back("paper_" + p + "_" + m);
  return out;
}

// Applies one key to the config. `preset` replaces the whole config with the
// named bundle, so it belongs at the top of a file.
inline void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                             const std::string& value) {
  using namespace detail;
  if (key == "preset")
    cfg = preset_config(value);
  else if (key == "problem")
    cfg.problem = value;
  else if (key == "hidden")
    cfg.mlp.hidden = parse_widths(value, key);
  else if (key == "method")
    cfg.method = value;
  else if (key == "mode")
    cfg.mode = value;
  else if (key == "n_cand")
    cfg.n_cand = parse_size(value, key);
  else if (key == "n_train")
    cfg.n_train = parse_size(value, key);
  else if (key == "n_new")
    cfg.n_new = parse_size(value, key);
  else if (key == "alpha")
    cfg.alpha = parse_real(value, key);
  else if (key == "c")
    cfg.c = parse_real(value, key);
  else if (key == "cycles")
    cfg.cycles = parse_size(value, key);
  else if (key == "adam_iters")
    cfg.adam_iters = parse_size(value, key);
  else if (key == "lbfgs_iters")
    cfg.lbfgs_iters = parse_size(value, key);
  else if (key == "adam_lr")
    cfg.adam_lr = parse_real(value, key);
  else if (key == "seed")
    cfg.seed = parse_size(value, key);
  else if (key == "influence_projection_dim")
    cfg.influence.projection_dim = parse_size(value, key);
  else if (key == "influence_top_k")
    cfg.influence.top_k = parse_size(value, key);
  else if (key == "influence_tol")
    cfg.influence.tol = parse_real(value, key);
  else if (key == "influence_damping_rel")
    cfg.influence.damping_rel = parse_real(value, key);
  else if (key == "influence_keep_negative")
    cfg.influence.keep_negative = parse_flag(value, key);
  else if (key == "influence_n_test")
    cfg.influence.n_test = parse_size(value, key);
  else if (key == "n_eval")
    cfg.n_eval = parse_size(value, key);
  else if (key == "n_test_loss")
    cfg.n_test_loss = parse_size(value, key);
  else if (key == "eval_seed")
    cfg.eval_seed = parse_size(value, key);
  else if (key == "data_dir")
    cfg.data_dir = value;
  else if (key == "save_scores")
    cfg.save_scores = parse_flag(value, key);
  else if (key == "deterministic")
    cfg.deterministic = parse_flag(value, key);
  else
    throw ConfigError("unknown key '" + key + "'");
}

// `--set key=value` override strings.
inline void apply_override(ExperimentConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key=value, got '" + kv + "'");
  apply_config_key(cfg, detail::trim(kv.substr(0, eq)),
                   detail::trim(kv.substr(eq + 1)));
}

inline ExperimentConfig parse_config_text(
    const std::string& text, const std::vector<std::string>& overrides = {},
    const std::string& origin = "<config>") {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key = value");
    try {
      apply_config_key(cfg, detail::trim(line.substr(0, eq)),
                       detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  for (const auto& kv : overrides) apply_override(cfg, kv);
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config_file(
    const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), overrides, path);
}

}  // namespace pinn

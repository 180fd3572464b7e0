// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// The resampling loop: initialize a training set, then repeat
// sample-score-select-perturb-finetune for a configured number of cycles,
// evaluating after every cycle. One experiment is one (problem, method,
// mode, seed) cell; the sweep layer runs many.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pinn/eval.hpp"
#include "pinn/influence.hpp"
#include "pinn/optim.hpp"
#include "pinn/reference.hpp"
#include "pinn/sampling.hpp"
#include "pinn/scoring.hpp"

namespace pinn {

struct InfluenceConfig {
  std::size_t projection_dim = 64;
  std::size_t top_k = 32;
  f64 tol = 1e-6;
  f64 damping_rel = 1e-3;
  bool keep_negative = true;
  std::size_t n_test = 1000;  // test points defining the influence functional
};

struct ExperimentConfig {
  std::string problem = "diffusion";
  MlpSpec mlp;
  std::string method = "pinnfluence";
  std::string mode = "add";  // add | replace
  std::size_t n_cand = 10000;
  std::size_t n_train = 30;
  std::size_t n_new = 1;
  f64 alpha = 2.0;
  f64 c = 0.0;
  std::size_t cycles = 100;
  std::size_t adam_iters = 1000;
  std::size_t lbfgs_iters = 1000;
  f64 adam_lr = 1e-3;
  std::uint64_t seed = 0;  // base seed; every stream is derived from it
  InfluenceConfig influence;

  // Evaluation apparatus, deliberately not derived from `seed` so every
  // method and seed shares the identical yardstick.
  std::size_t n_eval = 10000;
  std::size_t n_test_loss = 5000;
  std::uint64_t eval_seed = 424242;

  std::string data_dir = "data";  // ground-truth grid cache
  bool save_scores = false;       // per-cycle scores_<c>.csv artifacts
  bool deterministic = false;     // zero out wall-clock fields in records

  void validate() const {
    problem_from_name(problem);          // throws on unknown name
    scoring_method_from_name(method);    // likewise
    if (mode != "add" && mode != "replace")
      throw ConfigError("mode must be add or replace, got '" + mode + "'");
    if (n_train == 0) throw ConfigError("n_train must be positive");
    if (n_new == 0) throw ConfigError("n_new must be positive");
    if (mode == "replace" && n_new != n_train)
      throw ConfigError("replace mode requires n_new == n_train (got " +
                        std::to_string(n_new) + " vs " +
                        std::to_string(n_train) + ")");
    if (n_cand < n_new)
      throw ConfigError("n_cand must be at least n_new");
    if (!(alpha >= 0.0) || !(c >= 0.0))
      throw ConfigError("alpha and c must be non-negative");
    if (mlp.hidden.empty())
      throw ConfigError("network needs at least one hidden layer");
    for (int w : mlp.hidden)
      if (w <= 0) throw ConfigError("hidden widths must be positive");
    if (n_eval == 0 || n_test_loss == 0)
      throw ConfigError("evaluation sets must be non-empty");
    if (influence.top_k > influence.projection_dim)
      throw ConfigError("influence top_k cannot exceed projection_dim");
  }
};

// Canonical flat serialization, used for config.json, the resume hash and
// the tests. Order is fixed.
inline std::vector<std::pair<std::string, std::string>> config_items(
    const ExperimentConfig& cfg) {
  const auto num = [](f64 v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string hidden;
  for (std::size_t i = 0; i < cfg.mlp.hidden.size(); ++i)
    hidden += (i ? "," : "") + std::to_string(cfg.mlp.hidden[i]);
  return {
      {"problem", cfg.problem},
      {"hidden", hidden},
      {"method", cfg.method},
      {"mode", cfg.mode},
      {"n_cand", std::to_string(cfg.n_cand)},
      {"n_train", std::to_string(cfg.n_train)},
      {"n_new", std::to_string(cfg.n_new)},
      {"alpha", num(cfg.alpha)},
      {"c", num(cfg.c)},
      {"cycles", std::to_string(cfg.cycles)},
      {"adam_iters", std::to_string(cfg.adam_iters)},
      {"lbfgs_iters", std::to_string(cfg.lbfgs_iters)},
      {"adam_lr", num(cfg.adam_lr)},
      {"seed", std::to_string(cfg.seed)},
      {"influence_projection_dim", std::to_string(cfg.influence.projection_dim)},
      {"influence_top_k", std::to_string(cfg.influence.top_k)},
      {"influence_tol", num(cfg.influence.tol)},
      {"influence_damping_rel", num(cfg.influence.damping_rel)},
      {"influence_keep_negative", cfg.influence.keep_negative ? "1" : "0"},
      {"influence_n_test", std::to_string(cfg.influence.n_test)},
      {"n_eval", std::to_string(cfg.n_eval)},
      {"n_test_loss", std::to_string(cfg.n_test_loss)},
      {"eval_seed", std::to_string(cfg.eval_seed)},
      {"data_dir", cfg.data_dir},
      {"save_scores", cfg.save_scores ? "1" : "0"},
      {"deterministic", cfg.deterministic ? "1" : "0"},
  };
}

// FNV-1a over the result-relevant fields: artifact locations and timing
// flags do not change what a run computes.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const auto mix = [&](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ull;
    }
    h ^= '\n';
    h *= 0x100000001b3ull;
  };
  for (const auto& [k, v] : config_items(cfg)) {
    if (k == "data_dir" || k == "deterministic") continue;
    mix(k + "=" + v);
  }
  return h;
}

inline void save_config_json(const std::string& path,
                             const ExperimentConfig& cfg) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write config: " + path);
  const auto items = config_items(cfg);
  std::fprintf(f, "{\n");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& [k, v] = items[i];
    const bool quoted = k == "problem" || k == "hidden" || k == "method" ||
                        k == "mode" || k == "data_dir";
    std::fprintf(f, "  \"%s\": %s%s%s%s\n", k.c_str(), quoted ? "\"" : "",
                 v.c_str(), quoted ? "\"" : "",
                 i + 1 == items.size() ? "" : ",");
  }
  std::fprintf(f, "}\n");
  if (std::fclose(f) != 0) throw IoError("short write: " + path);
}

// ---------------------------------------------------------------------------

struct TrainState {
  std::vector<f64> theta;
  std::vector<Point2> x_train;
  std::size_t cycle = 0;
  AdamState adam;
  std::vector<RunRecord> records;
  bool failed = false;
  std::string failure;  // diagnostic for the log, empty if healthy
};

// Observation points for tests and the score-artifact writer; both fire
// with the frozen parameters the cycle scored under.
struct TrainerHooks {
  std::function<void(std::size_t cycle, std::span<const Point2> candidates,
                     const ScoreVector& scores,
                     std::span<const std::size_t> selected,
                     std::span<const f64> theta)>
      on_scored;
  std::function<void(const TrainState&)> on_cycle_end;
};

// Full-batch objective over the current training set.
class EngineObjective final : public Objective {
 public:
  EngineObjective(LossEngine& eng, std::span<const Point2> pts)
      : eng_(eng), pts_(pts) {}

  std::size_t dim() const override { return eng_.dim(); }

  f64 value_grad(std::span<const f64> theta, std::span<f64> grad) override {
    eng_.set_theta(theta);
    return eng_.mean_loss_grad(pts_, grad);
  }

  std::pair<f64, f64> probe(std::span<const f64> theta,
                            std::span<const f64> dir, f64 alpha) override {
    eng_.set_theta(theta);
    return eng_.mean_loss_probe(pts_, dir, alpha);
  }

 private:
  LossEngine& eng_;
  std::span<const Point2> pts_;
};

namespace detail {

// Indices of the selected candidates for one perturbation step.
inline std::vector<std::size_t> select_new_points(
    const ExperimentConfig& cfg, const ScoreVector& scores,
    std::size_t cycle) {
  const auto pmf = build_pmf(scores.scores, cfg.alpha, cfg.c);
  return sample_without_replacement(
      pmf, cfg.n_new, derive_seed(cfg.seed, stream::kSelection, cycle));
}

}  // namespace detail

class Trainer {
 public:
  explicit Trainer(ExperimentConfig cfg, TrainerHooks hooks = {})
      : cfg_(std::move(cfg)),
        hooks_(std::move(hooks)),
        pb_(problem_from_name(cfg_.problem)),
        method_(scoring_method_from_name(cfg_.method)) {
    cfg_.validate();
    if (pb_.gridded()) grid_ = ensure_ground_truth(pb_, cfg_.data_dir);
    evaluator_.emplace(pb_, cfg_.mlp, pb_.gridded() ? &grid_ : nullptr,
                       cfg_.n_eval, cfg_.n_test_loss, cfg_.eval_seed);
    x_test_ = uniform_sample(pb_.domain, cfg_.influence.n_test,
                             derive_seed(cfg_.seed, stream::kInfluenceTest));
  }

  const ExperimentConfig& config() const { return cfg_; }
  const PdeProblem& problem() const { return pb_; }

  // Runs the whole experiment: initial set + snapshot, then `cycles`
  // resampling cycles. A diverging run appends one failed record and stops;
  // everything recorded so far is preserved.
  TrainState run() {
    TrainState st;
    const auto t0 = now();
    st.theta = init_params(cfg_.mlp, derive_seed(cfg_.seed, stream::kModelInit));
    engine_.emplace(pb_, cfg_.mlp, st.theta);
    st.x_train = init_training_set(st.theta);
    append_record(st, 0, seconds_since(t0));
    if (st.failed) return st;

    for (std::size_t cycle = 1; cycle <= cfg_.cycles && !st.failed; ++cycle)
      run_cycle(st, cycle);
    return st;
  }

  // Steps 2-6 of the resampling loop for one cycle (1-based).
  void run_cycle(TrainState& st, std::size_t cycle) {
    const auto t0 = now();
    st.cycle = cycle;
    try {
      if (method_ != ScoringMethod::kStatic) perturb(st, cycle);
      finetune(st);
    } catch (const std::exception& e) {
      fail(st, cycle, e.what());
      return;
    }
    append_record(st, cycle, seconds_since(t0));
    if (hooks_.on_cycle_end) hooks_.on_cycle_end(st);
  }

 private:
  using Clock = std::chrono::steady_clock;
  static Clock::time_point now() { return Clock::now(); }
  f64 seconds_since(Clock::time_point t0) const {
    if (cfg_.deterministic) return 0.0;
    return std::chrono::duration<f64>(now() - t0).count();
  }

  // Add mode starts from a Hammersley set; replace mode asks the scoring
  // method itself (on the freshly initialized model) for the first set, and
  // static-replace falls back to uniform random since no scores exist.
  std::vector<Point2> init_training_set(std::span<const f64> theta) {
    if (cfg_.mode == "add") return hammersley(pb_.domain, cfg_.n_train);
    if (method_ == ScoringMethod::kStatic)
      return uniform_sample(pb_.domain, cfg_.n_train,
                            derive_seed(cfg_.seed, stream::kInitialSet));
    engine_->set_theta(theta);
    const auto cands = uniform_sample(
        pb_.domain, cfg_.n_cand, derive_seed(cfg_.seed, stream::kCandidates));
    const auto scores = score(theta, cands, /*cycle=*/0,
                              /*x_train=*/{});
    const auto sel = detail::select_new_points(cfg_, scores, 0);
    if (hooks_.on_scored) hooks_.on_scored(0, cands, scores, sel, theta);
    std::vector<Point2> out;
    out.reserve(sel.size());
    for (std::size_t i : sel) out.push_back(cands[i]);
    return out;
  }

  ScoreVector score(std::span<const f64> theta, std::span<const Point2> cands,
                    std::size_t cycle, std::span<const Point2> x_train) {
    ScoringInputs in;
    in.problem = &pb_;
    in.spec = &cfg_.mlp;
    in.theta = theta;
    in.x_test = x_test_;
    in.engine = &*engine_;
    in.random_seed = derive_seed(cfg_.seed, stream::kRandomScore, cycle);
    InfluenceContext ctx;
    if (method_ == ScoringMethod::kPinnfluence) {
      InfluenceSettings is;
      is.projection_dim = std::min(cfg_.influence.projection_dim,
                                   engine_->dim());
      is.top_k = std::min(cfg_.influence.top_k, is.projection_dim);
      is.tol = cfg_.influence.tol;
      is.damping_rel = cfg_.influence.damping_rel;
      is.keep_negative = cfg_.influence.keep_negative;
      is.seed = derive_seed(cfg_.seed, stream::kArnoldiStart, cycle);
      engine_->set_theta(theta);
      // Before any training set exists (replace-mode cycle 0) the curvature
      // has no anchor; the identity-Hessian reduction scores instead.
      if (x_train.empty()) is.top_k = 0;
      ctx = make_influence_context(*engine_, x_train, x_test_, is);
      in.influence_ctx = &ctx;
    }
    return score_candidates(method_, in, cands);
  }

  void perturb(TrainState& st, std::size_t cycle) {
    const auto cands = uniform_sample(
        pb_.domain, cfg_.n_cand,
        derive_seed(cfg_.seed, stream::kCandidates, cycle));
    const auto scores = score(st.theta, cands, cycle, st.x_train);
    const auto sel = detail::select_new_points(cfg_, scores, cycle);
    if (hooks_.on_scored) hooks_.on_scored(cycle, cands, scores, sel, st.theta);
    if (cfg_.mode == "add") {
      for (std::size_t i : sel) st.x_train.push_back(cands[i]);
    } else {
      std::vector<Point2> next;
      next.reserve(sel.size());
      for (std::size_t i : sel) next.push_back(cands[i]);
      st.x_train = std::move(next);
    }
  }

  void finetune(TrainState& st) {
    EngineObjective obj(*engine_, st.x_train);
    st.adam.reset(obj.dim());
    st.adam.hp.lr = cfg_.adam_lr;
    adam_run(obj, st.theta, cfg_.adam_iters, st.adam);
    lbfgs_run(obj, st.theta, cfg_.lbfgs_iters);
  }

  void append_record(TrainState& st, std::size_t cycle, f64 secs) {
    RunRecord rec;
    rec.cycle = cycle;
    rec.n_train = st.x_train.size();
    rec.seconds = secs;
    try {
      std::tie(rec.l2_rel_error, rec.test_loss) = (*evaluator_)(st.theta);
    } catch (const std::exception& e) {
      fail(st, cycle, e.what());
      return;
    }
    if (!std::isfinite(rec.l2_rel_error) || !std::isfinite(rec.test_loss)) {
      fail(st, cycle, "non-finite evaluation metrics");
      return;
    }
    st.records.push_back(rec);
  }

  void fail(TrainState& st, std::size_t cycle, std::string why) {
    RunRecord rec;
    rec.cycle = cycle;
    rec.n_train = st.x_train.size();
    rec.test_loss = std::numeric_limits<f64>::quiet_NaN();
    rec.l2_rel_error = std::numeric_limits<f64>::quiet_NaN();
    rec.failed = true;
    st.records.push_back(rec);
    st.failed = true;
    st.failure = std::move(why);
  }

  ExperimentConfig cfg_;
  TrainerHooks hooks_;
  PdeProblem pb_;
  ScoringMethod method_;
  GroundTruthGrid grid_;
  std::optional<Evaluator> evaluator_;
  std::optional<LossEngine> engine_;
  std::vector<Point2> x_test_;
};

inline TrainState run_experiment(const ExperimentConfig& cfg,
                                 TrainerHooks hooks = {}) {
  return Trainer(cfg, std::move(hooks)).run();
}

// ---------------------------------------------------------------------------
// Run directory artifacts.

inline std::string run_dir(const std::string& outdir,
                           const ExperimentConfig& cfg) {
  return (std::filesystem::path(outdir) / cfg.problem / cfg.method / cfg.mode /
          ("seed" + std::to_string(cfg.seed)))
      .string();
}

inline bool run_is_complete(const std::string& dir,
                            const ExperimentConfig& cfg) {
  std::ifstream done(std::filesystem::path(dir) / "done");
  if (!done) return false;
  std::string hash;
  done >> hash;
  char want[32];
  std::snprintf(want, sizeof want, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  return hash == want;
}

// Executes one experiment and persists records.csv, config.json,
// checkpoint.bin, optional per-cycle score dumps, and a `done` marker
// carrying the config hash for idempotent resume.
inline TrainState run_to_dir(const ExperimentConfig& cfg,
                             const std::string& outdir,
                             TrainerHooks hooks = {}) {
  const auto dir = std::filesystem::path(run_dir(outdir, cfg));
  std::filesystem::create_directories(dir);
  save_config_json((dir / "config.json").string(), cfg);

  TrainerHooks h = std::move(hooks);
  if (cfg.save_scores) {
    auto inner = h.on_scored;
    h.on_scored = [dir, inner](std::size_t cycle,
                               std::span<const Point2> cands,
                               const ScoreVector& scores,
                               std::span<const std::size_t> sel,
                               std::span<const f64> theta) {
      const auto path =
          dir / ("scores_" + std::to_string(cycle) + ".csv");
      std::FILE* f = std::fopen(path.string().c_str(), "w");
      if (!f) throw IoError("cannot write scores: " + path.string());
      std::fprintf(f, "x,t,score,selected\n");
      std::vector<char> picked(cands.size(), 0);
      for (std::size_t i : sel) picked[i] = 1;
      for (std::size_t i = 0; i < cands.size(); ++i)
        std::fprintf(f, "%.17g,%.17g,%.17g,%d\n", cands[i].x, cands[i].t,
                     scores.scores[i], picked[i]);
      if (std::fclose(f) != 0) throw IoError("short write: " + path.string());
      if (inner) inner(cycle, cands, scores, sel, theta);
    };
  }

  const auto st = run_experiment(cfg, std::move(h));
  save_records((dir / "records.csv").string(), st.records);
  save_checkpoint((dir / "checkpoint.bin").string(), cfg.mlp, cfg.seed,
                  st.theta);
  {
    std::ofstream done(dir / "done");
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    done << hash << (st.failed ? " failed" : " ok") << "\n";
  }
  return st;
}

}  // namespace pinn

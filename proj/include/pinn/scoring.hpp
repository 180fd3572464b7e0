// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Candidate scoring strategies. Each maps a frozen model plus a candidate set
// to non-negative per-candidate scores; the resampling PMF is built on top of
// these by sampling::build_pmf. All reductions are fixed-order so repeated
// calls are bit-identical.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinn/influence.hpp"
#include "pinn/pde.hpp"

namespace pinn {

enum class ScoringMethod {
  kPinnfluence,
  kRar,
  kGradDot,
  kOutputGrad,
  kLossGrad,
  kRandom,
  kStatic,
};

inline const std::vector<std::string>& scoring_method_names() {
  static const std::vector<std::string> names{
      "pinnfluence", "rar",    "grad_dot", "output_grad",
      "loss_grad",   "random", "static"};
  return names;
}

inline std::string scoring_method_name(ScoringMethod m) {
  return scoring_method_names()[static_cast<std::size_t>(m)];
}

inline ScoringMethod scoring_method_from_name(const std::string& name) {
  const auto& names = scoring_method_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<ScoringMethod>(i);
  throw ConfigError("unknown scoring method: " + name);
}

// Static perturbs nothing and random ignores the model; everything else
// scores under the frozen parameters.
inline bool method_uses_model(ScoringMethod m) {
  return m != ScoringMethod::kRandom && m != ScoringMethod::kStatic;
}

inline bool method_uses_influence(ScoringMethod m) {
  return m == ScoringMethod::kPinnfluence;
}

struct ScoreVector {
  std::vector<f64> scores;
  ScoringMethod method = ScoringMethod::kStatic;
};

// S = |Inf(x)|. The context fixes theta-hat, the test gradient and the
// (possibly identity) inverse-Hessian weighting.
inline ScoreVector score_pinnfluence(const InfluenceContext& ctx,
                                     LossEngine& eng,
                                     std::span<const Point2> candidates) {
  ScoreVector out;
  out.method = ScoringMethod::kPinnfluence;
  out.scores.reserve(candidates.size());
  std::vector<f64> scratch(eng.dim());
  for (const auto& c : candidates)
    out.scores.push_back(std::abs(influence(ctx, eng, c, scratch)));
  return out;
}

// S = |N[phi(x)]|, the pointwise PDE residual magnitude.
inline ScoreVector score_rar(const PdeProblem& pb, const MlpSpec& spec,
                             std::span<const f64> theta,
                             std::span<const Point2> candidates) {
  LossEngine eng(pb, spec, theta);
  ScoreVector out;
  out.method = ScoringMethod::kRar;
  out.scores.reserve(candidates.size());
  for (const auto& c : candidates)
    out.scores.push_back(std::abs(eng.point_residual(c)));
  return out;
}

// S = |grad L_test . grad L(x)|: the influence score with the Hessian
// replaced by the identity. Routed through the same dot-product code as
// score_pinnfluence so the two agree bit for bit in identity mode.
inline ScoreVector score_grad_dot(const PdeProblem& pb, const MlpSpec& spec,
                                  std::span<const f64> theta,
                                  std::span<const Point2> x_test,
                                  std::span<const Point2> candidates) {
  LossEngine eng(pb, spec, theta);
  InfluenceContext ctx;
  ctx.w = test_loss_grad(pb, spec, theta, x_test);
  ctx.identity = true;
  auto out = score_pinnfluence(ctx, eng, candidates);
  out.method = ScoringMethod::kGradDot;
  return out;
}

// S = ||grad_x phi(x)||_2 on the constrained surrogate: under hard
// constraints the raw network is never the prediction, so the input
// sensitivity that matters is the ansatz output's.
inline ScoreVector score_output_grad(const PdeProblem& pb, const MlpSpec& spec,
                                     std::span<const f64> theta,
                                     std::span<const Point2> candidates) {
  ScoreVector out;
  out.method = ScoringMethod::kOutputGrad;
  out.scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    const auto j = surrogate(pb, spec, theta, c);
    out.scores.push_back(std::hypot(j.dx, j.dt));
  }
  return out;
}

// S = ||grad_theta L(x)||_2.
inline ScoreVector score_loss_grad(const PdeProblem& pb, const MlpSpec& spec,
                                   std::span<const f64> theta,
                                   std::span<const Point2> candidates) {
  LossEngine eng(pb, spec, theta);
  ScoreVector out;
  out.method = ScoringMethod::kLossGrad;
  out.scores.reserve(candidates.size());
  std::vector<f64> g(eng.dim());
  for (const auto& c : candidates) {
    eng.point_loss_grad(c, g);
    f64 s = 0.0;
    for (f64 x : g) s += x * x;
    out.scores.push_back(std::sqrt(s));
  }
  return out;
}

// i.i.d. uniform(0,1) scores, reproducible per seed.
inline ScoreVector score_random(std::span<const Point2> candidates, std::uint64_t seed) {
  Rng rng(seed);
  ScoreVector out;
  out.method = ScoringMethod::kRandom;
  out.scores.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    out.scores.push_back(rng.uniform(0.0, 1.0));
  return out;
}

// Everything a method dispatch might need; unused members may be left empty
// for methods that do not touch them.
struct ScoringInputs {
  const PdeProblem* problem = nullptr;
  const MlpSpec* spec = nullptr;
  std::span<const f64> theta;
  std::span<const Point2> x_test;
  const InfluenceContext* influence_ctx = nullptr;
  LossEngine* engine = nullptr;
  std::uint64_t random_seed = 0;
};

inline ScoreVector score_candidates(ScoringMethod m, const ScoringInputs& in,
                                    std::span<const Point2> candidates) {
  switch (m) {
    case ScoringMethod::kPinnfluence:
      if (in.influence_ctx == nullptr || in.engine == nullptr)
        throw std::invalid_argument(
            "score_candidates: pinnfluence needs a prepared influence context");
      return score_pinnfluence(*in.influence_ctx, *in.engine, candidates);
    case ScoringMethod::kRar:
      return score_rar(*in.problem, *in.spec, in.theta, candidates);
    case ScoringMethod::kGradDot:
      return score_grad_dot(*in.problem, *in.spec, in.theta, in.x_test,
                            candidates);
    case ScoringMethod::kOutputGrad:
      return score_output_grad(*in.problem, *in.spec, in.theta, candidates);
    case ScoringMethod::kLossGrad:
      return score_loss_grad(*in.problem, *in.spec, in.theta, candidates);
    case ScoringMethod::kRandom:
      return score_random(candidates, in.random_seed);
    case ScoringMethod::kStatic:
      break;
  }
  throw std::logic_error("score_candidates: static method has no scores");
}

}  // namespace pinn

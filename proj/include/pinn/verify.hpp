// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Self-checks runnable from the CLI on a fresh checkout: finite-difference
// oracles for every derivative path, hard-constraint checks for every
// problem, and the dense-inverse equivalence for the influence pipeline.
// All checks are deterministic and finish in well under a minute.

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pinn/influence.hpp"
#include "pinn/sampling.hpp"

namespace pinn {

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  // Test fixture: perturbs the ansatz output before comparison so the
  // boundary check must fail and name the offending PDE.
  bool corrupt_ansatz = false;
};

namespace detail {

inline std::vector<f64> fd_gradient(
    const std::function<f64(std::span<const f64>)>& f, std::vector<f64> theta,
    f64 h) {
  std::vector<f64> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const f64 save = theta[i];
    theta[i] = save + h;
    const f64 fp = f(theta);
    theta[i] = save - h;
    const f64 fm = f(theta);
    theta[i] = save;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline std::string fmt_err(f64 err, f64 tol) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "max err %.3e (tol %.3e)", err, tol);
  return buf;
}

}  // namespace detail

inline VerifyCheck verify_reverse_gradient() {
  const auto pb = problem_from_name("burgers");
  MlpSpec spec;
  spec.hidden = {5};
  auto theta = init_params(spec, 31);
  const auto pts = uniform_sample(pb.domain, 6, 32);
  LossEngine eng(pb, spec, theta);
  std::vector<f64> g(eng.dim());
  eng.mean_loss_grad(pts, g);
  const auto fd = detail::fd_gradient(
      [&](std::span<const f64> th) {
        LossEngine e2(pb, spec, th);
        return e2.mean_loss(pts);
      },
      theta, 1e-5);
  f64 scale = 1.0, err = 0.0;
  for (f64 v : g) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < g.size(); ++i)
    err = std::max(err, std::abs(g[i] - fd[i]));
  const f64 tol = 1e-6 * scale;
  return {"reverse gradient vs finite differences", err < tol,
          detail::fmt_err(err, tol)};
}

inline VerifyCheck verify_input_jets() {
  f64 err = 0.0;
  const f64 h = 1e-4;
  for (const auto* name : {"diffusion", "burgers"}) {
    const auto pb = problem_from_name(name);
    MlpSpec spec;
    spec.hidden = {6};
    const auto theta = init_params(spec, 33);
    for (const Point2 p : {Point2{0.3, 0.4}, Point2{-0.2, 0.8}}) {
      const auto j = surrogate(pb, spec, theta, p);
      const auto u = [&](f64 x, f64 t) {
        return surrogate(pb, spec, theta, {x, t}).v;
      };
      const f64 dx = (u(p.x + h, p.t) - u(p.x - h, p.t)) / (2 * h);
      const f64 dxx =
          (u(p.x + h, p.t) - 2 * j.v + u(p.x - h, p.t)) / (h * h);
      const f64 dt = (u(p.x, p.t + h) - u(p.x, p.t - h)) / (2 * h);
      const f64 s = std::max({1.0, std::abs(j.dx), std::abs(j.dxx),
                              std::abs(j.dt)});
      err = std::max(err, std::abs(j.dx - dx) / s);
      err = std::max(err, std::abs(j.dxx - dxx) / s);
      err = std::max(err, std::abs(j.dt - dt) / s);
    }
  }
  return {"input jets vs finite differences", err < 1e-5,
          detail::fmt_err(err, 1e-5)};
}

inline VerifyCheck verify_hvp() {
  const auto pb = problem_from_name("diffusion");
  MlpSpec spec;
  spec.hidden = {3};
  const auto theta = init_params(spec, 34);
  const auto pts = uniform_sample(pb.domain, 8, 35);
  const std::size_t n = param_count(spec);

  // Dense Hessian columns by finite differences of the gradient.
  std::vector<std::vector<f64>> H(n, std::vector<f64>(n));
  {
    auto th = theta;
    const f64 h = 1e-5;
    std::vector<f64> gp(n), gm(n);
    for (std::size_t i = 0; i < n; ++i) {
      const f64 save = th[i];
      th[i] = save + h;
      LossEngine(pb, spec, th).mean_loss_grad(pts, gp);
      th[i] = save - h;
      LossEngine(pb, spec, th).mean_loss_grad(pts, gm);
      th[i] = save;
      for (std::size_t r = 0; r < n; ++r)
        H[r][i] = (gp[r] - gm[r]) / (2.0 * h);
    }
  }
  f64 hnorm = 0.0;
  for (const auto& row : H) {
    f64 s = 0.0;
    for (f64 v : row) s += std::abs(v);
    hnorm = std::max(hnorm, s);
  }

  f64 err = 0.0;
  Rng rng(36);
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<f64> v(n);
    for (auto& vi : v) vi = rng.uniform(-1.0, 1.0);
    const auto hv = training_hvp(pb, spec, theta, pts, v);
    for (std::size_t r = 0; r < n; ++r) {
      f64 want = 0.0;
      for (std::size_t cidx = 0; cidx < n; ++cidx) want += H[r][cidx] * v[cidx];
      err = std::max(err, std::abs(hv[r] - want));
    }
  }
  const f64 tol = 1e-6 * hnorm;
  return {"hvp vs dense finite-difference Hessian", err < tol,
          detail::fmt_err(err, tol)};
}

inline VerifyCheck verify_closed_forms() {
  f64 err = 0.0;
  std::string worst;
  for (const auto* name : {"diffusion", "wave", "drift_diffusion"}) {
    const auto pb = problem_from_name(name);
    Rng rng(37);
    for (int i = 0; i < 60; ++i) {
      const f64 x = rng.uniform(pb.domain.x0, pb.domain.x1);
      const f64 t = rng.uniform(pb.domain.t0, pb.domain.t1);
      const auto u = closed_form_jets(pb, x, t);
      f64 r;
      if (pb.second_order_time) {
        r = residual_from_jets<f64, 2>(pb, x, t, u);
      } else {
        ad::Jet<f64, 1> u1{u.v, u.dx, u.dxx, u.dt};
        r = residual_from_jets<f64, 1>(pb, x, t, u1);
      }
      if (std::abs(r) > err) {
        err = std::abs(r);
        worst = name;
      }
    }
  }
  return {"closed-form solutions satisfy their PDEs", err < 1e-8,
          "worst " + worst + ": " + detail::fmt_err(err, 1e-8)};
}

inline VerifyCheck verify_ansatz(const VerifyOptions& opt) {
  struct Trace {
    const char* name;
    f64 (*ic)(f64 x);
    f64 (*bc0)(f64 t);
    f64 (*bc1)(f64 t);
  };
  const Trace traces[] = {
      {"diffusion", [](f64 x) { return std::sin(kPi * x); },
       [](f64) { return 0.0; }, [](f64) { return 0.0; }},
      {"burgers", [](f64 x) { return -std::sin(kPi * x); },
       [](f64) { return 0.0; }, [](f64) { return 0.0; }},
      {"allen_cahn", [](f64 x) { return x * x * std::cos(kPi * x); },
       [](f64) { return -1.0; }, [](f64) { return -1.0; }},
      {"wave",
       [](f64 x) {
         return std::sin(kPi * x) + 0.5 * std::sin(4.0 * kPi * x);
       },
       [](f64) { return 0.0; }, [](f64) { return 0.0; }},
      {"drift_diffusion", [](f64 x) { return std::sin(2.0 * x + kPi / 4.0); },
       [](f64 t) {
         return std::sin(kPi / 4.0 - 40.0 * t) * std::exp(-4.0 * t);
       },
       [](f64 t) {
         return std::sin(17.0 * kPi / 4.0 - 40.0 * t) * std::exp(-4.0 * t);
       }}};

  const f64 corrupt = opt.corrupt_ansatz ? 1e-6 : 0.0;
  MlpSpec spec;
  spec.hidden = {4};
  auto theta = init_params(spec, 38);
  for (auto& v : theta) v += 0.05;  // keep the raw net well away from zero

  f64 err = 0.0;
  std::string failing;
  for (const auto& tr : traces) {
    const auto pb = problem_from_name(tr.name);
    Rng rng(39);
    f64 perr = 0.0;
    for (int i = 0; i < 200; ++i) {
      const f64 x = rng.uniform(pb.domain.x0, pb.domain.x1);
      const f64 t = rng.uniform(pb.domain.t0, pb.domain.t1);
      const f64 ic = surrogate(pb, spec, theta, {x, pb.domain.t0}).v + corrupt;
      const f64 b0 = surrogate(pb, spec, theta, {pb.domain.x0, t}).v + corrupt;
      const f64 b1 = surrogate(pb, spec, theta, {pb.domain.x1, t}).v + corrupt;
      perr = std::max(perr, std::abs(ic - tr.ic(x)));
      perr = std::max(perr, std::abs(b0 - tr.bc0(t)));
      perr = std::max(perr, std::abs(b1 - tr.bc1(t)));
      if (pb.second_order_time) {
        const auto j = surrogate(pb, spec, theta, {x, pb.domain.t0});
        perr = std::max(perr, std::abs(j.dt + corrupt));
      }
    }
    if (perr >= 1e-12 && failing.empty()) failing = tr.name;
    err = std::max(err, perr);
  }
  std::string detail = detail::fmt_err(err, 1e-12);
  if (!failing.empty()) detail = "failed for " + failing + "; " + detail;
  return {"ansatz boundary and initial conditions", err < 1e-12, detail};
}

inline VerifyCheck verify_dense_influence() {
  const auto pb = problem_from_name("diffusion");
  MlpSpec spec;
  spec.hidden = {4};
  const auto theta = init_params(spec, 40);
  const std::size_t n = param_count(spec);
  const auto x_train = uniform_sample(pb.domain, 12, 41);
  const auto x_test = uniform_sample(pb.domain, 15, 42);
  const auto cands = uniform_sample(pb.domain, 50, 43);

  LossEngine eng(pb, spec, theta);
  const HvpOperator op = [&](std::span<const f64> v, std::span<f64> out) {
    eng.mean_loss_hvp(x_train, v, out);
  };
  // Full projection: the Krylov basis spans the whole space, so the only
  // approximation left is the shared damping.
  auto lr = arnoldi_low_rank(op, n, n, n, /*seed=*/44, /*tol=*/0.0);
  f64 lmax = 0.0;
  for (f64 ev : lr.eigenvalues) lmax = std::max(lmax, std::abs(ev));
  const f64 damping = 1e-3 * lmax;
  lr.damping = damping;
  InfluenceContext ctx;
  ctx.w = inverse_hvp(lr, test_loss_grad(pb, spec, theta, x_test));
  ctx.identity = false;

  f64 err = 0.0;
  std::vector<f64> scratch(n);
  for (const auto& cand : cands) {
    const f64 got = influence(ctx, eng, cand, scratch);
    const f64 want =
        dense_influence_oracle(pb, spec, theta, x_train, x_test, cand, damping);
    err = std::max(err,
                   std::abs(got - want) / std::max(std::abs(want), 1e-12));
  }
  return {"low-rank influence vs dense inverse", err < 1e-4,
          detail::fmt_err(err, 1e-4)};
}

inline VerifyCheck verify_hammersley() {
  const Box2 unit{0.0, 1.0, 0.0, 1.0};
  const auto got = hammersley(unit, 4);
  // Hand-derived (i/4, radical-inverse-2(i)); boundary-touching zeros are
  // nudged inward by exactly 1e-9 of the axis length.
  const Point2 want[] = {{1e-9, 1e-9}, {0.25, 0.5}, {0.5, 0.25}, {0.75, 0.75}};
  bool ok = got.size() == 4;
  for (std::size_t i = 0; ok && i < 4; ++i)
    ok = got[i].x == want[i].x && got[i].t == want[i].t;
  return {"hammersley first four points", ok,
          ok ? "exact match" : "sequence mismatch"};
}

inline VerifyCheck verify_pmf() {
  const std::vector<f64> scores = {3.0, 1.0};
  struct Case {
    f64 alpha, c, p0, p1;
  };
  // Hand values for S = (3, 1): p_i = (S_i^alpha + c) / sum.
  const Case cases[] = {
      {1.0, 0.0, 0.75, 0.25},
      {2.0, 0.0, 0.9, 0.1},
      {1.0, 1.0, 4.0 / 6.0, 2.0 / 6.0},
  };
  f64 err = 0.0;
  for (const auto& cs : cases) {
    const auto pmf = build_pmf(scores, cs.alpha, cs.c);
    err = std::max(err, std::abs(pmf.p[0] - cs.p0));
    err = std::max(err, std::abs(pmf.p[1] - cs.p1));
  }
  return {"sampling pmf hand values", err < 1e-12,
          detail::fmt_err(err, 1e-12)};
}

inline std::vector<VerifyCheck> run_verify_checks(
    const VerifyOptions& opt = {}) {
  return {
      verify_reverse_gradient(), verify_input_jets(),
      verify_hvp(),              verify_closed_forms(),
      verify_ansatz(opt),        verify_dense_influence(),
      verify_hammersley(),       verify_pmf(),
  };
}

}  // namespace pinn

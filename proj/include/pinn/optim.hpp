// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Full-batch Adam and L-BFGS over an abstract objective. The objective
// exposes value+gradient and a cheaper directional probe (value + slope at
// theta + alpha*dir); the line search runs entirely on probes and only takes
// a full gradient at the accepted point.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pinn/common.hpp"

namespace pinn {

struct Objective {
  virtual ~Objective() = default;
  virtual std::size_t dim() const = 0;
  virtual f64 value_grad(std::span<const f64> theta, std::span<f64> grad) = 0;

  // Loss and directional derivative at theta + alpha*dir. The default does a
  // full evaluation; engines override with a forward-only pass.
  virtual std::pair<f64, f64> probe(std::span<const f64> theta,
                                    std::span<const f64> dir, f64 alpha) {
    probe_theta_.assign(theta.begin(), theta.end());
    for (std::size_t i = 0; i < probe_theta_.size(); ++i)
      probe_theta_[i] += alpha * dir[i];
    probe_grad_.resize(dim());
    const f64 v = value_grad(probe_theta_, probe_grad_);
    f64 slope = 0.0;
    for (std::size_t i = 0; i < probe_grad_.size(); ++i)
      slope += probe_grad_[i] * dir[i];
    return {v, slope};
  }

 private:
  std::vector<f64> probe_theta_, probe_grad_;
};

// ---------------------------------------------------------------------------
// Adam.

struct AdamParams {
  f64 lr = 1e-3;
  f64 beta1 = 0.9;
  f64 beta2 = 0.999;
  f64 eps = 1e-8;
};

struct AdamState {
  std::vector<f64> m, v;
  std::size_t t = 0;
  AdamParams hp;

  void reset(std::size_t dim) {
    m.assign(dim, 0.0);
    v.assign(dim, 0.0);
    t = 0;
  }
};

// n_iters bias-corrected steps theta <- theta - lr * m_hat / (sqrt(v_hat)+eps).
// Returns the loss at the last evaluated iterate (before its update); with
// n_iters = 0 the state is untouched and the loss is just evaluated.
inline f64 adam_run(Objective& obj, std::span<f64> theta, std::size_t n_iters,
                    AdamState& state) {
  const std::size_t n = obj.dim();
  if (theta.size() != n) throw std::invalid_argument("adam_run: theta size");
  if (state.m.empty()) state.reset(n);
  if (state.m.size() != n || state.v.size() != n)
    throw std::invalid_argument("adam_run: state dimension mismatch");

  std::vector<f64> g(n);
  if (n_iters == 0) return obj.value_grad(theta, g);

  const auto& hp = state.hp;
  f64 loss = 0.0;
  for (std::size_t it = 0; it < n_iters; ++it) {
    try {
      loss = obj.value_grad(theta, g);
    } catch (const DivergedError& e) {
      throw DivergedError("adam iteration " + std::to_string(it) + ": " +
                          e.what());
    }
    if (!std::isfinite(loss))
      throw DivergedError("adam iteration " + std::to_string(it) +
                          ": non-finite loss " + std::to_string(loss));
    state.t += 1;
    const f64 bc1 = 1.0 - std::pow(hp.beta1, static_cast<f64>(state.t));
    const f64 bc2 = 1.0 - std::pow(hp.beta2, static_cast<f64>(state.t));
    for (std::size_t i = 0; i < n; ++i) {
      state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g[i];
      state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g[i] * g[i];
      const f64 mhat = state.m[i] / bc1;
      const f64 vhat = state.v[i] / bc2;
      theta[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// L-BFGS with a strong-Wolfe line search.

struct LbfgsParams {
  std::size_t history = 50;
  f64 c1 = 1e-4;
  f64 c2 = 0.9;
  int max_probes = 25;     // line-search budget per iteration
  f64 grad_tol = 1e-9;     // stop when ||g||_inf drops below
  f64 curvature_eps = 1e-10;  // discard pairs with s.y below
  bool line_search = true;    // false: fixed unit step (torch-style default)
};

struct LbfgsResult {
  f64 loss = 0.0;
  std::size_t iterations = 0;
  bool converged = false;       // ||g||_inf < grad_tol reached
  bool line_search_ok = true;   // false: stopped on a failed line search
};

namespace detail {

inline f64 inf_norm(std::span<const f64> v) {
  f64 m = 0.0;
  for (f64 x : v) m = std::max(m, std::abs(x));
  return m;
}

inline f64 dot(std::span<const f64> a, std::span<const f64> b) {
  f64 s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Strong-Wolfe search on phi(a) = f(theta + a*d). Bracketing with doubling,
// then a zoom that interpolates the quadratic through (phi, phi') at the low
// end and phi at the high end — exact on quadratic slices, so quasi-Newton
// retains its finite termination there. Every evaluation is one probe.
// Returns (alpha, phi) or nullopt when the budget runs out.
inline std::optional<std::pair<f64, f64>> wolfe_search(
    Objective& obj, std::span<const f64> theta, std::span<const f64> d, f64 f0,
    f64 g0, const LbfgsParams& hp) {
  int probes = 0;
  const auto phi = [&](f64 a) {
    ++probes;
    return obj.probe(theta, d, a);
  };
  const auto armijo = [&](f64 a, f64 fa) { return fa <= f0 + hp.c1 * a * g0; };

  const auto interp = [](f64 alo, f64 flo, f64 glo, f64 ahi, f64 fhi) {
    const f64 da = ahi - alo;
    const f64 denom = fhi - flo - glo * da;
    f64 a = denom != 0.0 ? alo - 0.5 * glo * da * da / denom
                         : alo + 0.5 * da;
    // Reject steps outside or hugging the bracket ends.
    const f64 lo = std::min(alo, ahi), hi = std::max(alo, ahi);
    const f64 margin = 1e-3 * (hi - lo);
    if (!std::isfinite(a) || a <= lo + margin || a >= hi - margin)
      a = alo + 0.5 * da;
    return a;
  };

  // Bracket [alo, ahi] with flo = phi(alo) the lower value and glo its slope.
  const auto zoom = [&](f64 alo, f64 flo, f64 glo, f64 ahi, f64 fhi) ->
      std::optional<std::pair<f64, f64>> {
    while (probes < hp.max_probes) {
      const f64 a = interp(alo, flo, glo, ahi, fhi);
      const auto [fa, ga] = phi(a);
      if (!armijo(a, fa) || fa >= flo) {
        ahi = a;
        fhi = fa;
        continue;
      }
      if (std::abs(ga) <= -hp.c2 * g0) return std::make_pair(a, fa);
      if (ga * (ahi - alo) >= 0.0) {
        ahi = alo;
        fhi = flo;
      }
      alo = a;
      flo = fa;
      glo = ga;
    }
    return std::nullopt;
  };

  f64 a_prev = 0.0, f_prev = f0, g_prev = g0;
  f64 a = 1.0;
  while (probes < hp.max_probes) {
    const auto [fa, ga] = phi(a);
    if (!std::isfinite(fa)) {  // overshoot into garbage: shrink hard
      a = 0.5 * (a_prev + a);
      continue;
    }
    if (!armijo(a, fa) || (a_prev > 0.0 && fa >= f_prev))
      return zoom(a_prev, f_prev, g_prev, a, fa);
    if (std::abs(ga) <= -hp.c2 * g0) return std::make_pair(a, fa);
    if (ga >= 0.0) return zoom(a, fa, ga, a_prev, f_prev);
    a_prev = a;
    f_prev = fa;
    g_prev = ga;
    a = std::min(2.0 * a, 1e6);
  }
  return std::nullopt;
}

}  // namespace detail

// At most n_iters two-loop quasi-Newton iterations. Stops early at a
// stationary point or when the line search cannot make progress; in both
// cases theta holds the best iterate seen (accepted steps are monotone).
inline LbfgsResult lbfgs_run(Objective& obj, std::span<f64> theta,
                             std::size_t n_iters, const LbfgsParams& hp = {}) {
  const std::size_t n = obj.dim();
  if (theta.size() != n) throw std::invalid_argument("lbfgs_run: theta size");

  std::vector<f64> g(n), g_new(n), d(n), q(n);
  std::vector<std::vector<f64>> s_hist, y_hist;
  std::vector<f64> rho, a_coef;

  LbfgsResult res;
  f64 f = obj.value_grad(theta, g);
  res.loss = f;
  if (detail::inf_norm(g) < hp.grad_tol) {
    res.converged = true;
    return res;
  }

  for (std::size_t it = 0; it < n_iters; ++it) {
    // Two-loop recursion: d = -H g with H0 = gamma I.
    q.assign(g.begin(), g.end());
    const std::size_t m = s_hist.size();
    a_coef.resize(m);
    for (std::size_t j = m; j-- > 0;) {
      a_coef[j] = rho[j] * detail::dot(s_hist[j], q);
      for (std::size_t i = 0; i < n; ++i) q[i] -= a_coef[j] * y_hist[j][i];
    }
    f64 gamma = 1.0;
    if (m > 0) {
      const f64 yy = detail::dot(y_hist[m - 1], y_hist[m - 1]);
      if (yy > 0.0) gamma = detail::dot(s_hist[m - 1], y_hist[m - 1]) / yy;
    }
    for (auto& x : q) x *= gamma;
    for (std::size_t j = 0; j < m; ++j) {
      const f64 b = rho[j] * detail::dot(y_hist[j], q);
      for (std::size_t i = 0; i < n; ++i) q[i] += (a_coef[j] - b) * s_hist[j][i];
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];

    f64 dg = detail::dot(d, g);
    if (!(dg < 0.0)) {  // not a descent direction: drop history, steepest descent
      s_hist.clear();
      y_hist.clear();
      rho.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      dg = -detail::dot(g, g);
      if (!(dg < 0.0)) {
        res.converged = true;
        break;
      }
    }

    f64 alpha = 1.0;
    if (hp.line_search) {
      const auto step = detail::wolfe_search(obj, theta, d, f, dg, hp);
      if (!step) {
        res.line_search_ok = false;
        break;
      }
      alpha = step->first;
    }

    for (std::size_t i = 0; i < n; ++i) theta[i] += alpha * d[i];
    const f64 f_new = obj.value_grad(theta, g_new);
    if (!std::isfinite(f_new))
      throw DivergedError("lbfgs iteration " + std::to_string(it) +
                          ": non-finite loss");

    // Curvature update.
    std::vector<f64> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = alpha * d[i];
      y[i] = g_new[i] - g[i];
    }
    const f64 sy = detail::dot(s, y);
    if (sy > hp.curvature_eps) {
      if (s_hist.size() == hp.history) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho.erase(rho.begin());
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho.push_back(1.0 / sy);
    }

    f = f_new;
    std::swap(g, g_new);
    res.loss = f;
    res.iterations = it + 1;
    if (detail::inf_norm(g) < hp.grad_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace pinn

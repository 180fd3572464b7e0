// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Influence of a candidate point on the test loss at a trained iterate:
//   Inf(x+) = grad L_test . H^-1 grad L(x+)
// with H the training-loss Hessian. H^-1 is approximated by a low-rank
// eigendecomposition obtained from an Arnoldi factorization of the
// Hessian-vector operator, with signed damping on the retained eigenvalues.
// A dense oracle (materialized Hessian) covers small networks in tests.

#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <functional>

#include "pinn/pde.hpp"

namespace pinn {

// v -> H v in parameter space.
using HvpOperator =
    std::function<void(std::span<const f64>, std::span<f64>)>;

struct LowRankHessian {
  std::vector<f64> eigenvalues;        // sorted by |lambda| descending
  std::vector<std::vector<f64>> vecs;  // orthonormal rows, one per eigenvalue
  f64 damping = 0.0;                   // absolute, applied with sign(lambda)
};

// Gradient of the mean per-point loss over the test set.
inline std::vector<f64> test_loss_grad(const PdeProblem& pb, const MlpSpec& spec,
                                       std::span<const f64> theta,
                                       std::span<const Point2> x_test) {
  LossEngine eng(pb, spec, theta);
  std::vector<f64> g(theta.size());
  eng.mean_loss_grad(x_test, g);
  return g;
}

// (1/N) sum_x H(x) v over the training set, fixed point order.
inline std::vector<f64> training_hvp(const PdeProblem& pb, const MlpSpec& spec,
                                     std::span<const f64> theta,
                                     std::span<const Point2> x_train,
                                     std::span<const f64> v) {
  LossEngine eng(pb, spec, theta);
  std::vector<f64> out(theta.size());
  eng.mean_loss_hvp(x_train, v, out);
  return out;
}

// Arnoldi with full reorthogonalization, then Rayleigh-Ritz on the Krylov
// basis: eigendecompose the symmetrized projected matrix and lift the top_k
// eigenpairs by |lambda| back to parameter space. tol is relative to the
// largest |lambda|; pairs below tol * |lambda_max| are dropped. On breakdown
// (invariant subspace) the factorization stops early and uses what it has.
// keep_negative=false additionally drops indefinite directions.
inline LowRankHessian arnoldi_low_rank(const HvpOperator& op,
                                       std::size_t param_dim,
                                       std::size_t projection_dim,
                                       std::size_t top_k, std::uint64_t seed,
                                       f64 tol, bool keep_negative = true) {
  if (projection_dim > param_dim)
    throw std::invalid_argument("arnoldi: projection_dim exceeds param_dim");
  if (top_k > projection_dim)
    throw std::invalid_argument("arnoldi: top_k exceeds projection_dim");
  LowRankHessian lr;
  if (top_k == 0 || projection_dim == 0) return lr;

  const std::size_t n = param_dim;
  const std::size_t m = projection_dim;

  // Orthonormal Krylov basis, grown one column per operator application.
  std::vector<std::vector<f64>> q;
  q.reserve(m + 1);
  {
    Rng rng(seed);
    std::vector<f64> q0(n);
    f64 norm = 0.0;
    for (auto& x : q0) {
      x = rng.uniform(-1.0, 1.0);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : q0) x /= norm;
    q.push_back(std::move(q0));
  }

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
  std::vector<f64> w(n);
  std::size_t steps = 0;
  for (std::size_t j = 0; j < m; ++j) {
    op(q[j], w);
    // Modified Gram-Schmidt, twice (full reorthogonalization).
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i <= j; ++i) {
        f64 c = 0.0;
        for (std::size_t k = 0; k < n; ++k) c += q[i][k] * w[k];
        for (std::size_t k = 0; k < n; ++k) w[k] -= c * q[i][k];
        h(i, j) += c;
      }
    }
    f64 norm = 0.0;
    for (f64 x : w) norm += x * x;
    norm = std::sqrt(norm);
    h(j + 1, j) = norm;
    steps = j + 1;
    if (norm < 1e-12) break;  // invariant subspace found
    std::vector<f64> next(n);
    for (std::size_t k = 0; k < n; ++k) next[k] = w[k] / norm;
    q.push_back(std::move(next));
  }

  // The operator is symmetric, so the projection is tridiagonal up to
  // roundoff; symmetrize before the dense eigensolve.
  const auto hm = h.topLeftCorner(static_cast<Eigen::Index>(steps),
                                  static_cast<Eigen::Index>(steps));
  const Eigen::MatrixXd t = 0.5 * (hm + hm.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);

  std::vector<std::size_t> order(steps);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const f64 la = std::abs(es.eigenvalues()[static_cast<Eigen::Index>(a)]);
    const f64 lb = std::abs(es.eigenvalues()[static_cast<Eigen::Index>(b)]);
    if (la != lb) return la > lb;
    return a < b;
  });

  const f64 lmax =
      steps > 0
          ? std::abs(es.eigenvalues()[static_cast<Eigen::Index>(order[0])])
          : 0.0;
  const f64 cutoff = tol * lmax;
  for (std::size_t r = 0; r < steps && lr.eigenvalues.size() < top_k; ++r) {
    const auto col = static_cast<Eigen::Index>(order[r]);
    const f64 lambda = es.eigenvalues()[col];
    if (!(std::abs(lambda) > cutoff) && tol > 0.0) continue;
    if (lambda < 0.0 && !keep_negative) continue;
    std::vector<f64> e(n, 0.0);
    for (std::size_t i = 0; i < steps; ++i) {
      const f64 c = es.eigenvectors()(static_cast<Eigen::Index>(i), col);
      for (std::size_t k = 0; k < n; ++k) e[k] += c * q[i][k];
    }
    lr.eigenvalues.push_back(lambda);
    lr.vecs.push_back(std::move(e));
  }
  return lr;
}

// Inverse restricted to the retained eigenspace with signed damping:
// sum_i (e_i . v) / (lambda_i + delta sign lambda_i) e_i. Near-singular
// damped eigenvalues are skipped.
inline std::vector<f64> inverse_hvp(const LowRankHessian& lr,
                                    std::span<const f64> v) {
  if (!lr.vecs.empty() && lr.vecs[0].size() != v.size())
    throw std::invalid_argument("inverse_hvp: dimension mismatch");
  std::vector<f64> out(v.size(), 0.0);
  for (std::size_t i = 0; i < lr.eigenvalues.size(); ++i) {
    const f64 lambda = lr.eigenvalues[i];
    const f64 denom =
        lambda + (lambda > 0.0 ? lr.damping : lambda < 0.0 ? -lr.damping : 0.0);
    if (std::abs(denom) < 1e-12) {
      std::fprintf(stderr,
                   "inverse_hvp: skipping near-singular eigenvalue %g\n",
                   lambda);
      continue;
    }
    f64 c = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) c += lr.vecs[i][k] * v[k];
    c /= denom;
    for (std::size_t k = 0; k < v.size(); ++k) out[k] += c * lr.vecs[i][k];
  }
  return out;
}

// Frozen per-cycle state for candidate scoring: w = H^-1 grad L_test, or
// w = grad L_test in identity mode (the Grad-Dot reduction).
struct InfluenceContext {
  std::vector<f64> w;
  bool identity = false;
};

struct InfluenceSettings {
  std::size_t projection_dim = 64;
  std::size_t top_k = 32;
  f64 tol = 1e-6;          // relative eigenvalue cutoff
  f64 damping_rel = 1e-3;  // damping = damping_rel * |lambda_max|
  bool keep_negative = true;
  std::uint64_t seed = 0;  // Arnoldi start vector
};

// Builds the context at theta-hat: one Arnoldi factorization over the
// training Hessian, then one inverse application to the test gradient.
// top_k = 0 bypasses the Hessian entirely (identity mode).
inline InfluenceContext make_influence_context(
    LossEngine& eng, std::span<const Point2> x_train,
    std::span<const Point2> x_test, const InfluenceSettings& st) {
  InfluenceContext ctx;
  std::vector<f64> g_test(eng.dim());
  eng.mean_loss_grad(x_test, g_test);
  if (st.top_k == 0) {
    ctx.identity = true;
    ctx.w = std::move(g_test);
    return ctx;
  }
  const HvpOperator op = [&](std::span<const f64> v, std::span<f64> out) {
    eng.mean_loss_hvp(x_train, v, out);
  };
  const std::size_t proj = std::min(st.projection_dim, eng.dim());
  auto lr = arnoldi_low_rank(op, eng.dim(), proj, std::min(st.top_k, proj),
                             st.seed, st.tol, st.keep_negative);
  if (!lr.eigenvalues.empty())
    lr.damping = st.damping_rel * std::abs(lr.eigenvalues[0]);
  ctx.w = inverse_hvp(lr, g_test);
  return ctx;
}

// Inf(x+) = w . grad L(x+; theta-hat). One reverse-mode gradient.
inline f64 influence(const InfluenceContext& ctx, LossEngine& eng,
                     Point2 x_plus, std::span<f64> grad_scratch) {
  eng.point_loss_grad(x_plus, grad_scratch);
  f64 s = 0.0;
  for (std::size_t i = 0; i < ctx.w.size(); ++i)
    s += ctx.w[i] * grad_scratch[i];
  return s;
}

// Exact Eq.-for-Eq. reference: materializes H column by column, inverts it
// with the same signed damping, and evaluates the influence directly. Only
// for small networks.
inline f64 dense_influence_oracle(const PdeProblem& pb, const MlpSpec& spec,
                                  std::span<const f64> theta,
                                  std::span<const Point2> x_train,
                                  std::span<const Point2> x_test, Point2 x_plus,
                                  f64 damping) {
  const std::size_t n = theta.size();
  if (n > 500)
    throw std::invalid_argument("dense_influence_oracle: network too large");
  LossEngine eng(pb, spec, theta);

  Eigen::MatrixXd H(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<f64> e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    eng.mean_loss_hvp(x_train, e, col);
    for (std::size_t i = 0; i < n; ++i)
      H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    e[j] = 0.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (H + H.transpose()));

  std::vector<f64> g_test(n), g_plus(n);
  eng.mean_loss_grad(x_test, g_test);
  eng.point_loss_grad(x_plus, g_plus);
  const Eigen::Map<const Eigen::VectorXd> gt(g_test.data(),
                                             static_cast<Eigen::Index>(n));
  const Eigen::Map<const Eigen::VectorXd> gp(g_plus.data(),
                                             static_cast<Eigen::Index>(n));
  const Eigen::VectorXd a = es.eigenvectors().transpose() * gt;
  const Eigen::VectorXd b = es.eigenvectors().transpose() * gp;
  f64 s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const f64 lambda = es.eigenvalues()[i];
    const f64 denom =
        lambda + (lambda > 0.0 ? damping : lambda < 0.0 ? -damping : 0.0);
    if (std::abs(denom) < 1e-12) continue;
    s += a[i] * b[i] / denom;
  }
  return s;
}

}  // namespace pinn

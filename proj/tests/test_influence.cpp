// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "catch2/catch_amalgamated.hpp"
#include "oracles.hpp"
#include "pinn/influence.hpp"
#include "pinn/optim.hpp"
#include "pinn/sampling.hpp"

using namespace pinn;

namespace {

MlpSpec tiny_spec() {
  MlpSpec spec;
  spec.hidden = {4, 4};
  return spec;
}

// Dense eigen-decomposition of an operator given by its matrix action.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense_eigs(const HvpOperator& op,
                                                          std::size_t n) {
  Eigen::MatrixXd H(n, n);
  std::vector<f64> e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    op(e, col);
    for (std::size_t i = 0; i < n; ++i)
      H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    e[j] = 0.0;
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
      0.5 * (H + H.transpose()));
}

HvpOperator matrix_op(const Eigen::MatrixXd& A) {
  return [A](std::span<const f64> v, std::span<f64> out) {
    const Eigen::Map<const Eigen::VectorXd> vv(v.data(),
                                               static_cast<Eigen::Index>(v.size()));
    Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) =
        A * vv;
  };
}

Eigen::MatrixXd random_spd(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd B(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rng.uniform(-1.0, 1.0);
  return B * B.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

f64 spearman(std::span<const f64> a, std::span<const f64> b) {
  const std::size_t n = a.size();
  auto ranks = [n](std::span<const f64> v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<f64> r(n);
    for (std::size_t k = 0; k < n; ++k) r[idx[k]] = static_cast<f64>(k);
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const f64 mean = (static_cast<f64>(n) - 1.0) / 2.0;
  f64 num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (ra[i] - mean) * (rb[i] - mean);
    da += (ra[i] - mean) * (ra[i] - mean);
    db += (rb[i] - mean) * (rb[i] - mean);
  }
  return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("test_loss_grad: mean structure and vanishing residuals") {
  const auto pb = problem_from_name("diffusion");
  const auto spec = tiny_spec();
  auto theta = init_params(spec, 4);
  for (auto& v : theta) v += 0.02;

  // Single-point test set equals that point's loss gradient (no 1/N).
  const Point2 p{0.3, 0.7};
  const std::vector<Point2> one{p};
  const auto g1 = test_loss_grad(pb, spec, theta, one);
  LossEngine eng(pb, spec, theta);
  std::vector<f64> gp(theta.size());
  eng.point_loss_grad(p, gp);
  for (std::size_t i = 0; i < gp.size(); ++i)
    CHECK(g1[i] == Catch::Approx(gp[i]).margin(1e-15));

  // Two-point set is the mean of the single-point gradients.
  const Point2 p2{-0.4, 0.2};
  const std::vector<Point2> two{p, p2};
  const auto g2 = test_loss_grad(pb, spec, theta, two);
  std::vector<f64> gp2(theta.size());
  eng.point_loss_grad(p2, gp2);
  for (std::size_t i = 0; i < gp.size(); ++i)
    CHECK(g2[i] == Catch::Approx(0.5 * (gp[i] + gp2[i])).margin(1e-14));

  // Points where every residual vanishes (x = 0 with a zero network: the
  // lift solves the PDE there) give a zero gradient.
  std::vector<f64> zero_theta(param_count(spec), 0.0);
  const std::vector<Point2> null_set{{0.0, 0.25}, {0.0, 0.5}, {0.0, 0.75}};
  const auto g0 = test_loss_grad(pb, spec, zero_theta, null_set);
  CHECK(oracle::max_abs(g0) < 1e-8);

  CHECK_THROWS_AS(test_loss_grad(pb, spec, theta, {}), std::invalid_argument);
}

TEST_CASE("training_hvp: linearity, single point, dense FD oracle") {
  const auto pb = problem_from_name("burgers");
  MlpSpec spec;
  spec.hidden = {3};  // 13 parameters
  auto theta = init_params(spec, 6);
  for (auto& v : theta) v += 0.05;
  const auto pts = uniform_sample(pb.domain, 7, 19);

  const std::vector<f64> zero(theta.size(), 0.0);
  CHECK(oracle::max_abs(training_hvp(pb, spec, theta, pts, zero)) == 0.0);

  Rng rng(5);
  std::vector<f64> v(theta.size());
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);

  const std::vector<Point2> one{pts[0]};
  const auto hv1 = training_hvp(pb, spec, theta, one, v);
  LossEngine eng(pb, spec, theta);
  std::vector<f64> hv1b(theta.size());
  eng.mean_loss_hvp(one, v, hv1b);
  CHECK(hv1 == hv1b);

  // Dense finite-difference Hessian from the gradient path.
  oracle::GradFn gf = [&](std::span<const f64> th) {
    LossEngine e2(pb, spec, th);
    std::vector<f64> g(th.size());
    e2.mean_loss_grad(pts, g);
    return g;
  };
  const auto H = oracle::fd_hessian(gf, theta, 1e-5);
  const f64 hnorm = [&] {
    f64 m = 0.0;
    for (const auto& row : H) m = std::max(m, oracle::max_abs(row));
    return m;
  }();
  const auto hv = training_hvp(pb, spec, theta, pts, v);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    f64 want = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) want += H[i][j] * v[j];
    CHECK(std::abs(hv[i] - want) < 1e-6 * std::max(hnorm, 1.0));
  }

  std::vector<f64> bad(theta.size() + 1, 0.0);
  CHECK_THROWS_AS(training_hvp(pb, spec, theta, pts, bad),
                  std::invalid_argument);
}

TEST_CASE("arnoldi: diagonal operator recovered exactly") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 2.0;
  A(1, 1) = 4.0;
  const auto lr = arnoldi_low_rank(matrix_op(A), 2, 2, 2, 1, 0.0);
  REQUIRE(lr.eigenvalues.size() == 2);
  CHECK(lr.eigenvalues[0] == Catch::Approx(4.0).margin(1e-10));
  CHECK(lr.eigenvalues[1] == Catch::Approx(2.0).margin(1e-10));
  CHECK(std::abs(lr.vecs[0][1]) == Catch::Approx(1.0).margin(1e-10));
  CHECK(std::abs(lr.vecs[1][0]) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("arnoldi: full projection matches the dense spectrum") {
  const std::size_t n = 24;
  Rng rng(88);
  // Symmetric indefinite matrix with a spread spectrum.
  Eigen::MatrixXd B(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const f64 x = rng.uniform(-1.0, 1.0);
      B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
      B(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = x;
    }
  const auto op = matrix_op(B);
  const auto lr = arnoldi_low_rank(op, n, n, n, 3, 0.0);
  const auto es = dense_eigs(op, n);
  REQUIRE(lr.eigenvalues.size() == n);

  std::vector<f64> dense(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::sort(dense.begin(), dense.end(),
            [](f64 a, f64 b) { return std::abs(a) > std::abs(b); });
  for (std::size_t i = 0; i < n; ++i) {
    INFO("eigenvalue " << i);
    CHECK(oracle::rel_err(lr.eigenvalues[i], dense[i]) < 1e-6);
  }

  // Rows orthonormal.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      f64 d = 0.0;
      for (std::size_t k = 0; k < n; ++k) d += lr.vecs[i][k] * lr.vecs[j][k];
      CHECK(std::abs(d - (i == j ? 1.0 : 0.0)) < 1e-8);
    }
}

TEST_CASE("arnoldi: rank-1 operator keeps a single eigenpair") {
  const std::size_t n = 10;
  Rng rng(2);
  Eigen::VectorXd u(n);
  for (std::size_t i = 0; i < n; ++i)
    u(static_cast<Eigen::Index>(i)) = rng.uniform(-1.0, 1.0);
  const Eigen::MatrixXd A = u * u.transpose();
  const auto lr = arnoldi_low_rank(matrix_op(A), n, 6, 6, 11, 1e-6);
  REQUIRE(lr.eigenvalues.size() == 1);
  CHECK(lr.eigenvalues[0] == Catch::Approx(u.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("arnoldi: identity operator breaks down gracefully") {
  const std::size_t n = 8;
  const auto lr = arnoldi_low_rank(matrix_op(Eigen::MatrixXd::Identity(n, n)),
                                   n, 5, 5, 17, 0.0);
  // Krylov space is one-dimensional; the single Ritz value is exact.
  REQUIRE(lr.eigenvalues.size() == 1);
  CHECK(lr.eigenvalues[0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("arnoldi: argument validation and top_k zero") {
  const auto op = matrix_op(Eigen::MatrixXd::Identity(4, 4));
  CHECK_THROWS_AS(arnoldi_low_rank(op, 4, 5, 2, 1, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(arnoldi_low_rank(op, 4, 3, 4, 1, 0.0),
                  std::invalid_argument);
  CHECK(arnoldi_low_rank(op, 4, 4, 0, 1, 0.0).eigenvalues.empty());
}

TEST_CASE("arnoldi: keep_negative=false drops indefinite directions") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
  A(0, 0) = 5.0;
  A(1, 1) = -3.0;
  A(2, 2) = 1.0;
  const auto all = arnoldi_low_rank(matrix_op(A), 3, 3, 3, 4, 0.0, true);
  REQUIRE(all.eigenvalues.size() == 3);
  CHECK(all.eigenvalues[1] == Catch::Approx(-3.0).margin(1e-9));
  const auto pos = arnoldi_low_rank(matrix_op(A), 3, 3, 3, 4, 0.0, false);
  REQUIRE(pos.eigenvalues.size() == 2);
  CHECK(pos.eigenvalues[0] == Catch::Approx(5.0).margin(1e-9));
  CHECK(pos.eigenvalues[1] == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("inverse_hvp: diagonal case, complement, symmetry, damping") {
  LowRankHessian lr;
  lr.eigenvalues = {4.0, 2.0};
  lr.vecs = {{0.0, 1.0, 0.0}, {1.0, 0.0, 0.0}};
  lr.damping = 0.0;

  const std::vector<f64> v{1.0, 1.0, 0.0};
  const auto w = inverse_hvp(lr, v);
  CHECK(w[0] == Catch::Approx(0.5));
  CHECK(w[1] == Catch::Approx(0.25));
  CHECK(w[2] == 0.0);

  // Orthogonal complement contributes nothing.
  const std::vector<f64> perp{0.0, 0.0, 3.0};
  CHECK(oracle::max_abs(inverse_hvp(lr, perp)) == 0.0);

  // Bilinear symmetry u . inv(v) = v . inv(u).
  Rng rng(14);
  std::vector<f64> u(3), x(3);
  for (auto& a : u) a = rng.uniform(-1.0, 1.0);
  for (auto& a : x) a = rng.uniform(-1.0, 1.0);
  const auto iu = inverse_hvp(lr, u);
  const auto ix = inverse_hvp(lr, x);
  f64 s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    s1 += u[i] * ix[i];
    s2 += x[i] * iu[i];
  }
  CHECK(oracle::rel_err(s1, s2) < 1e-10);

  // Signed damping: positive and negative eigenvalues both move away from 0.
  LowRankHessian pm;
  pm.eigenvalues = {2.0, -2.0};
  pm.vecs = {{1.0, 0.0}, {0.0, 1.0}};
  pm.damping = 0.5;
  const auto wd = inverse_hvp(pm, std::vector<f64>{1.0, 1.0});
  CHECK(wd[0] == Catch::Approx(1.0 / 2.5));
  CHECK(wd[1] == Catch::Approx(-1.0 / 2.5));

  // Near-singular damped eigenvalue is skipped, not inverted.
  LowRankHessian sing;
  sing.eigenvalues = {1e-15};
  sing.vecs = {{1.0, 0.0}};
  sing.damping = 0.0;
  CHECK(oracle::max_abs(inverse_hvp(sing, std::vector<f64>{1.0, 1.0})) == 0.0);
}

TEST_CASE("inverse_hvp round-trips a full-rank SPD operator") {
  const std::size_t n = 12;
  const auto A = random_spd(n, 33);
  const auto op = matrix_op(A);
  auto lr = arnoldi_low_rank(op, n, n, n, 9, 0.0);
  REQUIRE(lr.eigenvalues.size() == n);

  Rng rng(71);
  std::vector<f64> w(n), hw(n);
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  op(w, hw);
  const auto back = inverse_hvp(lr, hw);
  for (std::size_t i = 0; i < n; ++i) {
    INFO("component " << i);
    CHECK(oracle::rel_err(back[i], w[i]) < 1e-5);
  }

  // PSD monotonicity: doubling the damping shrinks the quadratic form.
  std::vector<f64> g(n);
  for (auto& x : g) x = rng.uniform(-1.0, 1.0);
  f64 prev = std::numeric_limits<f64>::infinity();
  for (f64 delta : {0.1, 0.2, 0.4}) {
    lr.damping = delta;
    const auto iv = inverse_hvp(lr, g);
    f64 q = 0.0;
    for (std::size_t i = 0; i < n; ++i) q += g[i] * iv[i];
    CHECK(q > 0.0);
    CHECK(q < prev);
    prev = q;
  }
}

TEST_CASE("influence: identity mode is exactly the test-gradient dot") {
  const auto pb = problem_from_name("diffusion");
  const auto spec = tiny_spec();
  auto theta = init_params(spec, 23);
  for (auto& v : theta) v += 0.01;
  const auto x_test = uniform_sample(pb.domain, 12, 3);
  const auto x_train = uniform_sample(pb.domain, 15, 4);

  LossEngine eng(pb, spec, theta);
  InfluenceSettings st;
  st.top_k = 0;
  const auto ctx = make_influence_context(eng, x_train, x_test, st);
  CHECK(ctx.identity);

  std::vector<f64> scratch(theta.size());
  const Point2 cand{0.2, 0.6};
  const f64 inf = influence(ctx, eng, cand, scratch);

  const auto g_test = test_loss_grad(pb, spec, theta, x_test);
  std::vector<f64> gp(theta.size());
  eng.point_loss_grad(cand, gp);
  f64 dot = 0.0;
  for (std::size_t i = 0; i < gp.size(); ++i) dot += g_test[i] * gp[i];
  CHECK(inf == dot);
}

TEST_CASE("influence: additive over candidate sets and zero at dead points") {
  const auto pb = problem_from_name("diffusion");
  const auto spec = tiny_spec();
  auto theta = init_params(spec, 29);
  for (auto& v : theta) v += 0.02;
  const auto x_test = uniform_sample(pb.domain, 10, 41);
  const auto x_train = uniform_sample(pb.domain, 20, 42);

  LossEngine eng(pb, spec, theta);
  InfluenceSettings st;
  st.projection_dim = 16;
  st.top_k = 16;
  st.seed = 77;
  const auto ctx = make_influence_context(eng, x_train, x_test, st);

  const auto cands = uniform_sample(pb.domain, 5, 43);
  std::vector<f64> scratch(theta.size());
  f64 sum = 0.0;
  for (const auto& c : cands) sum += influence(ctx, eng, c, scratch);

  // Batched: N * mean gradient over the candidates is the summed gradient.
  std::vector<f64> gsum(theta.size());
  eng.mean_loss_grad(cands, gsum);
  f64 batched = 0.0;
  for (std::size_t i = 0; i < gsum.size(); ++i)
    batched += ctx.w[i] * gsum[i] * static_cast<f64>(cands.size());
  CHECK(oracle::rel_err(sum, batched) < 1e-10);

  // Residual-stationary candidate: zero theta makes x = 0 loss-flat.
  std::vector<f64> zero_theta(param_count(spec), 0.0);
  LossEngine eng0(pb, spec, zero_theta);
  const f64 dead = influence(ctx, eng0, {0.0, 0.5}, scratch);
  CHECK(std::abs(dead) < 1e-12);
}

TEST_CASE("influence agrees with the dense oracle at full projection") {
  const auto pb = problem_from_name("diffusion");
  const auto spec = tiny_spec();  // 37 parameters
  auto theta = init_params(spec, 51);
  for (auto& v : theta) v += 0.03;
  const auto x_train = uniform_sample(pb.domain, 25, 52);
  const auto x_test = uniform_sample(pb.domain, 15, 53);
  const std::size_t n = theta.size();

  LossEngine eng(pb, spec, theta);
  const HvpOperator op = [&](std::span<const f64> v, std::span<f64> out) {
    eng.mean_loss_hvp(x_train, v, out);
  };
  auto lr = arnoldi_low_rank(op, n, n, n, 101, 0.0);
  const f64 delta = 1e-3;
  lr.damping = delta;

  const auto g_test = test_loss_grad(pb, spec, theta, x_test);
  InfluenceContext ctx;
  ctx.w = inverse_hvp(lr, g_test);

  std::vector<f64> scratch(n);
  for (const auto& cand : uniform_sample(pb.domain, 6, 54)) {
    const f64 fast = influence(ctx, eng, cand, scratch);
    const f64 exact = dense_influence_oracle(pb, spec, theta, x_train, x_test,
                                             cand, delta);
    INFO("candidate (" << cand.x << ", " << cand.t << ")");
    CHECK(oracle::rel_err(fast, exact) < 1e-4);
  }
}

TEST_CASE("dense oracle size guard") {
  MlpSpec big;
  big.hidden = {32, 32};
  const auto pb = problem_from_name("diffusion");
  const auto theta = init_params(big, 1);
  CHECK_THROWS_AS(
      dense_influence_oracle(pb, big, theta, {}, {}, {0.0, 0.5}, 0.0),
      std::invalid_argument);
}

TEST_CASE("fast low-rank influence rank-correlates with the dense oracle") {
  const auto pb = problem_from_name("diffusion");
  MlpSpec spec;
  spec.hidden = {8, 8};  // 105 parameters, genuinely truncated at proj 64
  auto theta = init_params(spec, 61);
  const auto x_train = hammersley(pb.domain, 40);
  const auto x_test = uniform_sample(pb.domain, 30, 62);

  // A short training run so the Hessian has meaningful structure.
  LossEngine eng(pb, spec, theta);
  struct EngObj final : Objective {
    LossEngine* e;
    std::span<const Point2> pts;
    std::size_t dim() const override { return e->dim(); }
    f64 value_grad(std::span<const f64> th, std::span<f64> g) override {
      e->set_theta(th);
      return e->mean_loss_grad(pts, g);
    }
  } obj;
  obj.e = &eng;
  obj.pts = x_train;
  AdamState st;
  st.hp.lr = 5e-3;
  adam_run(obj, theta, 300, st);
  eng.set_theta(theta);

  InfluenceSettings is;
  is.projection_dim = 64;
  is.top_k = 64;
  is.tol = 0.0;
  is.damping_rel = 1e-3;
  is.seed = 63;
  const auto ctx = make_influence_context(eng, x_train, x_test, is);

  // The oracle needs the same absolute damping the fast path derived.
  const HvpOperator op = [&](std::span<const f64> v, std::span<f64> out) {
    eng.mean_loss_hvp(x_train, v, out);
  };
  auto probe_lr = arnoldi_low_rank(op, theta.size(), 64, 1, is.seed, 0.0);
  const f64 delta = is.damping_rel * std::abs(probe_lr.eigenvalues.at(0));

  const auto cands = uniform_sample(pb.domain, 200, 64);
  std::vector<f64> fast(cands.size()), exact(cands.size());
  std::vector<f64> scratch(theta.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    fast[i] = influence(ctx, eng, cands[i], scratch);
    exact[i] = dense_influence_oracle(pb, spec, theta, x_train, x_test,
                                      cands[i], delta);
  }
  const f64 rho = spearman(fast, exact);
  INFO("spearman rho = " << rho);
  CHECK(rho > 0.9);
}

// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// The five benchmark problems: domain, residual operator, hard-constraint
// ansatz, reference solution, and ground-truth grid ingestion. The ansatz
// window and lift are functions of (x, t) only, so their jets are computed in
// plain doubles and folded into whatever scalar ring the network runs in.

#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <utility>

#include "pinn/mlp.hpp"

namespace pinn {

enum class PdeKind { kDiffusion, kBurgers, kAllenCahn, kWave, kDriftDiffusion };

struct PdeProblem {
  PdeKind kind = PdeKind::kDiffusion;
  std::string name = "diffusion";
  Box2 domain;
  std::vector<int> default_hidden;
  std::size_t default_n_train = 1000;
  std::size_t default_n_new = 10;
  bool closed_form = true;
  bool second_order_time = false;

  // Coefficients; each problem reads the ones it owns.
  f64 nu = 0.01 / kPi;  // Burgers' viscosity (configurable)
  f64 D = 1e-3;         // Allen-Cahn diffusivity
  f64 c = 2.0;          // wave speed
  f64 alpha = 1.0;      // drift-diffusion diffusivity
  f64 beta = 20.0;      // drift-diffusion drift

  bool gridded() const { return !closed_form; }
};

inline PdeProblem make_problem(PdeKind kind) {
  PdeProblem p;
  p.kind = kind;
  switch (kind) {
    case PdeKind::kDiffusion:
      p.name = "diffusion";
      p.domain = {-1.0, 1.0, 0.0, 1.0};
      p.default_hidden = {32, 32, 32};
      p.default_n_train = 30;
      p.default_n_new = 1;
      break;
    case PdeKind::kBurgers:
      p.name = "burgers";
      p.domain = {-1.0, 1.0, 0.0, 1.0};
      p.default_hidden = {32, 32, 32};
      p.closed_form = false;
      break;
    case PdeKind::kAllenCahn:
      p.name = "allen_cahn";
      p.domain = {-1.0, 1.0, 0.0, 1.0};
      p.default_hidden = {64, 64, 64};
      p.closed_form = false;
      break;
    case PdeKind::kWave:
      p.name = "wave";
      p.domain = {0.0, 1.0, 0.0, 1.0};
      p.default_hidden = {100, 100, 100, 100, 100};
      p.second_order_time = true;
      break;
    case PdeKind::kDriftDiffusion:
      p.name = "drift_diffusion";
      p.domain = {0.0, 2.0 * kPi, 0.0, 1.0};
      p.default_hidden = {64, 64, 64};
      break;
  }
  return p;
}

inline const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = {
      "diffusion", "burgers", "allen_cahn", "wave", "drift_diffusion"};
  return names;
}

inline PdeProblem problem_from_name(const std::string& name) {
  if (name == "diffusion") return make_problem(PdeKind::kDiffusion);
  if (name == "burgers") return make_problem(PdeKind::kBurgers);
  if (name == "allen_cahn") return make_problem(PdeKind::kAllenCahn);
  if (name == "wave") return make_problem(PdeKind::kWave);
  if (name == "drift_diffusion") return make_problem(PdeKind::kDriftDiffusion);
  throw ConfigError("unknown problem '" + name +
                    "' (expected diffusion|burgers|allen_cahn|wave|"
                    "drift_diffusion)");
}

// ---------------------------------------------------------------------------
// Hard-constraint ansatz: phi = a(x,t) + w(x,t) * N(x,t). a matches the
// initial/boundary data, w vanishes on the constrained manifolds.

namespace detail {

template <int TO>
struct AnsatzParts {
  ad::Jet<f64, TO> a, w;
};

template <int TO>
AnsatzParts<TO> ansatz_parts(const PdeProblem& pb, f64 x, f64 t) {
  using J = ad::Jet<f64, TO>;
  const J X = ad::seed_x<f64, TO>(x);
  const J T = ad::seed_t<f64, TO>(t);
  AnsatzParts<TO> out;
  switch (pb.kind) {
    case PdeKind::kDiffusion:
      out.a = ad::sin(X * kPi);
      out.w = T * (1.0 - X * X);
      break;
    case PdeKind::kBurgers:
      out.a = -ad::sin(X * kPi);
      out.w = T * (1.0 - X * X);
      break;
    case PdeKind::kAllenCahn:
      out.a = (X * X) * ad::cos(X * kPi);
      out.w = T * (1.0 - X * X);
      break;
    case PdeKind::kWave:
      out.a = ad::sin(X * kPi) + 0.5 * ad::sin(X * (4.0 * kPi));
      out.w = (T * T) * (X * (1.0 - X));
      break;
    case PdeKind::kDriftDiffusion: {
      // Transfinite lift between the two time-dependent boundary traces.
      const f64 L = 2.0 * kPi;
      const J ic = ad::sin(2.0 * X + kPi / 4.0);
      const J decay = ad::exp(T * (-4.0 * pb.alpha));
      const J g0 = ad::sin(kPi / 4.0 - 2.0 * pb.beta * T) * decay;
      const J g1 = ad::sin(17.0 * kPi / 4.0 - 2.0 * pb.beta * T) * decay;
      const f64 g0_0 = std::sin(kPi / 4.0);
      const f64 g1_0 = std::sin(17.0 * kPi / 4.0);
      const J xi = X / L;
      out.a = ic + (1.0 - xi) * (g0 - g0_0) + xi * (g1 - g1_0);
      out.w = T * (X * (L - X));
      break;
    }
  }
  return out;
}

}  // namespace detail

template <class S, int TO>
ad::Jet<S, TO> apply_ansatz(const PdeProblem& pb, f64 x, f64 t,
                            const ad::Jet<S, TO>& net) {
  const auto parts = detail::ansatz_parts<TO>(pb, x, t);
  return ad::lift<S>(parts.a) + ad::lift<S>(parts.w) * net;
}

// Constrained surrogate as a jet in the given scalar ring.
template <class S, int TO>
ad::Jet<S, TO> surrogate_jets(const PdeProblem& pb, const MlpSpec& spec,
                              std::span<const S> theta, f64 x, f64 t) {
  const auto xj = ad::seed_x<S, TO>(x);
  const auto tj = ad::seed_t<S, TO>(t);
  const auto net = mlp_forward_jets<S, TO>(spec, theta, xj, tj);
  return apply_ansatz<S, TO>(pb, x, t, net);
}

// N[phi] evaluated from the surrogate's jets. The same combination code serves
// the network surrogate and the closed-form solutions.
template <class S, int TO>
S residual_from_jets(const PdeProblem& pb, f64 x, f64 t,
                     const ad::Jet<S, TO>& u) {
  switch (pb.kind) {
    case PdeKind::kDiffusion: {
      const f64 forcing =
          (kPi * kPi - 1.0) * std::sin(kPi * x) * std::exp(-t);
      return u.dt - u.dxx - forcing;
    }
    case PdeKind::kBurgers:
      return u.dt + u.v * u.dx - pb.nu * u.dxx;
    case PdeKind::kAllenCahn:
      return u.dt - pb.D * u.dxx + 5.0 * (u.v - u.v * u.v * u.v);
    case PdeKind::kWave:
      if constexpr (TO == 2) {
        return u.dtt - (pb.c * pb.c) * u.dxx;
      } else {
        throw std::logic_error("wave residual needs second-order time jets");
      }
    case PdeKind::kDriftDiffusion:
      return u.dt - pb.alpha * u.dxx + pb.beta * u.dx;
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Closed-form reference solutions.

inline ad::Jet<f64, 2> closed_form_jets(const PdeProblem& pb, f64 x, f64 t) {
  using J = ad::Jet<f64, 2>;
  const J X = ad::seed_x<f64, 2>(x);
  const J T = ad::seed_t<f64, 2>(t);
  switch (pb.kind) {
    case PdeKind::kDiffusion:
      return ad::sin(X * kPi) * ad::exp(-T);
    case PdeKind::kWave:
      return ad::sin(X * kPi) * ad::cos(T * (2.0 * kPi)) +
             0.5 * ad::sin(X * (4.0 * kPi)) * ad::cos(T * (8.0 * kPi));
    case PdeKind::kDriftDiffusion:
      return ad::sin(2.0 * X - 2.0 * pb.beta * T + kPi / 4.0) *
             ad::exp(T * (-4.0 * pb.alpha));
    default:
      throw std::invalid_argument("no closed-form solution for " + pb.name);
  }
}

inline f64 exact_solution(const PdeProblem& pb, Point2 p) {
  return closed_form_jets(pb, p.x, p.t).v;
}

// ---------------------------------------------------------------------------
// Spec-level convenience ops over a frozen theta.

inline ad::Jet<f64, 2> surrogate(const PdeProblem& pb, const MlpSpec& spec,
                                 std::span<const f64> theta, Point2 p) {
  return surrogate_jets<f64, 2>(pb, spec, theta, p.x, p.t);
}

inline f64 residual(const PdeProblem& pb, const MlpSpec& spec,
                    std::span<const f64> theta, Point2 p) {
  if (pb.second_order_time) {
    const auto u = surrogate_jets<f64, 2>(pb, spec, theta, p.x, p.t);
    return residual_from_jets<f64, 2>(pb, p.x, p.t, u);
  }
  const auto u = surrogate_jets<f64, 1>(pb, spec, theta, p.x, p.t);
  return residual_from_jets<f64, 1>(pb, p.x, p.t, u);
}

// ---------------------------------------------------------------------------
// Specialized reverse pass for the point loss r(x,t)^2. The taped graph in
// autodiff.hpp computes the same derivatives; this pass exists because training
// evaluates them millions of times, and recording ~5k nodes per point costs
// more than the arithmetic itself. It runs the jet forward layer by layer,
// keeps the pre- and post-activation jets, and sweeps adjoints back through
// the tanh and affine stages in place. Templated over the ring: R = f64 gives
// gradients, R = Dual gives directional probes and exact Hessian-vector
// products. Tests pin its output against the taped path.

namespace detail {

template <class R, int TO>
class PointKernel {
 public:
  static constexpr int kComps = TO == 2 ? 5 : 4;
  using CV = std::array<R, kComps>;  // (v, dx, dxx, dt[, dtt])

  PointKernel(const PdeProblem& pb, const MlpSpec& spec)
      : pb_(pb), dims_(layer_dims(spec)) {
    level_off_.resize(dims_.size());
    off_.resize(dims_.size() - 1);
    std::size_t acts = 0, off = 0;
    int wmax = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      level_off_[k] = acts;
      acts += static_cast<std::size_t>(dims_[k]);
      wmax = std::max(wmax, dims_[k]);
    }
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      off_[l] = off;
      off += static_cast<std::size_t>(dims_[l] + 1) * dims_[l + 1];
    }
    h_.resize(acts);
    u_.resize(acts - dims_[0]);
    ubar_.resize(wmax);
    hbar_.resize(wmax);
  }

  // Residual value at p (forward sweep only).
  R residual(Point2 p, std::span<const R> theta) {
    forward(p, theta);
    return r_;
  }

  // r^2 at p, with d(r^2)/dtheta accumulated (+=) into grad.
  R loss_grad(Point2 p, std::span<const R> theta, std::span<R> grad) {
    forward(p, theta);
    backward(theta, grad);
    return r_ * r_;
  }

 private:
  void forward(Point2 p, std::span<const R> theta) {
    h_[0] = CV{};
    h_[1] = CV{};
    h_[0][0] = R(p.x);
    h_[0][1] = R(1.0);
    h_[1][0] = R(p.t);
    h_[1][3] = R(1.0);
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      const int n_in = dims_[l], n_out = dims_[l + 1];
      const R* w = theta.data() + off_[l];
      const R* b = w + static_cast<std::size_t>(n_in) * n_out;
      const CV* in = &h_[level_off_[l]];
      CV* uo = &u_[level_off_[l + 1] - dims_[0]];
      CV* ho = &h_[level_off_[l + 1]];
      const bool hidden = l + 2 < dims_.size();
      for (int i = 0; i < n_out; ++i) {
        const R* wi = w + static_cast<std::size_t>(i) * n_in;
        CV acc{};
        acc[0] = b[i];
        for (int j = 0; j < n_in; ++j)
          for (int c = 0; c < kComps; ++c) acc[c] = acc[c] + wi[j] * in[j][c];
        uo[i] = acc;
        ho[i] = hidden ? tanh_jet(acc) : acc;
      }
    }
    aw_ = ansatz_parts<TO>(pb_, p.x, p.t);
    const CV& n = h_[level_off_.back()];
    phi_[0] = aw_.a.v + aw_.w.v * n[0];
    phi_[1] = aw_.a.dx + aw_.w.dx * n[0] + aw_.w.v * n[1];
    phi_[2] = aw_.a.dxx + aw_.w.dxx * n[0] + 2.0 * aw_.w.dx * n[1] +
              aw_.w.v * n[2];
    phi_[3] = aw_.a.dt + aw_.w.dt * n[0] + aw_.w.v * n[3];
    ad::Jet<R, TO> u;
    u.v = phi_[0];
    u.dx = phi_[1];
    u.dxx = phi_[2];
    u.dt = phi_[3];
    if constexpr (TO == 2) {
      phi_[4] = aw_.a.dtt + aw_.w.dtt * n[0] + 2.0 * aw_.w.dt * n[3] +
                aw_.w.v * n[4];
      u.dtt = phi_[4];
    }
    r_ = residual_from_jets<R, TO>(pb_, p.x, p.t, u);
  }

  void backward(std::span<const R> theta, std::span<R> grad) {
    // d(r^2)/dr, then the residual's partials in the surrogate's jet
    // components, mirroring residual_from_jets.
    const R rb = 2.0 * r_;
    CV pbar{};
    switch (pb_.kind) {
      case PdeKind::kDiffusion:
        pbar[3] = rb;
        pbar[2] = -rb;
        break;
      case PdeKind::kBurgers:
        pbar[3] = rb;
        pbar[0] = rb * phi_[1];
        pbar[1] = rb * phi_[0];
        pbar[2] = -pb_.nu * rb;
        break;
      case PdeKind::kAllenCahn:
        pbar[3] = rb;
        pbar[2] = -pb_.D * rb;
        pbar[0] = rb * (5.0 * (1.0 - 3.0 * phi_[0] * phi_[0]));
        break;
      case PdeKind::kWave:
        if constexpr (TO == 2) pbar[4] = rb;
        pbar[2] = -(pb_.c * pb_.c) * rb;
        break;
      case PdeKind::kDriftDiffusion:
        pbar[3] = rb;
        pbar[2] = -pb_.alpha * rb;
        pbar[1] = pb_.beta * rb;
        break;
    }
    // Through phi = a + w*N to the raw network output's jet components.
    CV& nb = hbar_[0];
    nb[0] = aw_.w.v * pbar[0] + aw_.w.dx * pbar[1] + aw_.w.dxx * pbar[2] +
            aw_.w.dt * pbar[3];
    nb[1] = aw_.w.v * pbar[1] + 2.0 * aw_.w.dx * pbar[2];
    nb[2] = aw_.w.v * pbar[2];
    nb[3] = aw_.w.v * pbar[3];
    if constexpr (TO == 2) {
      nb[0] = nb[0] + aw_.w.dtt * pbar[4];
      nb[3] = nb[3] + 2.0 * aw_.w.dt * pbar[4];
      nb[4] = aw_.w.v * pbar[4];
    }
    for (std::size_t l = dims_.size() - 2;; --l) {
      const int n_in = dims_[l], n_out = dims_[l + 1];
      // hbar_ holds the adjoint of level l+1's activations; the last level
      // has no activation, hidden levels go back through the tanh jet first.
      if (l + 2 < dims_.size()) {
        const CV* uo = &u_[level_off_[l + 1] - dims_[0]];
        const CV* ho = &h_[level_off_[l + 1]];
        for (int i = 0; i < n_out; ++i)
          ubar_[i] = tanh_adjoint(uo[i], ho[i][0], hbar_[i]);
      } else {
        for (int i = 0; i < n_out; ++i) ubar_[i] = hbar_[i];
      }
      const R* w = theta.data() + off_[l];
      R* gw = grad.data() + off_[l];
      R* gb = gw + static_cast<std::size_t>(n_in) * n_out;
      const CV* in = &h_[level_off_[l]];
      if (l > 0)
        for (int j = 0; j < n_in; ++j) hbar_[j] = CV{};
      for (int i = 0; i < n_out; ++i) {
        const CV ub = ubar_[i];
        const R* wi = w + static_cast<std::size_t>(i) * n_in;
        R* gwi = gw + static_cast<std::size_t>(i) * n_in;
        gb[i] = gb[i] + ub[0];
        for (int j = 0; j < n_in; ++j) {
          R s{};
          for (int c = 0; c < kComps; ++c) s = s + ub[c] * in[j][c];
          gwi[j] = gwi[j] + s;
          if (l > 0)
            for (int c = 0; c < kComps; ++c)
              hbar_[j][c] = hbar_[j][c] + wi[j] * ub[c];
        }
      }
      if (l == 0) break;
    }
  }

  // Same composition rules as ad::tanh on a jet.
  static CV tanh_jet(const CV& u) {
    const R y = ad::tanh(u[0]);
    const R s = 1.0 - y * y;
    const R s2 = -2.0 * y * s;
    CV h;
    h[0] = y;
    h[1] = s * u[1];
    h[2] = s * u[2] + s2 * u[1] * u[1];
    h[3] = s * u[3];
    if constexpr (TO == 2) h[4] = s * u[4] + s2 * u[3] * u[3];
    return h;
  }

  // Adjoint of tanh_jet: y is the stored activation value, so s' = -2ys and
  // s'' = -2(s^2 + y s') close the chain through u[0].
  static CV tanh_adjoint(const CV& u, const R& y, const CV& hb) {
    const R s = 1.0 - y * y;
    const R sp = -2.0 * y * s;
    const R spp = -2.0 * (s * s + y * sp);
    CV ub;
    ub[1] = hb[1] * s + hb[2] * (2.0 * sp * u[1]);
    ub[2] = hb[2] * s;
    ub[3] = hb[3] * s;
    ub[0] = hb[0] * s + hb[1] * (sp * u[1]) + hb[3] * (sp * u[3]) +
            hb[2] * (sp * u[2] + spp * u[1] * u[1]);
    if constexpr (TO == 2) {
      ub[3] = ub[3] + hb[4] * (2.0 * sp * u[3]);
      ub[4] = hb[4] * s;
      ub[0] = ub[0] + hb[4] * (sp * u[4] + spp * u[3] * u[3]);
    }
    return ub;
  }

  PdeProblem pb_;
  std::vector<int> dims_;
  std::vector<std::size_t> level_off_, off_;
  std::vector<CV> h_, u_, ubar_, hbar_;
  AnsatzParts<TO> aw_;
  CV phi_{};
  R r_{};
};

}  // namespace detail

// ---------------------------------------------------------------------------
// LossEngine: the training workhorse. Every path (values, gradients, probes,
// Hessian-vector products) runs through the same point kernel, so they agree
// bitwise on the loss value, and all reductions are fixed-order (chunked for
// sums, point order for gradient accumulation) for bit-reproducibility.

class LossEngine {
 public:
  LossEngine(const PdeProblem& problem, const MlpSpec& spec,
             std::span<const f64> theta)
      : pb_(problem), spec_(spec), theta_(theta.begin(), theta.end()) {
    if (theta_.size() != param_count(spec_))
      throw std::invalid_argument("theta size does not match network spec");
  }

  const PdeProblem& problem() const { return pb_; }
  const MlpSpec& spec() const { return spec_; }
  std::span<const f64> theta() const { return theta_; }
  std::size_t dim() const { return theta_.size(); }

  void set_theta(std::span<const f64> theta) {
    if (theta.size() != theta_.size())
      throw std::invalid_argument("theta size changed");
    std::copy(theta.begin(), theta.end(), theta_.begin());
  }

  // Mean of squared residuals, values only.
  f64 mean_loss(std::span<const Point2> pts) {
    require_nonempty(pts);
    const f64 s = dispatch<f64>([&](auto& k) {
      return chunked_sum(pts.size(), [&](std::size_t i) {
        const f64 r = k.residual(pts[i], std::span<const f64>(theta_));
        return r * r;
      });
    });
    return check_finite(s / static_cast<f64>(pts.size()));
  }

  f64 point_residual(Point2 p) {
    return dispatch<f64>(
        [&](auto& k) { return k.residual(p, std::span<const f64>(theta_)); });
  }

  // Mean loss and its gradient. Point contributions accumulate in point
  // order; the 1/N scale is applied once at the end.
  f64 mean_loss_grad(std::span<const Point2> pts, std::span<f64> grad) {
    require_nonempty(pts);
    std::fill(grad.begin(), grad.end(), 0.0);
    const f64 s = dispatch<f64>([&](auto& k) {
      return chunked_sum(pts.size(), [&](std::size_t i) {
        return k.loss_grad(pts[i], std::span<const f64>(theta_), grad);
      });
    });
    const f64 inv_n = 1.0 / static_cast<f64>(pts.size());
    for (auto& g : grad) g *= inv_n;
    return check_finite(s * inv_n);
  }

  // Loss and gradient at a single point (no mean scaling): L(x) = r(x)^2.
  f64 point_loss_grad(Point2 p, std::span<f64> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const f64 L = dispatch<f64>([&](auto& k) {
      return k.loss_grad(p, std::span<const f64>(theta_), grad);
    });
    return check_finite(L);
  }

  // Hessian-vector product of the mean loss, by forward-over-reverse: running
  // the kernel in the Dual ring with leaves (theta_i, v_i) makes the tangent
  // of the gradient equal to (Hv)_i.
  void mean_loss_hvp(std::span<const Point2> pts, std::span<const f64> v,
                     std::span<f64> out) {
    require_nonempty(pts);
    if (v.size() != theta_.size())
      throw std::invalid_argument("hvp direction size mismatch");
    dual_theta_.resize(theta_.size());
    for (std::size_t i = 0; i < theta_.size(); ++i)
      dual_theta_[i] = ad::Dual(theta_[i], v[i]);
    dual_grad_.assign(theta_.size(), ad::Dual(0.0));
    const ad::Dual L = dispatch<ad::Dual>([&](auto& k) {
      ad::Dual s(0.0);
      for (const Point2& p : pts)
        s += k.loss_grad(p, std::span<const ad::Dual>(dual_theta_),
                         std::span<ad::Dual>(dual_grad_));
      return s;
    });
    check_finite(L.v);
    const f64 inv_n = 1.0 / static_cast<f64>(pts.size());
    for (std::size_t i = 0; i < theta_.size(); ++i)
      out[i] = dual_grad_[i].t * inv_n;
  }

  // Loss and directional derivative at theta + alpha*dir (forward sweeps
  // only). The value at alpha = 0 matches mean_loss to rounding (the f64
  // kernel may contract mul+add to fma where the dual one cannot).
  std::pair<f64, f64> mean_loss_probe(std::span<const Point2> pts,
                                      std::span<const f64> dir, f64 alpha) {
    require_nonempty(pts);
    dual_theta_.resize(theta_.size());
    for (std::size_t i = 0; i < theta_.size(); ++i)
      dual_theta_[i] = ad::Dual(theta_[i] + alpha * dir[i], dir[i]);
    ad::Dual total(0.0);
    dispatch<ad::Dual>([&](auto& k) {
      for (std::size_t c0 = 0; c0 < pts.size(); c0 += kReduceChunk) {
        const std::size_t c1 = std::min(pts.size(), c0 + kReduceChunk);
        ad::Dual part(0.0);
        for (std::size_t i = c0; i < c1; ++i) {
          const ad::Dual r =
              k.residual(pts[i], std::span<const ad::Dual>(dual_theta_));
          part += r * r;
        }
        total += part;
      }
      return 0;
    });
    const f64 inv_n = 1.0 / static_cast<f64>(pts.size());
    return {check_finite(total.v * inv_n), total.t * inv_n};
  }

 private:
  template <class T>
  static void require_nonempty(std::span<const T> pts) {
    if (pts.empty()) throw std::invalid_argument("empty point set");
  }

  f64 check_finite(f64 v) const {
    if (!std::isfinite(v))
      throw DivergedError("non-finite loss on problem " + pb_.name);
    return v;
  }

  // Kernels are built on first use; the wave problem runs second-order jets,
  // everything else first-order.
  template <class R, class F>
  auto dispatch(F&& f)
      -> decltype(f(std::declval<detail::PointKernel<R, 1>&>())) {
    if (pb_.second_order_time) {
      auto& k = kernel<R, 2>();
      return f(k);
    }
    auto& k = kernel<R, 1>();
    return f(k);
  }

  template <class R, int TO>
  detail::PointKernel<R, TO>& kernel() {
    auto& slot = [&]() -> auto& {
      if constexpr (std::is_same_v<R, f64>) {
        if constexpr (TO == 2) return k2_;
        else return k1_;
      } else {
        if constexpr (TO == 2) return dk2_;
        else return dk1_;
      }
    }();
    if (!slot) slot = std::make_unique<detail::PointKernel<R, TO>>(pb_, spec_);
    return *slot;
  }

  PdeProblem pb_;
  MlpSpec spec_;
  std::vector<f64> theta_;
  std::unique_ptr<detail::PointKernel<f64, 1>> k1_;
  std::unique_ptr<detail::PointKernel<f64, 2>> k2_;
  std::unique_ptr<detail::PointKernel<ad::Dual, 1>> dk1_;
  std::unique_ptr<detail::PointKernel<ad::Dual, 2>> dk2_;
  std::vector<ad::Dual> dual_theta_;
  std::vector<ad::Dual> dual_grad_;
};

// Spec-shaped wrappers.
inline f64 pde_loss(const PdeProblem& pb, const MlpSpec& spec,
                    std::span<const f64> theta, std::span<const Point2> pts) {
  LossEngine le(pb, spec, theta);
  return le.mean_loss(pts);
}

// ---------------------------------------------------------------------------
// Ground-truth grids. Text format: "nx nt", the x grid line, the t grid line,
// then nx rows of nt values u(x_i, t_j).

struct GroundTruthGrid {
  std::vector<f64> xs, ts;
  std::vector<f64> vals;  // row-major [ix][it]

  f64 at(std::size_t ix, std::size_t it) const { return vals[ix * ts.size() + it]; }

  f64 interp(Point2 p) const {
    const auto cell = [](const std::vector<f64>& g, f64 v) {
      auto it = std::upper_bound(g.begin(), g.end(), v);
      std::size_t hi = static_cast<std::size_t>(it - g.begin());
      if (hi == 0) hi = 1;
      if (hi >= g.size()) hi = g.size() - 1;
      return hi - 1;
    };
    const std::size_t ix = cell(xs, p.x), it = cell(ts, p.t);
    const f64 ux = (p.x - xs[ix]) / (xs[ix + 1] - xs[ix]);
    const f64 ut = (p.t - ts[it]) / (ts[it + 1] - ts[it]);
    const f64 a = at(ix, it) * (1.0 - ut) + at(ix, it + 1) * ut;
    const f64 b = at(ix + 1, it) * (1.0 - ut) + at(ix + 1, it + 1) * ut;
    return a * (1.0 - ux) + b * ux;
  }
};

inline GroundTruthGrid load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("ground-truth file not found: " + path);
  GroundTruthGrid g;
  std::size_t nx = 0, nt = 0;
  if (!(in >> nx >> nt) || nx < 2 || nt < 2)
    throw IoError("bad ground-truth header in " + path);
  auto read_vec = [&](std::vector<f64>& v, std::size_t n, const char* what) {
    v.resize(n);
    for (auto& x : v)
      if (!(in >> x) || !std::isfinite(x))
        throw IoError(std::string("bad ") + what + " entry in " + path);
  };
  read_vec(g.xs, nx, "x-grid");
  read_vec(g.ts, nt, "t-grid");
  read_vec(g.vals, nx * nt, "value");
  for (std::size_t i = 1; i < g.xs.size(); ++i)
    if (!(g.xs[i] > g.xs[i - 1]))
      throw IoError("x grid not strictly increasing in " + path);
  for (std::size_t i = 1; i < g.ts.size(); ++i)
    if (!(g.ts[i] > g.ts[i - 1]))
      throw IoError("t grid not strictly increasing in " + path);
  return g;
}

inline void save_ground_truth(const std::string& path, const GroundTruthGrid& g) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write ground-truth file: " + path);
  std::fprintf(f, "%zu %zu\n", g.xs.size(), g.ts.size());
  for (std::size_t i = 0; i < g.xs.size(); ++i)
    std::fprintf(f, "%.17g%c", g.xs[i], i + 1 == g.xs.size() ? '\n' : ' ');
  for (std::size_t i = 0; i < g.ts.size(); ++i)
    std::fprintf(f, "%.17g%c", g.ts[i], i + 1 == g.ts.size() ? '\n' : ' ');
  for (std::size_t ix = 0; ix < g.xs.size(); ++ix)
    for (std::size_t it = 0; it < g.ts.size(); ++it)
      std::fprintf(f, "%.17g%c", g.at(ix, it), it + 1 == g.ts.size() ? '\n' : ' ');
  if (std::fclose(f) != 0) throw IoError("short write: " + path);
}

}  // namespace pinn

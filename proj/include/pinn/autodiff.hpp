// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Generic differentiation drivers over the tape and jets: reverse-mode
// gradients, forward-over-reverse Hessian-vector products, and second-order
// input jets. Callables are generic in the scalar ring so one definition
// serves every mode.

#pragma once

#include <array>

#include "pinn/jet.hpp"

namespace pinn::ad {

namespace detail {

// Locate the first non-finite node by re-recording with the value log on.
template <class R, class F>
[[noreturn]] void report_non_finite(Tape<R>& tape, std::span<const f64> theta,
                                    std::span<const f64> tangent, F&& f) {
  std::vector<R> log;
  tape.set_value_log(&log);
  tape.reset(static_cast<std::uint32_t>(theta.size()));
  std::vector<Var<R>> leaves(theta.size());
  for (std::uint32_t i = 0; i < theta.size(); ++i) {
    if constexpr (std::is_same_v<R, Dual>) {
      leaves[i] = leaf(tape, i, Dual(theta[i], tangent.empty() ? 0.0 : tangent[i]));
    } else {
      leaves[i] = leaf(tape, i, theta[i]);
    }
  }
  (void)f(std::span<const Var<R>>(leaves.data(), leaves.size()));
  std::size_t idx = log.size();
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (!finite(log[i])) {
      idx = i;
      break;
    }
  }
  tape.set_value_log(nullptr);
  throw NonFiniteError(idx, "non-finite value at tape node " +
                               std::to_string(idx));
}

}  // namespace detail

// Reverse-mode gradient of f. f takes the leaves as a span of Vars and must
// be built from the supported elementary operations; it runs forward once.
template <class F>
f64 grad(F&& f, std::span<const f64> theta, std::span<f64> out) {
  if (out.size() != theta.size())
    throw std::invalid_argument("grad: output size mismatch");
  Tape<f64> tape;
  tape.reset(static_cast<std::uint32_t>(theta.size()));
  std::vector<Var<f64>> leaves(theta.size());
  for (std::uint32_t i = 0; i < theta.size(); ++i)
    leaves[i] = leaf(tape, i, theta[i]);
  const Var<f64> y = f(std::span<const Var<f64>>(leaves.data(), leaves.size()));
  if (!std::isfinite(y.val))
    detail::report_non_finite(tape, theta, {}, std::forward<F>(f));
  std::vector<f64> adj;
  tape.backward(y.slot, adj);
  std::copy_n(adj.begin(), theta.size(), out.begin());
  return y.val;
}

// H·v by one forward-over-reverse pass: leaves carry (theta_i, v_i), the
// tangent of each leaf adjoint after the reverse sweep is (Hv)_i.
template <class F>
std::vector<f64> hvp(F&& f, std::span<const f64> theta, std::span<const f64> v) {
  if (v.size() != theta.size())
    throw std::invalid_argument("hvp: direction size mismatch");
  Tape<Dual> tape;
  tape.reset(static_cast<std::uint32_t>(theta.size()));
  std::vector<Var<Dual>> leaves(theta.size());
  for (std::uint32_t i = 0; i < theta.size(); ++i)
    leaves[i] = leaf(tape, i, Dual(theta[i], v[i]));
  const Var<Dual> y = f(std::span<const Var<Dual>>(leaves.data(), leaves.size()));
  if (!finite(y.val))
    detail::report_non_finite(tape, theta, v, std::forward<F>(f));
  std::vector<Dual> adj;
  tape.backward(y.slot, adj);
  std::vector<f64> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = adj[i].t;
  return out;
}

// Value and first/second derivative of g along one input coordinate; exact
// jet propagation, no finite differencing.
template <class G>
std::array<f64, 3> input_jet(G&& g, std::span<const f64> x,
                             std::size_t direction) {
  if (direction >= x.size())
    throw std::invalid_argument("input_jet: direction out of range");
  std::vector<Jet<f64, 2>> seeds(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    seeds[i] = (i == direction) ? seed_x<f64, 2>(x[i])
                                : scalar_from<Jet<f64, 2>>(x[i]);
  }
  const Jet<f64, 2> y =
      g(std::span<const Jet<f64, 2>>(seeds.data(), seeds.size()));
  return {y.v, y.dx, y.dxx};
}

}  // namespace pinn::ad

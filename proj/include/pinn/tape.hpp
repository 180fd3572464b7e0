// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scalar-graph reverse mode. A Tape<R> is a Wengert list whose nodes store the
// local partials computed at record time, so the reverse sweep is a plain
// fused-multiply-add loop with no expression dispatch. R is the value ring:
// f64 for gradients, Dual for forward-over-reverse Hessian-vector products.
//
// Leaves occupy slots [0, n_leaves) and are not materialized as nodes; a
// recorded node with index j owns slot n_leaves + j. Besides unary and binary
// elementary ops the tape records two fused forms used by the dense layers,
//   fma:  acc + w*x
//   dot2: acc + w1*x1 + w2*x2
// which are record-compactions of {*,+} chains, not new differentiable ops.

#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "pinn/common.hpp"

namespace pinn::ad {

// Forward-mode scalar carrying one tangent component.
struct Dual {
  f64 v = 0.0;
  f64 t = 0.0;

  Dual() = default;
  Dual(f64 value) : v(value) {}  // NOLINT: implicit by design
  Dual(f64 value, f64 tangent) : v(value), t(tangent) {}

  Dual& operator+=(const Dual& o) {
    v += o.v;
    t += o.t;
    return *this;
  }
};

inline Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.t + b.t}; }
inline Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.t - b.t}; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.t}; }
inline Dual operator*(const Dual& a, const Dual& b) {
  return {a.v * b.v, a.v * b.t + a.t * b.v};
}
inline Dual operator/(const Dual& a, const Dual& b) {
  const f64 q = a.v / b.v;
  return {q, (a.t - q * b.t) / b.v};
}
inline Dual tanh(const Dual& a) {
  const f64 y = std::tanh(a.v);
  return {y, (1.0 - y * y) * a.t};
}
inline Dual sin(const Dual& a) { return {std::sin(a.v), std::cos(a.v) * a.t}; }
inline Dual cos(const Dual& a) { return {std::cos(a.v), -std::sin(a.v) * a.t}; }
inline Dual exp(const Dual& a) {
  const f64 y = std::exp(a.v);
  return {y, y * a.t};
}

// Plain-f64 spellings so generic code can call ad::tanh etc. in any ring.
inline f64 tanh(f64 x) { return std::tanh(x); }
inline f64 sin(f64 x) { return std::sin(x); }
inline f64 cos(f64 x) { return std::cos(x); }
inline f64 exp(f64 x) { return std::exp(x); }

inline bool is_zero(f64 s) { return s == 0.0; }
inline bool is_zero(const Dual& s) { return s.v == 0.0 && s.t == 0.0; }
inline bool is_one(f64 s) { return s == 1.0; }
inline bool is_one(const Dual& s) { return s.v == 1.0 && s.t == 0.0; }
inline bool finite(f64 s) { return std::isfinite(s); }
inline bool finite(const Dual& s) { return std::isfinite(s.v) && std::isfinite(s.t); }
inline f64 value_of(f64 s) { return s; }
inline f64 value_of(const Dual& s) { return s.v; }

enum class Op : std::uint8_t { kDot2, kFma, kBinary, kUnary };

// Plain storage, deliberately left uninitialized: the push paths fill exactly
// the fields the op kind uses.
template <class R>
struct Node {
  R p0, p1, p2, p3;
  std::uint32_t a, b, c, d, e;
  Op op;
};

template <class R>
class Tape {
 public:
  static constexpr std::uint32_t kConstSlot = 0xffffffffu;

  void reset(std::uint32_t n_leaves) {
    n_leaves_ = n_leaves;
    nodes_.clear();
    if (vals_) vals_->clear();
  }

  std::uint32_t n_leaves() const { return n_leaves_; }
  std::size_t n_nodes() const { return nodes_.size(); }
  std::size_t total_slots() const { return n_leaves_ + nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  // Rewind to an earlier recording mark. Used between per-point recordings
  // that share one tape, so no cross-evaluation state survives.
  void truncate(std::size_t n) {
    nodes_.resize(n);
    if (vals_) vals_->resize(n);
  }

  // When set, every node's value is logged; used only on the diagnostic
  // re-evaluation after a non-finite result.
  void set_value_log(std::vector<R>* log) { vals_ = log; }

  std::uint32_t push_unary(std::uint32_t a, R pa, R val) {
    Node<R>& n = nodes_.emplace_back();
    n.op = Op::kUnary;
    n.a = a;
    n.p0 = pa;
    return log_and_slot(val);
  }

  std::uint32_t push_binary(std::uint32_t a, std::uint32_t b, R pa, R pb, R val) {
    Node<R>& n = nodes_.emplace_back();
    n.op = Op::kBinary;
    n.a = a;
    n.b = b;
    n.p0 = pa;
    n.p1 = pb;
    return log_and_slot(val);
  }

  // val = x[a] + x[b]*x[c]; partials p0 = value of c-operand, p1 = of b-operand.
  std::uint32_t push_fma(std::uint32_t acc, std::uint32_t b, std::uint32_t c, R pb,
                         R pc, R val) {
    Node<R>& n = nodes_.emplace_back();
    n.op = Op::kFma;
    n.a = acc;
    n.b = b;
    n.c = c;
    n.p0 = pb;
    n.p1 = pc;
    return log_and_slot(val);
  }

  // val = x[a] + x[b]*x[c] + x[d]*x[e].
  std::uint32_t push_dot2(std::uint32_t acc, std::uint32_t b, std::uint32_t c,
                          std::uint32_t d, std::uint32_t e, R pb, R pc, R pd, R pe,
                          R val) {
    Node<R>& n = nodes_.emplace_back();
    n.op = Op::kDot2;
    n.a = acc;
    n.b = b;
    n.c = c;
    n.d = d;
    n.e = e;
    n.p0 = pb;
    n.p1 = pc;
    n.p2 = pd;
    n.p3 = pe;
    return log_and_slot(val);
  }

  const std::vector<Node<R>>& nodes() const { return nodes_; }

  // Reverse sweep from out_slot. adj is sized to total_slots(); the caller may
  // keep leaf adjoints across calls (zero_leaves = false) to accumulate
  // per-point gradients without re-touching the leaf block here.
  void backward(std::uint32_t out_slot, std::vector<R>& adj,
                bool zero_leaves = true) const {
    adj.resize(total_slots());
    if (zero_leaves) std::fill_n(adj.begin(), n_leaves_, R{});
    std::fill(adj.begin() + n_leaves_, adj.end(), R{});
    if (out_slot == kConstSlot) return;
    adj[out_slot] = R(1.0);
    for (std::size_t j = nodes_.size(); j-- > 0;) {
      const R s = adj[n_leaves_ + j];
      if (is_zero(s)) continue;
      const Node<R>& n = nodes_[j];
      switch (n.op) {
        case Op::kDot2:
          adj[n.a] += s;
          adj[n.b] += n.p0 * s;
          adj[n.c] += n.p1 * s;
          adj[n.d] += n.p2 * s;
          adj[n.e] += n.p3 * s;
          break;
        case Op::kFma:
          adj[n.a] += s;
          adj[n.b] += n.p0 * s;
          adj[n.c] += n.p1 * s;
          break;
        case Op::kBinary:
          adj[n.a] += n.p0 * s;
          adj[n.b] += n.p1 * s;
          break;
        case Op::kUnary:
          adj[n.a] += n.p0 * s;
          break;
      }
    }
  }

 private:
  std::uint32_t push_log(R val);  // cold path, defined out of line below

  std::uint32_t log_and_slot(R val) {
    if (vals_) [[unlikely]]
      return push_log(val);
    return n_leaves_ + static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  std::vector<Node<R>> nodes_;
  std::vector<R>* vals_ = nullptr;
  std::uint32_t n_leaves_ = 0;
};

template <class R>
std::uint32_t Tape<R>::push_log(R val) {
  vals_->push_back(val);
  return n_leaves_ + static_cast<std::uint32_t>(nodes_.size() - 1);
}

// Tracked value. A Var with the const slot is a literal: operations on two
// literals fold without touching the tape, and adding a literal to a tracked
// Var reuses the tracked slot since the derivative is unchanged.
template <class R>
struct Var {
  R val{};
  std::uint32_t slot = Tape<R>::kConstSlot;
  Tape<R>* tape = nullptr;

  bool is_const() const { return slot == Tape<R>::kConstSlot; }
};

template <class R>
inline Var<R> make_const(R v) {
  return {v, Tape<R>::kConstSlot, nullptr};
}

template <class R>
inline Var<R> leaf(Tape<R>& tape, std::uint32_t slot, R val) {
  assert(slot < tape.n_leaves());
  return {val, slot, &tape};
}

template <class R>
inline Var<R> operator+(const Var<R>& a, const Var<R>& b) {
  if (a.is_const()) return {a.val + b.val, b.slot, b.tape};
  if (b.is_const()) return {a.val + b.val, a.slot, a.tape};
  const R v = a.val + b.val;
  return {v, a.tape->push_binary(a.slot, b.slot, R(1.0), R(1.0), v), a.tape};
}

template <class R>
inline Var<R> operator-(const Var<R>& a, const Var<R>& b) {
  if (b.is_const()) return {a.val - b.val, a.slot, a.tape};
  const R v = a.val - b.val;
  if (a.is_const()) return {v, b.tape->push_unary(b.slot, R(-1.0), v), b.tape};
  return {v, a.tape->push_binary(a.slot, b.slot, R(1.0), R(-1.0), v), a.tape};
}

template <class R>
inline Var<R> operator-(const Var<R>& a) {
  if (a.is_const()) return make_const(-a.val);
  const R v = -a.val;
  return {v, a.tape->push_unary(a.slot, R(-1.0), v), a.tape};
}

template <class R>
inline Var<R> operator*(const Var<R>& a, const Var<R>& b) {
  const R v = a.val * b.val;
  if (a.is_const()) {
    if (b.is_const()) return make_const(v);
    // Multiplying by an exact literal 1 or 0 needs no node: the result is the
    // operand itself, or a value with zero derivative.
    if (is_one(a.val)) return b;
    if (is_zero(a.val)) return make_const(v);
    return {v, b.tape->push_unary(b.slot, a.val, v), b.tape};
  }
  if (b.is_const()) {
    if (is_one(b.val)) return a;
    if (is_zero(b.val)) return make_const(v);
    return {v, a.tape->push_unary(a.slot, b.val, v), a.tape};
  }
  return {v, a.tape->push_binary(a.slot, b.slot, b.val, a.val, v), a.tape};
}

template <class R>
inline Var<R> operator/(const Var<R>& a, const Var<R>& b) {
  const R v = a.val / b.val;
  if (b.is_const()) {
    if (a.is_const()) return make_const(v);
    return {v, a.tape->push_unary(a.slot, R(1.0) / b.val, v), a.tape};
  }
  if (a.is_const()) return {v, b.tape->push_unary(b.slot, -v / b.val, v), b.tape};
  return {v, a.tape->push_binary(a.slot, b.slot, R(1.0) / b.val, -v / b.val, v),
          a.tape};
}

// Literal-on-one-side conveniences.
template <class R>
inline Var<R> operator+(const Var<R>& a, f64 c) {
  return {a.val + R(c), a.slot, a.tape};
}
template <class R>
inline Var<R> operator+(f64 c, const Var<R>& a) {
  return a + c;
}
template <class R>
inline Var<R> operator-(const Var<R>& a, f64 c) {
  return {a.val - R(c), a.slot, a.tape};
}
template <class R>
inline Var<R> operator-(f64 c, const Var<R>& a) {
  const R v = R(c) - a.val;
  if (a.is_const()) return make_const(v);
  return {v, a.tape->push_unary(a.slot, R(-1.0), v), a.tape};
}
template <class R>
inline Var<R> operator*(const Var<R>& a, f64 c) {
  const R v = a.val * R(c);
  if (a.is_const() || c == 0.0) return make_const(v);
  if (c == 1.0) return a;
  return {v, a.tape->push_unary(a.slot, R(c), v), a.tape};
}
template <class R>
inline Var<R> operator*(f64 c, const Var<R>& a) {
  return a * c;
}
template <class R>
inline Var<R> operator/(const Var<R>& a, f64 c) {
  return a * (1.0 / c);
}
template <class R>
inline Var<R> operator/(f64 c, const Var<R>& a) {
  return make_const<R>(R(c)) / a;
}

template <class R>
inline Var<R> tanh(const Var<R>& a) {
  using std::tanh;
  const R y = tanh(a.val);
  if (a.is_const()) return make_const(y);
  return {y, a.tape->push_unary(a.slot, R(1.0) - y * y, y), a.tape};
}

template <class R>
inline Var<R> sin(const Var<R>& a) {
  using std::cos;
  using std::sin;
  const R y = sin(a.val);
  if (a.is_const()) return make_const(y);
  return {y, a.tape->push_unary(a.slot, cos(a.val), y), a.tape};
}

template <class R>
inline Var<R> cos(const Var<R>& a) {
  using std::cos;
  using std::sin;
  const R y = cos(a.val);
  if (a.is_const()) return make_const(y);
  return {y, a.tape->push_unary(a.slot, -sin(a.val), y), a.tape};
}

template <class R>
inline Var<R> exp(const Var<R>& a) {
  using std::exp;
  const R y = exp(a.val);
  if (a.is_const()) return make_const(y);
  return {y, a.tape->push_unary(a.slot, y, y), a.tape};
}

// acc + w*x as one node when all operands are tracked.
template <class R>
inline Var<R> fma_acc(const Var<R>& acc, const Var<R>& w, const Var<R>& x) {
  if (acc.is_const() || w.is_const() || x.is_const()) return acc + w * x;
  const R v = acc.val + w.val * x.val;
  return {v, acc.tape->push_fma(acc.slot, w.slot, x.slot, x.val, w.val, v),
          acc.tape};
}

// acc + w1*x1 + w2*x2 as one node when all operands are tracked.
template <class R>
inline Var<R> dot2_acc(const Var<R>& acc, const Var<R>& w1, const Var<R>& x1,
                       const Var<R>& w2, const Var<R>& x2) {
  if (acc.is_const() || w1.is_const() || x1.is_const() || w2.is_const() ||
      x2.is_const())
    return fma_acc(fma_acc(acc, w1, x1), w2, x2);
  const R v = acc.val + w1.val * x1.val + w2.val * x2.val;
  return {v,
          acc.tape->push_dot2(acc.slot, w1.slot, x1.slot, w2.slot, x2.slot, x1.val,
                              w1.val, x2.val, w2.val, v),
          acc.tape};
}

// Accumulation helpers with one generic spelling: plain arithmetic for value
// rings, fused records for tracked Vars.
template <class S>
inline S mul_add(const S& acc, const S& w, const S& x) {
  return acc + w * x;
}
template <class R>
inline Var<R> mul_add(const Var<R>& acc, const Var<R>& w, const Var<R>& x) {
  return fma_acc(acc, w, x);
}
template <class S>
inline S mul_add2(const S& acc, const S& w1, const S& x1, const S& w2,
                  const S& x2) {
  return acc + w1 * x1 + w2 * x2;
}
template <class R>
inline Var<R> mul_add2(const Var<R>& acc, const Var<R>& w1, const Var<R>& x1,
                       const Var<R>& w2, const Var<R>& x2) {
  return dot2_acc(acc, w1, x1, w2, x2);
}

inline f64 value_of(const Var<f64>& s) { return s.val; }
inline f64 value_of(const Var<Dual>& s) { return s.val.v; }

// Uniform lift of a double literal into any scalar ring used by the templated
// surrogate and residual code.
template <class S>
struct ScalarLift {
  static S from(f64 v) { return S(v); }
};
template <class R>
struct ScalarLift<Var<R>> {
  static Var<R> from(f64 v) { return make_const<R>(R(v)); }
};

template <class S>
inline S scalar_from(f64 v) {
  return ScalarLift<S>::from(v);
}

// Integer power by repeated multiplication, so the derivative follows from the
// product rule in every scalar ring.
template <class S>
inline S powi(const S& x, int n) {
  if (n == 0) return scalar_from<S>(1.0);
  const unsigned m = static_cast<unsigned>(n < 0 ? -n : n);
  S base = x;
  S acc = scalar_from<S>(1.0);
  bool have = false;
  for (unsigned k = m;;) {
    if (k & 1u) {
      acc = have ? acc * base : base;
      have = true;
    }
    k >>= 1u;
    if (k == 0) break;
    base = base * base;
  }
  if (n < 0) return scalar_from<S>(1.0) / acc;
  return acc;
}

}  // namespace pinn::ad

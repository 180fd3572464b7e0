// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Forward-mode jets over the two PDE coordinates. A Jet carries the value, the
// first two x-derivatives and the first TOrder t-derivatives of a quantity; no
// PDE in the catalog needs a mixed x-t derivative, so none is tracked. The
// scalar ring S can be f64 (plain evaluation), Dual (directional probes) or
// Var<R> (taped, for gradients of residual-derived losses).

#pragma once

#include "pinn/tape.hpp"

namespace pinn::ad {

template <class S, int TOrder>
struct Jet;

template <class S>
struct Jet<S, 1> {
  S v{}, dx{}, dxx{}, dt{};
};

template <class S>
struct Jet<S, 2> {
  S v{}, dx{}, dxx{}, dt{}, dtt{};
};

template <class S, int TO>
struct ScalarLift<Jet<S, TO>> {
  static Jet<S, TO> from(f64 c) {
    Jet<S, TO> r;
    r.v = scalar_from<S>(c);
    r.dx = scalar_from<S>(0.0);
    r.dxx = scalar_from<S>(0.0);
    r.dt = scalar_from<S>(0.0);
    if constexpr (TO == 2) r.dtt = scalar_from<S>(0.0);
    return r;
  }
};

template <class S, int TO>
Jet<S, TO> seed_x(f64 x) {
  auto r = scalar_from<Jet<S, TO>>(x);
  r.dx = scalar_from<S>(1.0);
  return r;
}

template <class S, int TO>
Jet<S, TO> seed_t(f64 t) {
  auto r = scalar_from<Jet<S, TO>>(t);
  r.dt = scalar_from<S>(1.0);
  return r;
}

// Lift a jet of doubles (a quantity with no dependence on the tracked ring,
// e.g. the hard-constraint window around the raw network) into ring S.
template <class S, int TO>
Jet<S, TO> lift(const Jet<f64, TO>& a) {
  Jet<S, TO> r;
  r.v = scalar_from<S>(a.v);
  r.dx = scalar_from<S>(a.dx);
  r.dxx = scalar_from<S>(a.dxx);
  r.dt = scalar_from<S>(a.dt);
  if constexpr (TO == 2) r.dtt = scalar_from<S>(a.dtt);
  return r;
}

template <class S, int TO>
Jet<S, TO> operator+(const Jet<S, TO>& a, const Jet<S, TO>& b) {
  Jet<S, TO> r;
  r.v = a.v + b.v;
  r.dx = a.dx + b.dx;
  r.dxx = a.dxx + b.dxx;
  r.dt = a.dt + b.dt;
  if constexpr (TO == 2) r.dtt = a.dtt + b.dtt;
  return r;
}

template <class S, int TO>
Jet<S, TO> operator-(const Jet<S, TO>& a, const Jet<S, TO>& b) {
  Jet<S, TO> r;
  r.v = a.v - b.v;
  r.dx = a.dx - b.dx;
  r.dxx = a.dxx - b.dxx;
  r.dt = a.dt - b.dt;
  if constexpr (TO == 2) r.dtt = a.dtt - b.dtt;
  return r;
}

template <class S, int TO>
Jet<S, TO> operator-(const Jet<S, TO>& a) {
  Jet<S, TO> r;
  r.v = -a.v;
  r.dx = -a.dx;
  r.dxx = -a.dxx;
  r.dt = -a.dt;
  if constexpr (TO == 2) r.dtt = -a.dtt;
  return r;
}

template <class S, int TO>
Jet<S, TO> operator*(const Jet<S, TO>& a, const Jet<S, TO>& b) {
  Jet<S, TO> r;
  r.v = a.v * b.v;
  r.dx = a.dx * b.v + a.v * b.dx;
  r.dxx = a.dxx * b.v + 2.0 * (a.dx * b.dx) + a.v * b.dxx;
  r.dt = a.dt * b.v + a.v * b.dt;
  if constexpr (TO == 2) r.dtt = a.dtt * b.v + 2.0 * (a.dt * b.dt) + a.v * b.dtt;
  return r;
}

template <class S, int TO>
Jet<S, TO> operator/(const Jet<S, TO>& a, const Jet<S, TO>& b) {
  Jet<S, TO> r;
  r.v = a.v / b.v;
  r.dx = (a.dx - r.v * b.dx) / b.v;
  r.dxx = (a.dxx - 2.0 * (r.dx * b.dx) - r.v * b.dxx) / b.v;
  r.dt = (a.dt - r.v * b.dt) / b.v;
  if constexpr (TO == 2)
    r.dtt = (a.dtt - 2.0 * (r.dt * b.dt) - r.v * b.dtt) / b.v;
  return r;
}

template <class S, int TO>
Jet<S, TO> operator*(const Jet<S, TO>& a, f64 c) {
  Jet<S, TO> r;
  r.v = a.v * c;
  r.dx = a.dx * c;
  r.dxx = a.dxx * c;
  r.dt = a.dt * c;
  if constexpr (TO == 2) r.dtt = a.dtt * c;
  return r;
}
template <class S, int TO>
Jet<S, TO> operator*(f64 c, const Jet<S, TO>& a) {
  return a * c;
}
template <class S, int TO>
Jet<S, TO> operator/(const Jet<S, TO>& a, f64 c) {
  return a * (1.0 / c);
}
template <class S, int TO>
Jet<S, TO> operator+(const Jet<S, TO>& a, f64 c) {
  Jet<S, TO> r = a;
  r.v = a.v + c;
  return r;
}
template <class S, int TO>
Jet<S, TO> operator+(f64 c, const Jet<S, TO>& a) {
  return a + c;
}
template <class S, int TO>
Jet<S, TO> operator-(const Jet<S, TO>& a, f64 c) {
  Jet<S, TO> r = a;
  r.v = a.v - c;
  return r;
}
template <class S, int TO>
Jet<S, TO> operator-(f64 c, const Jet<S, TO>& a) {
  return -a + c;
}

template <class S, int TO>
Jet<S, TO> tanh(const Jet<S, TO>& u) {
  using std::tanh;
  const S y = tanh(u.v);
  const S s = 1.0 - y * y;       // tanh'
  const S s2 = -2.0 * (y * s);   // tanh''
  Jet<S, TO> r;
  r.v = y;
  r.dx = s * u.dx;
  r.dxx = s * u.dxx + s2 * (u.dx * u.dx);
  r.dt = s * u.dt;
  if constexpr (TO == 2) r.dtt = s * u.dtt + s2 * (u.dt * u.dt);
  return r;
}

template <class S, int TO>
Jet<S, TO> sin(const Jet<S, TO>& u) {
  using std::cos;
  using std::sin;
  const S sy = sin(u.v);
  const S cy = cos(u.v);
  Jet<S, TO> r;
  r.v = sy;
  r.dx = cy * u.dx;
  r.dxx = cy * u.dxx - sy * (u.dx * u.dx);
  r.dt = cy * u.dt;
  if constexpr (TO == 2) r.dtt = cy * u.dtt - sy * (u.dt * u.dt);
  return r;
}

template <class S, int TO>
Jet<S, TO> cos(const Jet<S, TO>& u) {
  using std::cos;
  using std::sin;
  const S sy = sin(u.v);
  const S cy = cos(u.v);
  Jet<S, TO> r;
  r.v = cy;
  r.dx = -(sy * u.dx);
  r.dxx = -(sy * u.dxx) - cy * (u.dx * u.dx);
  r.dt = -(sy * u.dt);
  if constexpr (TO == 2) r.dtt = -(sy * u.dtt) - cy * (u.dt * u.dt);
  return r;
}

template <class S, int TO>
Jet<S, TO> exp(const Jet<S, TO>& u) {
  using std::exp;
  const S y = exp(u.v);
  Jet<S, TO> r;
  r.v = y;
  r.dx = y * u.dx;
  r.dxx = y * (u.dxx + u.dx * u.dx);
  r.dt = y * u.dt;
  if constexpr (TO == 2) r.dtt = y * (u.dtt + u.dt * u.dt);
  return r;
}

}  // namespace pinn::ad

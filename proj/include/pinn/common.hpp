// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinn {

// All floating point work is double precision end to end.
using f64 = double;

constexpr f64 kPi = 3.14159265358979323846264338327950288;

struct Point2 {
  f64 x = 0.0;
  f64 t = 0.0;
};

// Axis-aligned space-time domain (x0,x1) x (t0,t1).
struct Box2 {
  f64 x0 = 0.0, x1 = 1.0;
  f64 t0 = 0.0, t1 = 1.0;

  f64 x_len() const { return x1 - x0; }
  f64 t_len() const { return t1 - t0; }

  bool strictly_inside(Point2 p) const {
    return p.x > x0 && p.x < x1 && p.t > t0 && p.t < t1;
  }

  // Pull a point that landed on (or numerically past) the boundary back into
  // the open box. eps is relative to the axis length.
  Point2 clamp_interior(Point2 p, f64 eps = 1e-9) const {
    const f64 dx = eps * x_len(), dt = eps * t_len();
    if (p.x < x0 + dx) p.x = x0 + dx;
    if (p.x > x1 - dx) p.x = x1 - dx;
    if (p.t < t0 + dt) p.t = t0 + dt;
    if (p.t > t1 - dt) p.t = t1 - dt;
    return p;
  }
};

// ---------------------------------------------------------------------------
// Seeding. Every random stream in a run is derived from one user seed through
// splitmix64 so that streams are independent and reproducible across platforms.

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d4a292fbf87ccull;
  return z ^ (z >> 31);
}

// Stream id layout: (base seed, stream tag, cycle index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                                 std::uint64_t cycle = 0) {
  return splitmix64(splitmix64(base ^ (tag * 0x9e3779b97f4a7c15ull)) ^
                    (cycle * 0xd1b54a32d192ed03ull));
}

// Stream tags, kept in one place so no two call sites collide.
namespace stream {
constexpr std::uint64_t kModelInit = 1;
constexpr std::uint64_t kCandidates = 2;
constexpr std::uint64_t kSelection = 3;
constexpr std::uint64_t kRandomScore = 4;
constexpr std::uint64_t kArnoldiStart = 5;
constexpr std::uint64_t kInfluenceTest = 6;
constexpr std::uint64_t kInitialSet = 7;
constexpr std::uint64_t kEvalPoints = 8;
constexpr std::uint64_t kTestLossPoints = 9;
}  // namespace stream

// mt19937_64 plus an explicit mantissa conversion: std::uniform_real_distribution
// is implementation-defined, this is not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  f64 uniform01() { return static_cast<f64>(gen_() >> 11) * 0x1.0p-53; }

  f64 uniform(f64 lo, f64 hi) { return lo + uniform01() * (hi - lo); }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Errors.

struct NonFiniteError : std::runtime_error {
  explicit NonFiniteError(std::size_t node, const std::string& what)
      : std::runtime_error(what), node_index(node) {}
  std::size_t node_index;
};

struct DivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Fixed-order chunked reduction. Accumulation is sequential within a chunk and
// chunk partials are combined in index order, so the result does not depend on
// how (or whether) chunks are dispatched to threads.

constexpr std::size_t kReduceChunk = 64;

template <class F>
f64 chunked_sum(std::size_t n, F&& term) {
  f64 total = 0.0;
  for (std::size_t c0 = 0; c0 < n; c0 += kReduceChunk) {
    const std::size_t c1 = std::min(n, c0 + kReduceChunk);
    f64 part = 0.0;
    for (std::size_t i = c0; i < c1; ++i) part += term(i);
    total += part;
  }
  return total;
}

}  // namespace pinn

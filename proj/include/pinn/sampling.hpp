// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Point generation over the space-time box and score-driven resampling.
// Candidates are drawn uniformly; evaluation grids may use the base-2
// Hammersley set; new training points are picked from a candidate pool by
// weighted sampling without replacement over a score-derived pmf.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinn/common.hpp"

namespace pinn {

// All scores zero with alpha > 0, c = 0: the pmf is undefined. Callers fall
// back to uniform sampling over the candidates.
struct DegeneratePmfError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// n i.i.d. uniform points, x then t per point, clamped to the open box.
inline std::vector<Point2> uniform_sample(const Box2& domain, std::size_t n,
                                          std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("uniform_sample: n must be >= 1");
  Rng rng(seed);
  std::vector<Point2> pts(n);
  for (auto& p : pts) {
    p = domain.clamp_interior({rng.uniform(domain.x0, domain.x1),
                               rng.uniform(domain.t0, domain.t1)});
  }
  return pts;
}

// Base-2 radical inverse of i (van der Corput).
inline f64 radical_inverse2(std::uint64_t i) {
  f64 r = 0.0, base = 0.5;
  while (i) {
    if (i & 1u) r += base;
    base *= 0.5;
    i >>= 1;
  }
  return r;
}

// 2-D Hammersley set: (i/n, radical-inverse-2(i)) scaled into the box, with
// boundary-touching coordinates nudged inward so every point is interior.
inline std::vector<Point2> hammersley(const Box2& domain, std::size_t n) {
  if (n == 0) throw std::invalid_argument("hammersley: n must be >= 1");
  std::vector<Point2> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const f64 ux = static_cast<f64>(i) / static_cast<f64>(n);
    const f64 ut = radical_inverse2(i);
    pts[i] = domain.clamp_interior({domain.x0 + ux * (domain.x1 - domain.x0),
                                    domain.t0 + ut * (domain.t1 - domain.t0)});
  }
  return pts;
}

struct ResamplingPmf {
  std::vector<f64> p;
  f64 alpha = 2.0;
  f64 c = 0.0;
};

// p_i = (S_i^alpha + c) / sum_j (S_j^alpha + c).
inline ResamplingPmf build_pmf(std::span<const f64> scores, f64 alpha, f64 c) {
  if (scores.empty()) throw std::invalid_argument("build_pmf: empty scores");
  if (!(alpha >= 0.0) || !(c >= 0.0))
    throw std::invalid_argument("build_pmf: alpha and c must be >= 0");
  ResamplingPmf pmf;
  pmf.alpha = alpha;
  pmf.c = c;
  pmf.p.resize(scores.size());
  f64 sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const f64 s = scores[i];
    if (!(s >= 0.0) || !std::isfinite(s))
      throw std::invalid_argument("build_pmf: scores must be non-negative and "
                                  "finite (index " + std::to_string(i) + ")");
    const f64 w = std::pow(s, alpha) + c;
    pmf.p[i] = w;
    sum += w;
  }
  if (sum <= 0.0)
    throw DegeneratePmfError("build_pmf: all weights zero (alpha > 0, c = 0, "
                             "all scores zero)");
  for (auto& w : pmf.p) w /= sum;
  return pmf;
}

// k distinct indices by Gumbel-top-k: add i.i.d. Gumbel noise to the
// log-weights and take the k largest keys. Equal in law to drawing one index
// at a time from the renormalized pmf. Zero-probability candidates only fill
// in (uniformly, via their noise keys) once the support is exhausted.
inline std::vector<std::size_t> sample_without_replacement(
    const ResamplingPmf& pmf, std::size_t k, std::uint64_t seed) {
  const std::size_t n = pmf.p.size();
  if (k > n)
    throw std::invalid_argument("sample_without_replacement: k exceeds "
                                "candidate count");
  Rng rng(seed);
  // Supported candidates carry log p + Gumbel; zero-probability ones keep
  // just the noise, and the comparator ranks them below all supported ones
  // (uniformly random order among themselves).
  std::vector<f64> key(n);
  for (std::size_t i = 0; i < n; ++i) {
    const f64 g = -std::log(-std::log(rng.uniform01()));
    key[i] = pmf.p[i] > 0.0 ? std::log(pmf.p[i]) + g : g;
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const auto better = [&](std::size_t a, std::size_t b) {
    const bool sa = pmf.p[a] > 0.0, sb = pmf.p[b] > 0.0;
    if (sa != sb) return sa;
    if (key[a] != key[b]) return key[a] > key[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                    idx.end(), better);
  idx.resize(k);
  return idx;
}

}  // namespace pinn

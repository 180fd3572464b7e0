// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>

#include "catch2/catch_amalgamated.hpp"
#include "pinn/sampling.hpp"

using namespace pinn;

TEST_CASE("uniform_sample: deterministic, interior, well spread") {
  const Box2 box{-1.0, 1.0, 0.0, 1.0};
  const auto a = uniform_sample(box, 1000, 42);
  const auto b = uniform_sample(box, 1000, 42);
  REQUIRE(a.size() == 1000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].t == b[i].t);
    CHECK(box.strictly_inside(a[i]));
  }
  // Per-coordinate means within 3 sigma of the midpoint (sigma = L/sqrt(12n)).
  f64 mx = 0.0, mt = 0.0;
  for (const auto& p : a) {
    mx += p.x;
    mt += p.t;
  }
  mx /= 1000.0;
  mt /= 1000.0;
  CHECK(std::abs(mx - 0.0) < 3.0 * 2.0 / std::sqrt(12.0 * 1000.0));
  CHECK(std::abs(mt - 0.5) < 3.0 * 1.0 / std::sqrt(12.0 * 1000.0));

  const auto c = uniform_sample(box, 1000, 43);
  CHECK(c[0].x != a[0].x);

  CHECK_THROWS_AS(uniform_sample(box, 0, 1), std::invalid_argument);
}

TEST_CASE("hammersley: hand-computed base-2 values") {
  const Box2 unit{0.0, 1.0, 0.0, 1.0};

  const auto four = hammersley(unit, 4);
  const Point2 want4[] = {{0.0, 0.0}, {0.25, 0.5}, {0.5, 0.25}, {0.75, 0.75}};
  REQUIRE(four.size() == 4);
  for (int i = 0; i < 4; ++i) {
    // The nudge moves boundary coordinates by 1e-9 of the axis length.
    CHECK(four[i].x == Catch::Approx(want4[i].x).margin(2e-9));
    CHECK(four[i].t == Catch::Approx(want4[i].t).margin(2e-9));
    CHECK(unit.strictly_inside(four[i]));
  }

  const auto two = hammersley(unit, 2);
  CHECK(two[0].x == Catch::Approx(0.0).margin(2e-9));
  CHECK(two[0].t == Catch::Approx(0.0).margin(2e-9));
  CHECK(two[1].x == Catch::Approx(0.5));
  CHECK(two[1].t == Catch::Approx(0.5));

  const auto again = hammersley(unit, 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(four[i].x == again[i].x);
    CHECK(four[i].t == again[i].t);
  }
}

namespace {

// Star-discrepancy proxy on the unit square: worst absolute deviation of
// empirical counts over anchored boxes [0,a]x[0,b].
f64 box_discrepancy(const std::vector<Point2>& pts) {
  f64 worst = 0.0;
  for (int ia = 1; ia <= 10; ++ia) {
    for (int ib = 1; ib <= 10; ++ib) {
      const f64 a = ia / 10.0, b = ib / 10.0;
      std::size_t count = 0;
      for (const auto& p : pts) count += (p.x <= a && p.t <= b) ? 1 : 0;
      const f64 dev =
          std::abs(static_cast<f64>(count) / static_cast<f64>(pts.size()) - a * b);
      worst = std::max(worst, dev);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("hammersley beats uniform random on box discrepancy") {
  const Box2 unit{0.0, 1.0, 0.0, 1.0};
  for (std::size_t n : {std::size_t{64}, std::size_t{256}}) {
    const f64 dh = box_discrepancy(hammersley(unit, n));
    // Median uniform discrepancy over a few seeds, to keep the test stable.
    std::vector<f64> du;
    for (std::uint64_t s = 1; s <= 5; ++s)
      du.push_back(box_discrepancy(uniform_sample(unit, n, s)));
    std::sort(du.begin(), du.end());
    INFO("n = " << n << " hammersley " << dh << " uniform median " << du[2]);
    CHECK(dh < du[2]);
  }
}

TEST_CASE("build_pmf: normalization per the formula") {
  const f64 scores[] = {3.0, 1.0};

  auto p1 = build_pmf(scores, 1.0, 0.0);
  CHECK(p1.p[0] == Catch::Approx(0.75));
  CHECK(p1.p[1] == Catch::Approx(0.25));

  auto p2 = build_pmf(scores, 2.0, 0.0);
  CHECK(p2.p[0] == Catch::Approx(0.9));
  CHECK(p2.p[1] == Catch::Approx(0.1));

  auto p3 = build_pmf(scores, 1.0, 1.0);
  CHECK(p3.p[0] == Catch::Approx(4.0 / 6.0));
  CHECK(p3.p[1] == Catch::Approx(2.0 / 6.0));

  // Sums to 1 and preserves ordering for c = 0.
  Rng rng(9);
  std::vector<f64> s(100);
  for (auto& v : s) v = rng.uniform01() * 10.0;
  auto pmf = build_pmf(s, 2.0, 0.0);
  f64 sum = 0.0;
  for (f64 v : pmf.p) sum += v;
  CHECK(std::abs(sum - 1.0) < 1e-12);
  const auto argmax_s = std::max_element(s.begin(), s.end()) - s.begin();
  const auto argmax_p = std::max_element(pmf.p.begin(), pmf.p.end()) - pmf.p.begin();
  CHECK(argmax_s == argmax_p);

  // alpha = 0 flattens everything to uniform regardless of scores.
  auto flat = build_pmf(scores, 0.0, 0.0);
  CHECK(flat.p[0] == Catch::Approx(0.5));
  CHECK(flat.p[1] == Catch::Approx(0.5));
}

TEST_CASE("build_pmf: rejects bad input and degenerate weights") {
  const f64 neg[] = {1.0, -0.5};
  CHECK_THROWS_AS(build_pmf(neg, 1.0, 0.0), std::invalid_argument);
  const f64 inf[] = {1.0, std::numeric_limits<f64>::infinity()};
  CHECK_THROWS_AS(build_pmf(inf, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_pmf({}, 1.0, 0.0), std::invalid_argument);
  const f64 ok[] = {1.0, 2.0};
  CHECK_THROWS_AS(build_pmf(ok, -1.0, 0.0), std::invalid_argument);

  const f64 zeros[] = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(build_pmf(zeros, 2.0, 0.0), DegeneratePmfError);
  // Smoothing rescues the degenerate case.
  auto rescued = build_pmf(zeros, 2.0, 1.0);
  CHECK(rescued.p[0] == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("sample_without_replacement: support and distinctness") {
  ResamplingPmf point_mass;
  point_mass.p = {1.0, 0.0, 0.0};
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto idx = sample_without_replacement(point_mass, 1, s);
    REQUIRE(idx.size() == 1);
    CHECK(idx[0] == 0);
  }

  ResamplingPmf uniform4;
  uniform4.p = {0.25, 0.25, 0.25, 0.25};
  const auto all = sample_without_replacement(uniform4, 4, 7);
  std::set<std::size_t> seen(all.begin(), all.end());
  CHECK(seen == std::set<std::size_t>{0, 1, 2, 3});

  CHECK_THROWS_AS(sample_without_replacement(uniform4, 5, 1),
                  std::invalid_argument);

  // Zero-probability candidates fill in only after the support is used up.
  ResamplingPmf partial;
  partial.p = {0.5, 0.5, 0.0, 0.0};
  const auto three = sample_without_replacement(partial, 3, 11);
  std::set<std::size_t> got(three.begin(), three.end());
  CHECK(got.count(0) == 1);
  CHECK(got.count(1) == 1);
  CHECK(got.size() == 3);

  const auto rep = sample_without_replacement(partial, 3, 11);
  CHECK(rep == three);
}

TEST_CASE("sample_without_replacement: first-draw marginals match the pmf") {
  ResamplingPmf pmf;
  pmf.p = {0.75, 0.25};
  std::size_t hits = 0;
  const std::size_t trials = 100000;
  for (std::uint64_t s = 0; s < trials; ++s)
    hits += sample_without_replacement(pmf, 1, s)[0] == 0 ? 1 : 0;
  const f64 freq = static_cast<f64>(hits) / static_cast<f64>(trials);
  CHECK(std::abs(freq - 0.75) < 0.01);
}

TEST_CASE("sample_without_replacement: pair frequencies match sequential law") {
  // For p = (0.5, 0.3, 0.2) and k = 2, P(first = i, second = j) =
  // p_i * p_j / (1 - p_i). Check the inclusion probability of index 2.
  ResamplingPmf pmf;
  pmf.p = {0.5, 0.3, 0.2};
  const f64 want_incl2 = 0.5 * 0.2 / 0.5 + 0.3 * 0.2 / 0.7 + 0.2;
  std::size_t hits = 0;
  const std::size_t trials = 60000;
  for (std::uint64_t s = 0; s < trials; ++s) {
    const auto idx = sample_without_replacement(pmf, 2, s);
    hits += std::count(idx.begin(), idx.end(), std::size_t{2});
  }
  const f64 freq = static_cast<f64>(hits) / static_cast<f64>(trials);
  CHECK(std::abs(freq - want_incl2) < 0.015);
}

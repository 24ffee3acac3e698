#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pbtdyn/metrics.hpp"

using namespace pbtdyn;

namespace {

EmpiricalMeasure line(Vec pts) { return EmpiricalMeasure(std::move(pts), 1); }

/// Exhaustive minimum over permutations (n <= 7).
double brute_bl(Vec a, const Vec& b) {
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::min(std::abs(a[i] - b[perm[i]]), 1.0);
    best = std::min(best, s / a.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("sorted W1") {
  CHECK(w1_sorted_1d(line({1, 2, 3}), line({3, 1, 2})) == 0.0);
  CHECK(w1_sorted_1d(line({0}), line({0.5})) == doctest::Approx(0.5));
  CHECK(w1_sorted_1d(line({0, 1}), line({0.5, 1.5})) == doctest::Approx(0.5));
  const EmpiricalMeasure weighted(Vec{0, 1}, 1, Vec{3, 1});
  CHECK(w1_sorted_1d(weighted, line({0})) == doctest::Approx(0.25));
  CHECK_THROWS_AS(w1_sorted_1d(EmpiricalMeasure(Vec{0, 0}, 2), line({0})), Error);
}

TEST_CASE("BL distance examples") {
  CHECK(bl_distance(line({0}), line({3})) == doctest::Approx(1.0));
  CHECK(bl_distance(line({4, 1, 2}), line({1, 2, 4})) == doctest::Approx(0.0));
  CHECK(bl_distance(line({0, 10}), line({0.4, 10.4})) == doctest::Approx(0.4));
  CHECK(w1_sorted_1d(line({0, 10}), line({0.4, 10.4})) == doctest::Approx(0.4));
  CHECK(bl_distance(line({0, 0.1}), line({5, 5.1})) == doctest::Approx(1.0));
  CHECK(w1_sorted_1d(line({0, 0.1}), line({5, 5.1})) == doctest::Approx(5.0));
  CHECK_THROWS_AS(bl_distance(line({0, 1}), line({0})), Error);
  CHECK_THROWS_AS(bl_distance(line(Vec(3000, 0.0)), line(Vec(3000, 0.0))), Error);
}

TEST_CASE("BL matches brute force and is bounded by W1") {
  Stream rng(4);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + rng() % 5;
    Vec a(n), b(n);
    for (auto& x : a) x = rng.uniform(-2, 2);
    for (auto& x : b) x = rng.uniform(-2, 2);
    const double d = bl_distance(line(a), line(b));
    CHECK(d == doctest::Approx(brute_bl(a, b)).epsilon(1e-12));
    CHECK(d <= std::min(w1_sorted_1d(line(a), line(b)), 1.0) + 1e-12);
  }
}

TEST_CASE("BL symmetry and triangle inequality") {
  Stream rng(6);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 5 + rng() % 40;
    Vec a(2 * n), b(2 * n), c(2 * n);
    for (auto* v : {&a, &b, &c}) {
      for (auto& x : *v) x = rng.uniform(-1.5, 1.5);
    }
    const EmpiricalMeasure A(a, 2), B(b, 2), C(c, 2);
    const double ab = bl_distance(A, B), ba = bl_distance(B, A);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab <= bl_distance(A, C) + bl_distance(C, B) + 1e-12);
    CHECK(bl_distance(A, A) == doctest::Approx(0.0));
  }
}

TEST_CASE("assignment solver") {
  const Vec cost{4, 1, 3, 2, 0, 5, 3, 2, 2};
  const auto a = solve_assignment(cost, 3);
  double total = 0;
  for (std::size_t r = 0; r < 3; ++r) total += cost[r * 3 + a[r]];
  CHECK(total == 5.0);
}

TEST_CASE("histogram") {
  const Vec one{0.42};
  auto h = histogram(one, 10, 0, 1);
  CHECK(h.total_mass() == 1.0);
  CHECK(h[4] == 1.0);
  const Vec same(50, 0.1);
  CHECK(histogram(same, 5, 0, 1)[0] == 1.0);
  Stream rng(1);
  Vec u(1000000);
  for (auto& x : u) x = rng.uniform();
  h = histogram(u, 10, 0, 1);
  CHECK(h.total_mass() == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(h[i] - 0.1) <= 1e-3);
  HistogramStats st;
  const Vec outside{-1.0, 0.5, 2.0, 3.0};
  h = histogram(outside, 4, 0, 1, &st);
  CHECK(st.below == 1);
  CHECK(st.above == 2);
  CHECK(h[0] == 0.25);
  CHECK(h[3] == 0.5);
  CHECK_THROWS_AS(histogram(Vec{}, 4, 0, 1), Error);
}

TEST_CASE("subsample, marginal and moments") {
  Vec pts;
  for (int i = 0; i < 100; ++i) {
    pts.push_back(i);
    pts.push_back(-i);
  }
  const EmpiricalMeasure m(pts, 2);
  const auto x = m.marginal(1);
  CHECK(x.size() == 100);
  CHECK(x.point(3)[0] == -3.0);
  const auto s1 = m.subsample(30, 7), s2 = m.subsample(30, 7);
  CHECK(s1.size() == 30);
  CHECK(s1.points == s2.points);
  CHECK(m.subsample(500, 1).size() == 100);
  const auto mom = sample_moments(m);
  CHECK(mom.mean[0] == doctest::Approx(49.5));
  CHECK(mom.mean[1] == doctest::Approx(-49.5));
}

}  // TEST_SUITE

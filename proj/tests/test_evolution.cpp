#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pbtdyn/evolution.hpp"

using namespace pbtdyn;

namespace {

Population line_population(int n) {
  Population pop(n);
  for (int i = 0; i < n; ++i) pop[i] = {{static_cast<double>(i), 0.0}, {0.1 * i, 0.0}, i};
  return pop;
}

double sum(const Vec& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_SUITE("evolution") {

TEST_CASE("softmax weights") {
  const auto rule = SelectionRule::softmax(1.0);
  for (double c : {-50.0, 0.0, 700.0}) {
    const Vec w = selection_weights(Vec{c, c}, rule);
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));
  }
  const Vec w = selection_weights(Vec{0.0, std::log(3.0)}, rule);
  CHECK(w[0] == doctest::Approx(0.25));
  CHECK(w[1] == doctest::Approx(0.75));
}

TEST_CASE("truncation weights select the top fraction") {
  const Vec w = selection_weights(Vec{5, 1, 4, 2, 3}, SelectionRule::truncation(0.2));
  CHECK(w == Vec{1, 0, 0, 0, 0});
  CHECK(truncation_count(10, 0.2) == 2);
  CHECK(truncation_count(5, 0.2) == 1);
  CHECK(truncation_count(3, 0.5) == 1);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(selection_weights(Vec{}, SelectionRule::softmax(1)), Error);
  CHECK_THROWS_AS(selection_weights(Vec{0.0, NAN}, SelectionRule::softmax(1)), Error);
  CHECK_THROWS_AS(SelectionRule::truncation(0.7).validate(), Error);
  CHECK_THROWS_AS(SelectionRule::softmax(0.0).validate(), Error);
  Stream rng(1);
  CHECK_THROWS_AS(genetic_update(line_population(3), Vec{0, 1, 2}, SelectionRule::softmax(1),
                                 MutationConfig{}, 1.5, rng),
                  Error);
}

TEST_CASE("weights normalise, are shift invariant and monotone in alpha") {
  Stream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 300);
    Vec f(n);
    for (auto& x : f) x = rng.uniform(-5, 5);
    for (auto rule : {SelectionRule::softmax(3.0), SelectionRule::truncation(0.2),
                      SelectionRule::worst_replacement(2.0)}) {
      const Vec w = selection_weights(f, rule);
      CHECK(std::abs(sum(w) - 1.0) <= 1e-12);
      CHECK(std::all_of(w.begin(), w.end(), [](double x) { return x >= 0.0; }));
    }
    Vec shifted = f;
    for (auto& x : shifted) x += 0.5;
    const Vec ws = selection_weights(shifted, SelectionRule::softmax(2.0));
    const Vec wf = selection_weights(f, SelectionRule::softmax(2.0));
    for (std::size_t i = 0; i < n; ++i) CHECK(ws[i] == doctest::Approx(wf[i]).epsilon(1e-12));
    const auto best = std::max_element(f.begin(), f.end()) - f.begin();
    double prev = 0.0;
    for (double alpha : {0.1, 1.0, 10.0, 100.0}) {
      const double w = selection_weights(f, SelectionRule::softmax(alpha))[best];
      CHECK(w >= prev - 1e-15);
      prev = w;
    }
  }
  Vec big(100000);
  for (auto& x : big) x = rng.uniform(-1, 1);
  CHECK(std::abs(sum(selection_weights(big, SelectionRule::softmax(100))) - 1.0) <= 1e-12);
}

TEST_CASE("tau = 0 keeps every agent") {
  Stream rng(1);
  const Population pop = line_population(6);
  const Vec f{0, 1, 2, 3, 4, 5};
  for (auto rule : {SelectionRule::softmax(1.0), SelectionRule::worst_replacement(1.0)}) {
    const auto u = genetic_update(pop, f, rule, MutationConfig{}, 0.0, rng);
    CHECK(u.population == pop);
  }
}

TEST_CASE("large alpha copies the argmax") {
  MutationConfig mut;
  mut.sigma = 0.0;
  const Population pop = line_population(2);
  int both = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    Stream rng(stream_key(1, 0, t));
    const auto u = genetic_update(pop, Vec{0.0, 1.0}, SelectionRule::softmax(1000.0), mut, 1.0, rng);
    both += (u.population[0].theta == pop[1].theta && u.population[1].theta == pop[1].theta);
  }
  CHECK(both >= trials * (1.0 - 1e-3));
}

TEST_CASE("truncation replaces the bottom by the top, rank paired") {
  MutationConfig mut;
  mut.sigma = 0.0;
  const Population pop = line_population(10);
  const Vec f{3, 9, 1, 7, 0, 5, 8, 2, 6, 4};
  Stream rng(1);
  const auto u = genetic_update(pop, f, SelectionRule::truncation(0.2), mut, 0.3, rng);
  // Worst (index 4) gets the best (index 1); second worst (2) gets second best (6).
  CHECK(u.source[4] == 1);
  CHECK(u.source[2] == 6);
  std::vector<double> before, after;
  for (const auto& a : pop) before.push_back(a.theta[0]);
  for (const auto& a : u.population) after.push_back(a.theta[0]);
  std::vector<double> expected = before;
  expected[4] = 1;
  expected[2] = 6;
  CHECK(after == expected);
  for (std::size_t i = 0; i < pop.size(); ++i) CHECK(u.population[i].id == pop[i].id);
}

TEST_CASE("truncation ties break by id") {
  const Vec w = selection_weights(Vec{1, 1, 1, 1, 1}, SelectionRule::truncation(0.2));
  CHECK(w == Vec{1, 0, 0, 0, 0});
}

TEST_CASE("population size and box are preserved") {
  MutationConfig mut;
  mut.sigma = 0.5;
  mut.box = SearchBox::cube(2, 0.0, 1.0);
  Stream rng(5);
  Population pop = line_population(40);
  for (auto& a : pop) project_inplace(a.h, *mut.box);
  Vec f(40);
  for (int g = 0; g < 20; ++g) {
    for (auto& x : f) x = rng.normal();
    for (auto rule : {SelectionRule::softmax(5.0), SelectionRule::truncation(0.25),
                      SelectionRule::worst_replacement(5.0)}) {
      const auto u = genetic_update(pop, f, rule, mut, 0.7, rng);
      CHECK(u.population.size() == pop.size());
      for (const auto& a : u.population) CHECK(mut.box->contains(a.h));
    }
  }
}

TEST_CASE("unit-scaled mutation stays in the box and maps back affinely") {
  MutationConfig mut;
  mut.sigma = 0.0;
  mut.box = SearchBox({1e-5, 500.0}, {1e-2, 5000.0});
  mut.scale_to_unit = true;
  Stream rng(1);
  const Vec h{3e-3, 1234.0};
  const Vec same = mutate(h, mut, rng);
  CHECK(same[0] == doctest::Approx(h[0]).epsilon(1e-12));
  CHECK(same[1] == doctest::Approx(h[1]).epsilon(1e-12));
  mut.sigma = 3.0;
  for (int k = 0; k < 500; ++k) CHECK(mut.box->contains(mutate(h, mut, rng)));
  MutationConfig bad;
  bad.scale_to_unit = true;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("mutation has zero mean under flat fitness") {
  MutationConfig mut;
  mut.sigma = 0.1;
  Population pop{{{0.0}, {0.0, 0.0}, 0}};
  Stream rng(8);
  const int n = 100000;
  double shift = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto u = genetic_update(pop, Vec{0.0}, SelectionRule::softmax(1.0), mut, 1.0, rng);
    shift += u.population[0].h[0];
  }
  const double mean = shift / n;
  CHECK(std::abs(mean) <= 3.0 * mut.sigma / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("worst replacement prefers low-fitness victims") {
  Stream rng(4);
  const Population pop = line_population(10);
  Vec f(10);
  for (int i = 0; i < 10; ++i) f[i] = i;
  std::vector<int> hits(10, 0);
  for (int t = 0; t < 4000; ++t) {
    const auto src = plan_jumps(f, std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9},
                                SelectionRule::worst_replacement(1.0), 0.2, rng);
    for (int i = 0; i < 10; ++i) hits[i] += src[i] >= 0;
  }
  CHECK(hits[0] > hits[9]);
  CHECK(hits[1] > hits[8]);
}

TEST_CASE("kind names round trip") {
  for (auto k : {SelectionRule::Kind::softmax, SelectionRule::Kind::truncation,
                 SelectionRule::Kind::worst_replacement}) {
    CHECK(selection_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(selection_kind_from_string("tournament"), Error);
}

}  // TEST_SUITE

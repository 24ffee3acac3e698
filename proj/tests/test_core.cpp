#include <doctest.h>

#include <cmath>

#include "pbtdyn/core.hpp"
#include "pbtdyn/effective_fitness.hpp"

using namespace pbtdyn;

TEST_SUITE("core") {

TEST_CASE("project clamps componentwise and is idempotent") {
  const SearchBox unit({0.0}, {1.0});
  CHECK(project(Vec{0.5}, unit) == Vec{0.5});
  CHECK(project(Vec{1.7}, unit) == Vec{1.0});
  const SearchBox sq = SearchBox::cube(2, 0.0, 1.0);
  CHECK(project(Vec{-0.2, 3.0}, sq) == Vec{0.0, 1.0});
  CHECK_THROWS_AS(project(Vec{0.1, 0.2, 0.3}, sq), Error);

  Stream rng(7);
  for (int k = 0; k < 200; ++k) {
    const Vec h{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Vec once = project(h, sq);
    CHECK(project(once, sq) == once);
    CHECK(sq.contains(once));
  }
}

TEST_CASE("search box rejects inverted bounds") {
  CHECK_THROWS_AS(SearchBox({1.0}, {0.0}), Error);
  CHECK_THROWS_AS(SearchBox({0.0, 0.0}, {1.0}), Error);
}

TEST_CASE("quadratic objective values") {
  const auto q = quadratic_objective();
  CHECK(q.fitness(Vec{0.0, 0.0}, Vec{0.0, 0.0}) == doctest::Approx(1.2));
  CHECK(q.loss(Vec{0.3, 0.3}, Vec{0.3, 0.0}) == doctest::Approx(-1.2));
  // E exp(-X^2) for X ~ N(0, 1/2): each coordinate gives 1/sqrt(2).
  CHECK(q.effective_fitness_closed(Vec{0.0, std::sqrt(2.0)}) ==
        doctest::Approx(1.2 - std::log(2.0)).epsilon(1e-12));
  CHECK(std::isnan(q.fitness(Vec{NAN, 0.0}, Vec{0.0, 0.0})));
}

TEST_CASE("quadratic zero-noise equilibrium is the loss minimiser") {
  const auto q = quadratic_objective();
  Stream rng(1);
  Vec theta(2);
  q.equilibrium_sampler(Vec{0.3, 0.0}, rng, theta);
  CHECK(theta[0] == 0.3);
  CHECK(theta[1] == 0.3);
}

TEST_CASE("quadratic equilibrium statistics") {
  const auto q = quadratic_objective();
  Stream rng(11);
  const int n = 100000;
  double s0 = 0, s1 = 0, q0 = 0, q1 = 0;
  Vec theta(2);
  for (int k = 0; k < n; ++k) {
    q.equilibrium_sampler(Vec{0.5, 1.0}, rng, theta);
    s0 += theta[0];
    s1 += theta[1];
    q0 += theta[0] * theta[0];
    q1 += theta[1] * theta[1];
  }
  const double m0 = s0 / n, m1 = s1 / n;
  CHECK(std::abs(m0 - 0.5) < 0.02);
  CHECK(std::abs(m1 - 0.5) < 0.02);
  CHECK(std::abs((q0 / n - m0 * m0) - 0.25) < 0.025);
  CHECK(std::abs((q1 / n - m1 * m1) - 0.25) < 0.025);
}

TEST_CASE("closed-form effective fitness agrees with Monte Carlo on a grid") {
  const auto q = quadratic_objective();
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const Vec h{-1.0 + 0.5 * i, 0.1 + (2.0 - 0.1) * j / 4.0};
      Stream rng(stream_key(3, i, j));
      const auto est = fbar_monte_carlo(q, h, 200000, rng);
      const double closed = q.effective_fitness_closed(h);
      CAPTURE(h[0]);
      CAPTURE(h[1]);
      // 25 comparisons: 4 SE keeps the family-wise false alarm rate near 0.2%.
      CHECK(std::abs(est.value - closed) <= 4.0 * est.std_error);
    }
  }
}

TEST_CASE("himmelblau objective values") {
  const auto hb = himmelblau_objective();
  CHECK(hb.fitness(Vec{3.0, 2.0}, Vec{0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(hb.fitness(Vec{0.0, 0.0}, Vec{0.0, 0.0}) == doctest::Approx(170.0));
  CHECK(hb.loss(Vec{3.0, 2.0}, Vec{0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(hb.selection_sign == -1.0);
  CHECK_FALSE(hb.has_equilibrium());
  for (const auto& m : himmelblau_minima()) {
    CHECK(hb.fitness(Vec{m[0], m[1]}, Vec{0.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("loss gradients match central differences") {
  for (const auto& obj : {quadratic_objective(), himmelblau_objective()}) {
    Stream rng(5);
    for (int k = 0; k < 100; ++k) {
      Vec theta{rng.uniform(-4, 4), rng.uniform(-4, 4)};
      const Vec h{rng.uniform(-1, 1), rng.uniform(0, 1)};
      Vec grad(2);
      obj.loss_grad(theta, h, grad);
      for (int c = 0; c < 2; ++c) {
        Vec up = theta, dn = theta;
        up[c] += 1e-5;
        dn[c] -= 1e-5;
        const double fd = (obj.loss(up, h) - obj.loss(dn, h)) / 2e-5;
        CAPTURE(obj.name);
        CHECK(std::abs(fd - grad[c]) <= 1e-5 * std::max(1.0, std::abs(grad[c])));
      }
    }
  }
}

TEST_CASE("objective lookup") {
  CHECK(objective_by_name("quadratic").name == "quadratic");
  CHECK(objective_by_name("himmelblau").name == "himmelblau");
  CHECK_THROWS_AS(objective_by_name("rosenbrock"), Error);
}

TEST_CASE("quantiles and summaries") {
  CHECK(quantile({1, 2, 3, 4, 5}, 0.5) == 3.0);
  CHECK(quantile({0, 10}, 0.1) == doctest::Approx(1.0));
  Stream rng(2);
  Population pop(50);
  Vec f(50);
  for (int i = 0; i < 50; ++i) {
    pop[i] = {{rng.normal(), rng.normal()}, {rng.normal(), rng.normal()}, i};
    f[i] = rng.normal();
  }
  const auto r = summarize(pop, f, 3, 1.5, "train");
  CHECK(r.fitness_q10 <= r.fitness_median);
  CHECK(r.fitness_median <= r.fitness_q90);
  CHECK(r.mean_h.size() == 2);
  CHECK(r.var_h[0] >= 0.0);
}

}  // TEST_SUITE

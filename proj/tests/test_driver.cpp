#include <doctest.h>

#include <chrono>
#include <cmath>
#include <sstream>

#include "pbtdyn/driver.hpp"
#include "pbtdyn/io.hpp"

using namespace pbtdyn;

namespace {

RunConfig small(int generations = 10) {
  RunConfig cfg;
  cfg.population = 30;
  cfg.generations = generations;
  cfg.inner_steps = 20;
  cfg.seed = 5;
  return cfg;
}

std::string csv(const RunResult& r) {
  std::ostringstream s;
  write_metrics_csv(s, r.metrics);
  return s.str();
}

}  // namespace

TEST_SUITE("driver") {

TEST_CASE("zero generations gives the baseline only") {
  const auto r = run_pbt(small(0));
  REQUIRE(r.metrics.size() == 1);
  CHECK(r.metrics[0].phase == "init");
  CHECK(r.population == initial_population(small(0), quadratic_objective()));
}

TEST_CASE("records alternate train and jump with constant population size") {
  const auto cfg = small(7);
  const auto r = run_pbt(cfg);
  REQUIRE(r.metrics.size() == 1 + 2 * 7);
  for (int g = 1; g <= 7; ++g) {
    const auto& t = r.metrics[2 * g - 1];
    const auto& j = r.metrics[2 * g];
    CHECK(t.phase == "train");
    CHECK(j.phase == "jump");
    CHECK(t.generation == g);
    CHECK(t.sim_time == doctest::Approx(g * 20 * 0.01));
    CHECK(t.fitness_q10 <= t.fitness_median);
    CHECK(t.fitness_median <= t.fitness_q90);
  }
  CHECK(r.population.size() == cfg.population);
  for (const auto& s : r.snapshots) CHECK(s.agents.size() == cfg.population);
}

TEST_CASE("runs are deterministic and thread-count independent") {
  auto cfg = small(8);
  const auto a = run_pbt(cfg);
  const auto b = run_pbt(cfg);
  cfg.threads = 4;
  const auto c = run_pbt(cfg);
  CHECK(csv(a) == csv(b));
  CHECK(csv(a) == csv(c));
  CHECK(a.population == c.population);

  auto rc = small(5);
  rc.fitness_mode = FitnessMode::equilibrium_sample;
  const auto d = run_reduced(rc);
  rc.threads = 3;
  CHECK(csv(d) == csv(run_reduced(rc)));
}

TEST_CASE("box is respected after every jump") {
  auto cfg = small(10);
  cfg.mutation.sigma = 0.5;
  cfg.mutation.box = SearchBox::cube(2, -0.5, 0.5);
  cfg.snapshot_every = 1;
  const auto r = run_pbt(cfg);
  for (const auto& s : r.snapshots) {
    for (const auto& a : s.agents) CHECK(cfg.mutation.box->contains(a.h));
  }
}

TEST_CASE("no mutation, no noise, sharp selection collapses h") {
  RunConfig cfg;
  cfg.population = 4;
  cfg.generations = 12;
  cfg.mutation.sigma = 0.0;
  cfg.selection = SelectionRule::softmax(1000.0);
  cfg.init.h_lower = {-1.0, 0.0};
  cfg.init.h_upper = {1.0, 0.0};
  const auto r = run_pbt(cfg);
  for (const auto& a : r.population) {
    CHECK(a.h[0] == r.population[0].h[0]);
  }
}

TEST_CASE("closed-form reduced dynamics move towards the maximiser") {
  RunConfig cfg;
  cfg.population = 200;
  cfg.generations = 30;
  cfg.mutation.sigma = 0.0;
  cfg.selection = SelectionRule::softmax(1000.0);
  cfg.fitness_mode = FitnessMode::closed_form;
  const auto r = run_reduced(cfg);
  const auto& first = r.metrics.front();
  const auto& last = r.metrics.back();
  CHECK(std::abs(last.mean_h[0]) < std::abs(first.mean_h[0]) + 0.05);
  CHECK(last.var_h[0] < 1e-20);
  CHECK(std::abs(last.mean_h[0]) < 0.2);
  CHECK(std::abs(last.mean_h[1]) < 0.2);
}

TEST_CASE("equilibrium sampling at zero noise matches the minimiser fitness") {
  RunConfig cfg;
  cfg.population = 20;
  cfg.generations = 1;
  cfg.init.h_lower = {-1.0, 0.0};
  cfg.init.h_upper = {1.0, 0.0};
  cfg.fitness_mode = FitnessMode::equilibrium_sample;
  const auto obj = quadratic_objective();
  const auto pop = initial_population(cfg, obj);
  const auto r = run_reduced(cfg);
  Vec expected;
  for (const auto& a : pop) expected.push_back(obj.fitness(obj.loss_argmin(a.h), a.h));
  CHECK(r.metrics[1].fitness_median == doctest::Approx(quantile(expected, 0.5)));
}

TEST_CASE("mode and objective mismatches are rejected") {
  auto cfg = small(1);
  cfg.fitness_mode = FitnessMode::closed_form;
  CHECK_THROWS_AS(run_pbt(cfg), Error);
  cfg.fitness_mode = FitnessMode::instantaneous;
  CHECK_THROWS_AS(run_reduced(cfg), Error);
  cfg.objective = "himmelblau";
  cfg.fitness_mode = FitnessMode::equilibrium_sample;
  CHECK_THROWS_AS(run_reduced(cfg), Error);
  cfg = small(1);
  cfg.tau = 0.0;
  CHECK_THROWS_AS(run_pbt(cfg), Error);
  CHECK(fitness_mode_from_string("time_average") == FitnessMode::time_average);
  CHECK_THROWS_AS(fitness_mode_from_string("median"), Error);
}

TEST_CASE("time-averaged fitness mode runs and differs from instantaneous") {
  auto cfg = small(5);
  cfg.fitness_mode = FitnessMode::time_average;
  cfg.window = 10;
  const auto a = run_pbt(cfg);
  const auto b = run_pbt(small(5));
  CHECK(csv(a) != csv(b));
}

TEST_CASE("reduced dynamics are cheaper per generation") {
  RunConfig cfg;
  cfg.population = 2000;
  cfg.generations = 5;
  cfg.inner_steps = 20;
  cfg.snapshot_every = 0;
  const auto full = run_pbt(cfg);
  cfg.fitness_mode = FitnessMode::equilibrium_sample;
  const auto reduced = run_reduced(cfg);
  CHECK(reduced.wall_seconds < full.wall_seconds);
}

}  // TEST_SUITE

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pbtdyn/meanfield.hpp"

using namespace pbtdyn;

namespace {

DensityGrid bump(double lo, double hi, std::size_t cells, double mean, double sd) {
  DensityGrid g = DensityGrid::line(lo, hi, cells);
  g.fill_from([&](ConstSpan h) { return std::exp(-0.5 * std::pow((h[0] - mean) / sd, 2)); });
  g.normalize();
  return g;
}

const FitnessField flat = [](ConstSpan) { return 0.7; };

}  // namespace

TEST_SUITE("meanfield") {

TEST_CASE("selection reweights by exp(alpha F)") {
  DensityGrid g = DensityGrid::line(0, 2, 2);
  g[0] = g[1] = 0.5;
  const auto s = apply_selection(g, Vec{0.0, std::log(3.0)}, 1.0);
  CHECK(s[0] == doctest::Approx(0.25));
  CHECK(s[1] == doctest::Approx(0.75));
  const auto b = bump(-1, 1, 50, 0.2, 0.3);
  const auto same = apply_selection(b, flat, 5.0);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(same[i] == doctest::Approx(b[i]));
  const auto sharp = apply_selection(b, [](ConstSpan h) { return -std::abs(h[0] - 0.51); }, 1e5);
  CHECK(sharp[b.locate(0, 0.51)] == doctest::Approx(1.0));
  DensityGrid empty = DensityGrid::line(0, 1, 4);
  CHECK_THROWS_AS(apply_selection(empty, flat, 1.0), Error);
}

TEST_CASE("mutation matches the discretised Gaussian and conserves mass") {
  DensityGrid g = DensityGrid::line(-1, 1, 201);
  const std::size_t mid = 100;
  g[mid] = 1.0;
  const double w = g.cell_width(0);
  const auto m = apply_mutation(g, 3 * w);
  Vec oracle(g.size());
  double z = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = (static_cast<double>(i) - mid) * w;
    oracle[i] = std::abs(d) <= 18 * w + 1e-12 ? std::exp(-0.5 * d * d / (9 * w * w)) : 0.0;
    z += oracle[i];
  }
  double tv = 0;
  for (std::size_t i = 0; i < g.size(); ++i) tv += std::abs(m[i] - oracle[i] / z);
  CHECK(0.5 * tv <= 1e-3);
  CHECK(apply_mutation(g, 0.0).masses() == g.masses());

  Stream rng(3);
  for (int t = 0; t < 20; ++t) {
    DensityGrid r = DensityGrid::line(-3, 3, 120);
    for (auto& x : r.masses()) x = rng.uniform();
    r.normalize();
    CHECK(std::abs(apply_mutation(r, rng.uniform(0.0, 1.0)).total_mass() - 1.0) <= 1e-12);
  }
}

TEST_CASE("2D mutation conserves mass") {
  DensityGrid g({-1, -1}, {1, 1}, {40, 30});
  g.fill_uniform();
  g[5] += 1.0;
  g.normalize();
  CHECK(std::abs(apply_mutation(g, 0.2).total_mass() - 1.0) <= 1e-12);
  CHECK_THROWS_AS(DensityGrid({0, 0}, {1, 1}, {600, 10}), Error);
}

TEST_CASE("averaged step endpoints") {
  const auto g = bump(-2, 2, 80, 0.3, 0.4);
  PdeConfig cfg;
  cfg.fbar = [](ConstSpan h) { return -h[0] * h[0]; };
  cfg.alpha = 3.0;
  cfg.sigma = 0.1;
  cfg.dt = 0.0;
  CHECK(step_averaged(g, cfg).masses() == g.masses());
  cfg.dt = 1.0;
  const auto full = step_averaged(g, cfg);
  const auto direct = apply_mutation(apply_selection(g, cfg.fbar, cfg.alpha), cfg.sigma);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(full[i] == doctest::Approx(direct[i]));
  PdeConfig idle = cfg;
  idle.fbar = flat;
  idle.sigma = 0.0;
  idle.dt = 0.6;
  const auto same = step_averaged(g, idle);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(same[i] == doctest::Approx(g[i]));
  cfg.dt = 1.5;
  CHECK_THROWS_AS(step_averaged(g, cfg), Error);
}

TEST_CASE("replicator step: uniform fixed point, logistic growth, stability") {
  DensityGrid u = DensityGrid::line(-1, 1, 40);
  u.fill_uniform();
  PdeConfig cfg;
  cfg.scheme = PdeScheme::replicator_mutator;
  cfg.fbar = flat;
  cfg.sigma = 0.1;
  cfg.dt = 0.01;
  cfg.alpha = 1.0;
  const auto same = step_replicator(u, cfg);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(same[i] == doctest::Approx(u[i]));

  DensityGrid two = DensityGrid::line(0, 2, 2);
  two[0] = two[1] = 0.5;
  cfg.sigma = 0.0;
  cfg.dt = 1e-4;
  const Vec f{1.0, 0.0};
  for (int k = 0; k < 10000; ++k) two = step_replicator(two, cfg, f);
  CHECK(two[0] == doctest::Approx(std::exp(1.0) / (1 + std::exp(1.0))).epsilon(1e-4));

  cfg.sigma = 1.0;
  cfg.dt = 1.0;
  CHECK_THROWS_AS(step_replicator(u, cfg), Error);
}

TEST_CASE("every operator conserves mass and stays nonnegative") {
  Stream rng(9);
  PdeConfig cfg;
  cfg.fbar = [](ConstSpan h) { return -(h[0] - 0.3) * (h[0] - 0.3); };
  cfg.alpha = 10.0;
  cfg.sigma = 0.05;
  for (int t = 0; t < 10; ++t) {
    DensityGrid g = DensityGrid::line(-3, 3, 600);
    for (auto& x : g.masses()) x = rng.uniform();
    g.normalize();
    cfg.dt = 0.05;
    const auto a = step_averaged(g, cfg);
    // Reaction rates reach alpha * max|Fbar| ~ 110 on this domain.
    cfg.dt = 0.5 * std::min(replicator_max_dt(g, cfg.sigma), 1.0 / (cfg.alpha * 11.0));
    const auto b = step_replicator(g, cfg);
    for (const auto* r : {&a, &b}) {
      CHECK(std::abs(r->total_mass() - 1.0) <= 1e-10);
      for (double m : r->masses()) CHECK(m >= 0.0);
    }
  }
}

TEST_CASE("moments") {
  DensityGrid sym = DensityGrid::line(-1, 1, 64);
  sym.fill_uniform();
  CHECK(std::abs(moments(sym).mean[0]) < 1e-15);
  DensityGrid pm = DensityGrid::line(0, 0.8, 8);
  pm.set_point_mass(Vec{0.45});
  CHECK(moments(pm).mean[0] == doctest::Approx(0.45));
  CHECK(moments(pm).energy == doctest::Approx(0.5 * 0.45 * 0.45));
  DensityGrid fine = DensityGrid::line(-1, 1, 2000);
  fine.fill_uniform();
  const double w = fine.cell_width(0);
  CHECK(std::abs(moments(fine).energy - 1.0 / 6.0) <= w * w);
}

TEST_CASE("equilibrium residual") {
  DensityGrid pm = DensityGrid::line(-1, 1, 20);
  pm.set_point_mass(Vec{0.33});
  PdeConfig cfg;
  cfg.fbar = flat;
  cfg.sigma = 0.0;
  const auto r = equilibrium_residual(pm, cfg);
  CHECK(r.r_mean == 0.0);
  CHECK(r.r_energy == doctest::Approx(0.0).epsilon(1e-15));
  cfg.sigma = 0.4;
  CHECK(equilibrium_residual(bump(-3, 3, 100, 0.5, 0.3), cfg).r_mean < 1e-12);
}

TEST_CASE("replicator consistency decays linearly in nu") {
  const auto g = bump(-5, 5, 1000, 0.0, 1.0);
  PdeConfig cfg;
  cfg.sigma = 1.0;
  cfg.alpha = 1.0;
  cfg.fbar = [](ConstSpan h) { return -(h[0] - 0.5) * (h[0] - 0.5); };
  double prev = replicator_consistency(g, cfg, 0.1);
  for (double nu : {0.05, 0.025}) {
    const double r = replicator_consistency(g, cfg, nu);
    CHECK(r / prev >= 0.3);
    CHECK(r / prev <= 0.7);
    prev = r;
  }
  PdeConfig idle;
  idle.fbar = flat;
  idle.sigma = 0.0;
  CHECK(replicator_consistency(g, idle, 0.1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("energy estimate under selection") {
  // Fbar = -(h - 0.3)^2: c_u = 2, c_l = 0.5, R_l = 1.1 (derivation in docs).
  const double c_u = 2.0, c_l = 0.5, r_l = 1.1;
  Stream rng(21);
  for (double alpha : {2.0, 10.0, 100.0}) {
    const double b2 = 2.0 * (c_u / c_l) * (1.0 + 1.0 / (alpha * c_l * r_l * r_l));
    const double b1 = r_l + b2;
    for (int t = 0; t < 50; ++t) {
      DensityGrid g = DensityGrid::line(-10, 10, 400);
      const double c = rng.uniform(-8, 8), s = rng.uniform(0.1, 4);
      g.fill_from([&](ConstSpan h) { return std::exp(-0.5 * std::pow((h[0] - c) / s, 2)) + 1e-3; });
      g.normalize();
      const auto sel = apply_selection(g, [](ConstSpan h) { return -(h[0] - 0.3) * (h[0] - 0.3); },
                                       alpha);
      CHECK(moments(sel).energy <= b1 + b2 * moments(g).energy);
    }
  }
}

}  // TEST_SUITE

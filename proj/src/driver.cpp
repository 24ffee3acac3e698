#include "pbtdyn/driver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "pbtdyn/effective_fitness.hpp"
#include "pbtdyn/parallel.hpp"

namespace pbtdyn {

namespace {

constexpr std::uint64_t kTagInit = 0x11;
constexpr std::uint64_t kTagTrain = 0x22;
constexpr std::uint64_t kTagJump = 0x33;
constexpr std::uint64_t kTagEquilibrium = 0x44;
constexpr std::uint64_t kPopulationStream = std::numeric_limits<std::uint64_t>::max();

Vec raw_fitness(const Population& pop, const ObjectiveSpec& obj) {
  Vec f(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) f[i] = obj.fitness(pop[i].theta, pop[i].h);
  return f;
}

Vec signed_copy(const Vec& f, double sign) {
  Vec out(f);
  for (auto& x : out) x *= sign;
  return out;
}

void check_finite_fitness(const Vec& f, const Population& pop) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i])) throw NonFiniteError(pop[i].id, pop[i].theta);
  }
}

void maybe_snapshot(const RunConfig& cfg, int generation, const Population& pop,
                    std::vector<Snapshot>& out) {
  if (cfg.snapshot_every > 0 && generation % cfg.snapshot_every == 0) {
    out.push_back({generation, pop});
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

const char* to_string(FitnessMode mode) {
  switch (mode) {
    case FitnessMode::instantaneous:
      return "instantaneous";
    case FitnessMode::time_average:
      return "time_average";
    case FitnessMode::equilibrium_sample:
      return "equilibrium_sample";
    case FitnessMode::closed_form:
      return "closed_form";
  }
  return "?";
}

FitnessMode fitness_mode_from_string(const std::string& name) {
  if (name == "instantaneous") return FitnessMode::instantaneous;
  if (name == "time_average") return FitnessMode::time_average;
  if (name == "equilibrium_sample") return FitnessMode::equilibrium_sample;
  if (name == "closed_form") return FitnessMode::closed_form;
  throw Error("unknown fitness mode '" + name + "'");
}

void RunConfig::validate(const ObjectiveSpec& obj) const {
  if (population == 0) throw Error("run config: population must be positive");
  if (!(tau > 0.0 && tau <= 1.0)) throw Error("run config: tau must lie in (0, 1]");
  if (inner_steps < 0) throw Error("run config: inner_steps must be non-negative");
  if (generations < 0) throw Error("run config: generations must be non-negative");
  if (window == 0) throw Error("run config: window must be at least 1");
  selection.validate();
  mutation.validate();
  langevin.validate();
  if (mutation.box && mutation.box->dim() != obj.h_dim) {
    throw Error("run config: search box dimension does not match the objective");
  }
  if (init.theta_lower.size() != obj.theta_dim || init.theta_upper.size() != obj.theta_dim ||
      init.h_lower.size() != obj.h_dim || init.h_upper.size() != obj.h_dim) {
    throw Error("run config: init box dimensions do not match the objective");
  }
  if (fitness_mode == FitnessMode::equilibrium_sample && !obj.has_equilibrium()) {
    throw Error("run config: objective '" + obj.name +
                "' has no equilibrium sampler");
  }
  if (fitness_mode == FitnessMode::closed_form && !obj.has_closed_form()) {
    throw Error("run config: objective '" + obj.name +
                "' has no closed-form effective fitness");
  }
}

Population initial_population(const RunConfig& cfg, const ObjectiveSpec& obj) {
  Stream rng(stream_key(cfg.seed, kPopulationStream, 0, kTagInit));
  Population pop(cfg.population);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    auto& a = pop[i];
    a.id = static_cast<int>(i);
    a.theta.resize(obj.theta_dim);
    a.h.resize(obj.h_dim);
    for (std::size_t k = 0; k < obj.theta_dim; ++k) {
      a.theta[k] = rng.uniform(cfg.init.theta_lower[k], cfg.init.theta_upper[k]);
    }
    for (std::size_t k = 0; k < obj.h_dim; ++k) {
      a.h[k] = rng.uniform(cfg.init.h_lower[k], cfg.init.h_upper[k]);
    }
    if (cfg.mutation.box) project_inplace(a.h, *cfg.mutation.box);
  }
  return pop;
}

RunResult run_pbt(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const ObjectiveSpec obj = objective_by_name(cfg.objective);
  cfg.validate(obj);
  if (cfg.fitness_mode == FitnessMode::equilibrium_sample ||
      cfg.fitness_mode == FitnessMode::closed_form) {
    throw Error("run_pbt: fitness mode '" + std::string(to_string(cfg.fitness_mode)) +
                "' belongs to the reduced dynamics");
  }

  RunResult result;
  Population pop = initial_population(cfg, obj);
  const bool averaged = cfg.fitness_mode == FitnessMode::time_average;
  std::vector<FitnessHistory> history(pop.size(), FitnessHistory(cfg.window));

  Vec f = raw_fitness(pop, obj);
  result.metrics.push_back(summarize(pop, f, 0, 0.0, "init"));
  maybe_snapshot(cfg, 0, pop, result.snapshots);

  const double block = static_cast<double>(cfg.inner_steps) * cfg.langevin.dt;
  for (int g = 0; g < cfg.generations; ++g) {
    parallel_for(pop.size(), cfg.threads, [&](std::size_t i) {
      Stream rng(stream_key(cfg.seed, i, static_cast<std::uint64_t>(g), kTagTrain));
      Agent& a = pop[i];
      Vec grad(a.theta.size());
      for (long s = 0; s < cfg.inner_steps; ++s) {
        langevin_step_inplace(a, obj, cfg.langevin, rng, grad);
        if (averaged && s + static_cast<long>(cfg.window) >= cfg.inner_steps) {
          history[i].push(obj.fitness(a.theta, a.h), g + 1);
        }
      }
    });

    const double t = block * static_cast<double>(g + 1);
    f = raw_fitness(pop, obj);
    check_finite_fitness(f, pop);
    Vec used = f;
    if (averaged) {
      for (std::size_t i = 0; i < pop.size(); ++i) {
        if (!history[i].empty()) used[i] = time_avg_fitness(history[i]);
      }
    }
    MetricsRecord trained = summarize(pop, used, g + 1, t, "train");
    result.metrics.push_back(std::move(trained));

    Stream jump_rng(stream_key(cfg.seed, kPopulationStream,
                               static_cast<std::uint64_t>(g), kTagJump));
    const Vec selection_fitness = signed_copy(used, obj.selection_sign);
    GeneticUpdate upd = genetic_update(pop, selection_fitness, cfg.selection,
                                       cfg.mutation, cfg.tau, jump_rng);
    pop = std::move(upd.population);
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (upd.source[i] >= 0) history[i].clear();
    }

    f = raw_fitness(pop, obj);
    MetricsRecord jumped = summarize(pop, f, g + 1, t, "jump");
    std::size_t replaced = 0;
    for (int s : upd.source) replaced += s >= 0 ? 1 : 0;
    jumped.extra["replaced"] = static_cast<double>(replaced);
    result.metrics.push_back(std::move(jumped));
    maybe_snapshot(cfg, g + 1, pop, result.snapshots);
  }

  result.population = std::move(pop);
  result.wall_seconds = seconds_since(start);
  return result;
}

RunResult run_reduced(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const ObjectiveSpec obj = objective_by_name(cfg.objective);
  cfg.validate(obj);
  if (cfg.fitness_mode != FitnessMode::equilibrium_sample &&
      cfg.fitness_mode != FitnessMode::closed_form) {
    throw Error("run_reduced: fitness mode must be equilibrium_sample or closed_form");
  }

  RunResult result;
  Population pop = initial_population(cfg, obj);
  Vec f = raw_fitness(pop, obj);
  result.metrics.push_back(summarize(pop, f, 0, 0.0, "init"));
  maybe_snapshot(cfg, 0, pop, result.snapshots);

  const double block = static_cast<double>(cfg.inner_steps) * cfg.langevin.dt;
  const bool sampled = cfg.fitness_mode == FitnessMode::equilibrium_sample;
  for (int g = 0; g < cfg.generations; ++g) {
    Vec fbar(pop.size());
    parallel_for(pop.size(), cfg.threads, [&](std::size_t i) {
      Agent& a = pop[i];
      if (sampled) {
        Stream rng(stream_key(cfg.seed, i, static_cast<std::uint64_t>(g),
                              kTagEquilibrium));
        obj.equilibrium_sampler(a.h, rng, a.theta);
        fbar[i] = obj.fitness(a.theta, a.h);
      } else {
        fbar[i] = obj.effective_fitness_closed(a.h);
      }
    });
    check_finite_fitness(fbar, pop);

    const double t = block * static_cast<double>(g + 1);
    result.metrics.push_back(summarize(pop, fbar, g + 1, t, "train"));

    Stream jump_rng(stream_key(cfg.seed, kPopulationStream,
                               static_cast<std::uint64_t>(g), kTagJump));
    GeneticUpdate upd =
        genetic_update(pop, signed_copy(fbar, obj.selection_sign), cfg.selection,
                       cfg.mutation, cfg.tau, jump_rng);
    pop = std::move(upd.population);

    Vec after(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
      after[i] = sampled ? obj.fitness(pop[i].theta, pop[i].h)
                         : obj.effective_fitness_closed(pop[i].h);
    }
    result.metrics.push_back(summarize(pop, after, g + 1, t, "jump"));
    maybe_snapshot(cfg, g + 1, pop, result.snapshots);
  }

  result.population = std::move(pop);
  result.wall_seconds = seconds_since(start);
  return result;
}

Vec h_column(const Population& pop, std::size_t axis) {
  Vec out(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) out[i] = pop[i].h.at(axis);
  return out;
}

Vec theta_column(const Population& pop, std::size_t axis) {
  Vec out(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) out[i] = pop[i].theta.at(axis);
  return out;
}

}  // namespace pbtdyn

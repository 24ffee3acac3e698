#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pbtdyn/core.hpp"
#include "pbtdyn/dynamics.hpp"
#include "pbtdyn/evolution.hpp"

namespace pbtdyn {

enum class FitnessMode {
  /// F at the current parameters.
  instantaneous,
  /// Mean of F over the last `window` inner steps.
  time_average,
  /// F at a fresh draw from the stationary law (reduced dynamics only).
  equilibrium_sample,
  /// Closed-form effective fitness (reduced dynamics only).
  closed_form,
};

const char* to_string(FitnessMode mode);
FitnessMode fitness_mode_from_string(const std::string& name);

/// Uniform initial distribution over boxes for theta and h.
struct InitSpec {
  Vec theta_lower{-1.0, -1.0};
  Vec theta_upper{1.0, 1.0};
  Vec h_lower{-1.0, -1.0};
  Vec h_upper{1.0, 1.0};
};

struct RunConfig {
  std::string objective = "quadratic";
  std::size_t population = 100;
  double tau = 1.0;
  SelectionRule selection = SelectionRule::softmax(100.0);
  MutationConfig mutation{};
  LangevinConfig langevin{};
  /// Langevin steps per generation; the time-scale separation knob.
  long inner_steps = 50;
  int generations = 100;
  std::uint64_t seed = 1;
  InitSpec init{};
  FitnessMode fitness_mode = FitnessMode::instantaneous;
  std::size_t window = 1;
  /// Full population dumps every this many generations (0 disables).
  int snapshot_every = 10;
  /// Worker threads for the per-agent phases; results do not depend on it.
  unsigned threads = 1;

  void validate(const ObjectiveSpec& obj) const;
};

struct Snapshot {
  int generation = 0;
  Population agents;
};

struct RunResult {
  Population population;
  std::vector<MetricsRecord> metrics;
  std::vector<Snapshot> snapshots;
  double wall_seconds = 0.0;
};

/// Full population-based training: inner Langevin training, fitness
/// evaluation, then a selection-mutation jump, once per generation. Emits an
/// "init" record, then a "train" and a "jump" record per generation.
RunResult run_pbt(const RunConfig& cfg);

/// Reduced dynamics: no inner training; fitness comes from a fresh
/// equilibrium sample or the closed-form effective fitness.
RunResult run_reduced(const RunConfig& cfg);

/// Initial population drawn from cfg.init (stream tagged by seed only).
Population initial_population(const RunConfig& cfg, const ObjectiveSpec& obj);

/// h (or theta) coordinate `axis` of every agent.
Vec h_column(const Population& pop, std::size_t axis);
Vec theta_column(const Population& pop, std::size_t axis);

}  // namespace pbtdyn

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbtdyn/core.hpp"

namespace pbtdyn::experiments {

using json = nlohmann::json;

/// Schema violation; `key` is the dotted path of the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Outcome {
  std::string experiment;
  std::vector<Check> checks;
  json results = json::object();
  std::vector<std::string> files;
  double wall_seconds = 0.0;

  bool passed() const;
  const Check* find(const std::string& name) const;
};

const std::vector<std::string>& experiment_ids();

/// Default block for an experiment id, with every accepted key.
json default_block(const std::string& id);

/// Fills defaults and validates a config document of the form
///   {"experiment": id, "seeds": [...], "output": dir, id: {...}}.
/// Unknown keys and type mismatches throw ConfigError.
json resolve_config(const json& raw);

json load_config(const std::filesystem::path& path);

/// Runs a resolved config. Seeds override the config's list when non-empty.
/// CSV files land in out_dir; summary.json is written there as well.
Outcome run_experiment(const json& resolved, const std::filesystem::path& out_dir,
                       const std::vector<std::uint64_t>& seeds = {});

/// Individual runners (take the resolved block).
Outcome run_quadratic_pbt(const json& block, const std::vector<std::uint64_t>& seeds,
                          const std::filesystem::path& out);
Outcome run_quadratic_chaos(const json& block, const std::vector<std::uint64_t>& seeds,
                            const std::filesystem::path& out);
Outcome run_quadratic_two_time(const json& block, const std::vector<std::uint64_t>& seeds,
                               const std::filesystem::path& out);
Outcome run_himmelblau(const json& block, const std::vector<std::uint64_t>& seeds,
                       const std::filesystem::path& out);
Outcome run_meanfield_convergence(const json& block, const std::filesystem::path& out);
Outcome run_replicator_limit(const json& block, const std::filesystem::path& out);
Outcome run_penalization_rate(const json& block, const std::vector<std::uint64_t>& seeds,
                              const std::filesystem::path& out);
Outcome run_cartpole(const json& block, const std::vector<std::uint64_t>& seeds,
                     const std::filesystem::path& out);

/// Fractions of points within `radius` of any Himmelblau minimum, and within
/// `radius` of the most popular single minimum.
struct BasinFractions {
  double near_any = 0.0;
  double best_single = 0.0;
  int best_index = -1;
};
BasinFractions himmelblau_basins(const Population& pop, double radius);

/// Mean and sample std of pairwise values.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace pbtdyn::experiments

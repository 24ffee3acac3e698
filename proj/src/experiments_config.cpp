#include <fstream>
#include <set>

#include "pbtdyn/experiments.hpp"

namespace pbtdyn::experiments {

namespace {

json particle_defaults() {
  return {
      {"population", 100},
      {"generations", 100},
      {"inner_steps", 50},
      {"dt", 0.01},
      {"tau", 1.0},
      {"sigma", 0.1},
      {"alpha", 100.0},
      {"selection", "softmax"},
      {"truncation_fraction", 0.2},
      {"fitness_mode", "instantaneous"},
      {"window", 1},
      {"snapshot_every", 10},
      {"threads", 1},
      {"init_theta", {-1.0, 1.0}},
      {"init_h", {-1.0, 1.0}},
      {"h_box", nullptr},
  };
}

json merged(json base, const json& extra) {
  for (const auto& [k, v] : extra.items()) base[k] = v;
  return base;
}

bool is_optional(const json& def) { return def.is_null(); }

void check_value(const std::string& path, const json& def, const json& value) {
  if (is_optional(def)) {
    if (!(value.is_null() || value.is_number() || value.is_array())) {
      throw ConfigError(path, "expected a number, a list or null");
    }
    return;
  }
  if (def.is_boolean() && !value.is_boolean()) throw ConfigError(path, "expected a boolean");
  if (def.is_number_integer() && !value.is_number_integer()) {
    throw ConfigError(path, "expected an integer");
  }
  if (def.is_number_float() && !value.is_number()) throw ConfigError(path, "expected a number");
  if (def.is_string() && !value.is_string()) throw ConfigError(path, "expected a string");
  if (def.is_array()) {
    if (!value.is_array()) throw ConfigError(path, "expected a list");
    if (!def.empty()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        check_value(path + "[" + std::to_string(i) + "]", def.front(), value[i]);
      }
    }
  }
}

void require_range(const json& block, const std::string& id, const std::string& key,
                   double lo, double hi) {
  const auto check = [&](const json& v, const std::string& path) {
    if (!v.is_number()) return;
    const double x = v.get<double>();
    if (!(x >= lo && x <= hi)) {
      throw ConfigError(path, "value " + v.dump() + " outside [" + json(lo).dump() + ", " +
                                  json(hi).dump() + "]");
    }
  };
  const json& v = block.at(key);
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      check(v[i], id + "." + key + "[" + std::to_string(i) + "]");
    }
  } else {
    check(v, id + "." + key);
  }
}

void require_pair(const json& block, const std::string& id, const std::string& key) {
  const json& v = block.at(key);
  if (v.is_null()) return;
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number() ||
      !(v[0].get<double>() < v[1].get<double>())) {
    throw ConfigError(id + "." + key, "expected [lower, upper] with lower < upper");
  }
}

void require_one_of(const json& block, const std::string& id, const std::string& key,
                    std::initializer_list<const char*> options) {
  const std::string v = block.at(key).get<std::string>();
  for (const char* o : options) {
    if (v == o) return;
  }
  throw ConfigError(id + "." + key, "unknown value '" + v + "'");
}

void check_particle_block(const json& b, const std::string& id) {
  constexpr double big = 1e9;
  require_range(b, id, "generations", 0, big);
  require_range(b, id, "inner_steps", 0, big);
  require_range(b, id, "dt", 1e-12, big);
  require_range(b, id, "tau", 1e-12, 1.0);
  require_range(b, id, "sigma", 0, big);
  require_range(b, id, "alpha", 1e-12, big);
  require_range(b, id, "truncation_fraction", 1e-12, 0.5);
  require_range(b, id, "window", 1, big);
  require_range(b, id, "snapshot_every", 0, big);
  require_range(b, id, "threads", 1, 1024);
  require_one_of(b, id, "selection", {"softmax", "truncation", "worst_replacement"});
  require_pair(b, id, "init_theta");
  require_pair(b, id, "init_h");
  require_pair(b, id, "h_box");
}

void check_block(const std::string& id, const json& b) {
  if (id == "quadratic_pbt" || id == "quadratic_chaos" || id == "quadratic_two_time" ||
      id == "himmelblau") {
    check_particle_block(b, id);
    require_one_of(b, id, "fitness_mode", {"instantaneous", "time_average"});
  }
  if (id == "quadratic_pbt" || id == "himmelblau") {
    require_range(b, id, "population", 1, 1e8);
  }
  if (id == "quadratic_chaos") {
    require_range(b, id, "populations", 2, 1e8);
    require_range(b, id, "subsample", 2, 2048);
    if (b.at("populations").empty()) throw ConfigError(id + ".populations", "empty list");
  }
  if (id == "quadratic_two_time") {
    require_range(b, id, "population", 2, 1e8);
    require_range(b, id, "inner_steps_list", 0, 1e9);
    require_range(b, id, "subsample", 2, 2048);
    require_one_of(b, id, "reduced_mode", {"equilibrium_sample", "closed_form"});
    if (b.at("inner_steps_list").empty()) {
      throw ConfigError(id + ".inner_steps_list", "empty list");
    }
  }
  if (id == "meanfield_convergence") {
    require_range(b, id, "cells", 3, 1e6);
    require_range(b, id, "dt", 1e-12, 1.0);
    require_range(b, id, "sigma", 0, 1e9);
    require_range(b, id, "alpha", 1e-12, 1e9);
    require_range(b, id, "fd_dts", 1e-12, 1.0);
    require_range(b, id, "fd_reference_dt", 1e-12, 1.0);
    if (!(b.at("lower").get<double>() < b.at("upper").get<double>())) {
      throw ConfigError(id + ".upper", "must exceed lower");
    }
  }
  if (id == "replicator_limit") {
    require_range(b, id, "cells", 3, 1e6);
    require_range(b, id, "nus", 1e-12, 1.0);
    require_range(b, id, "sigma", 1e-12, 1e9);
    require_range(b, id, "bump_std", 1e-12, 1e9);
    if (!(b.at("lower").get<double>() < b.at("upper").get<double>())) {
      throw ConfigError(id + ".upper", "must exceed lower");
    }
  }
  if (id == "penalization_rate") {
    require_range(b, id, "betas", 1e-12, 1e12);
    require_range(b, id, "mc_samples", 2, 1e10);
  }
  if (id == "cartpole") {
    require_range(b, id, "population", 2, 1e6);
    require_range(b, id, "steps_per_generation", 1, 1e9);
    require_range(b, id, "reward_cap", 1, 1e9);
    require_range(b, id, "windows", 1, 1e6);
    require_range(b, id, "sigma", 0, 1e9);
    require_range(b, id, "generations", 0, 1e9);
    require_range(b, id, "gamma", 0, 1);
    require_range(b, id, "threads", 1, 1024);
    if (b.at("windows").empty()) throw ConfigError(id + ".windows", "empty list");
  }
}

}  // namespace

bool Outcome::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

const Check* Outcome::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{
      "quadratic_pbt",     "quadratic_chaos",   "quadratic_two_time",
      "himmelblau",        "meanfield_convergence", "replicator_limit",
      "penalization_rate", "cartpole"};
  return ids;
}

json default_block(const std::string& id) {
  if (id == "quadratic_pbt") {
    return merged(particle_defaults(), {{"max_abs_mean_h0", nullptr},
                                        {"max_mean_h1", nullptr},
                                        {"min_jump_up_fraction", 0.5}});
  }
  if (id == "quadratic_chaos") {
    json b = particle_defaults();
    b.erase("population");
    return merged(b, {{"populations", {100, 1000, 10000}},
                      {"generations", 500},
                      {"snapshot_every", 0},
                      {"subsample", 2000},
                      {"marginal", 0}});
  }
  if (id == "quadratic_two_time") {
    return merged(particle_defaults(), {{"population", 10000},
                                        {"generations", 10},
                                        {"snapshot_every", 0},
                                        {"inner_steps_list", {20, 50, 100}},
                                        {"reduced_mode", "equilibrium_sample"},
                                        {"subsample", 2000},
                                        {"marginal", 0}});
  }
  if (id == "himmelblau") {
    return merged(particle_defaults(), {{"population", 10000},
                                        {"generations", 500},
                                        {"snapshot_every", 0},
                                        {"init_theta", {-0.5, 0.5}},
                                        {"radius", 0.7},
                                        {"min_near_fraction", 0.9},
                                        {"min_basin_fraction", 0.7},
                                        {"min_passing_seeds", 2}});
  }
  if (id == "meanfield_convergence") {
    return {{"lower", -3.0},
            {"upper", 3.0},
            {"cells", 600},
            {"alpha", 100.0},
            {"sigma", 0.05},
            {"dt", 0.05},
            {"target", 0.3},
            {"t_max", 10.0},
            {"slack", 0.01},
            {"mass_tolerance", 1e-10},
            {"equilibrium_steps", 10000},
            {"residual_tolerance_cells", 5.0},
            {"fd_dts", {0.1, 0.05, 0.025}},
            {"fd_reference_dt", 1e-4},
            {"ratio_band", {1.5, 3.0}}};
  }
  if (id == "replicator_limit") {
    return {{"lower", -5.0},
            {"upper", 5.0},
            {"cells", 1000},
            {"alpha", 1.0},
            {"sigma", 1.0},
            {"bump_mean", 0.0},
            {"bump_std", 1.0},
            {"fitness_center", 0.5},
            {"nus", {0.1, 0.05, 0.025}},
            {"ratio_band", {1.5, 3.0}}};
  }
  if (id == "penalization_rate") {
    return {{"h0", 0.5},
            {"h1", 0.0},
            {"betas", {1.0, 4.0, 16.0, 64.0, 256.0}},
            {"mc_samples", 1000000},
            {"rate_slack", 1.05},
            {"z_max", 3.0}};
  }
  if (id == "cartpole") {
    return {{"population", 20},
            {"steps_per_generation", 300},
            {"reward_cap", 100},
            {"windows", {5, 1}},
            {"sigma", 0.1},
            {"generations", 40},
            {"gamma", 0.99},
            {"p_start", 1.0},
            {"p_end", 0.01},
            {"buffer_capacity", 10000},
            {"warmup", 500},
            {"target_sync", 200},
            {"hidden", 64},
            {"truncation_fraction", 0.2},
            {"threads", 1},
            {"threshold", 95.0},
            {"min_passing_seeds", 3}};
  }
  throw ConfigError("experiment", "unknown experiment '" + id + "'");
}

json resolve_config(const json& raw) {
  if (!raw.is_object()) throw ConfigError("<root>", "config must be an object");
  if (!raw.contains("experiment")) throw ConfigError("experiment", "missing");
  if (!raw.at("experiment").is_string()) throw ConfigError("experiment", "expected a string");
  const std::string id = raw.at("experiment").get<std::string>();
  const json defaults = default_block(id);

  for (const auto& [k, v] : raw.items()) {
    if (k != "experiment" && k != "seeds" && k != "output" && k != id) {
      throw ConfigError(k, "unknown key");
    }
  }

  json out;
  out["experiment"] = id;
  out["seeds"] = json::array({1, 2, 3});
  if (raw.contains("seeds")) {
    const json& s = raw.at("seeds");
    if (!s.is_array() || s.empty()) throw ConfigError("seeds", "expected a non-empty list");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_number_unsigned()) {
        throw ConfigError("seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
      }
    }
    out["seeds"] = s;
  }
  out["output"] = "out/" + id;
  if (raw.contains("output")) {
    if (!raw.at("output").is_string()) throw ConfigError("output", "expected a string");
    out["output"] = raw.at("output");
  }

  json block = defaults;
  if (raw.contains(id)) {
    const json& given = raw.at(id);
    if (!given.is_object()) throw ConfigError(id, "expected an object");
    for (const auto& [k, v] : given.items()) {
      if (!defaults.contains(k)) throw ConfigError(id + "." + k, "unknown key");
      check_value(id + "." + k, defaults.at(k), v);
      block[k] = v;
    }
  }
  check_block(id, block);
  out[id] = block;
  return out;
}

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config '" + path.string() + "'");
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("parse error: ") + e.what());
  }
}

}  // namespace pbtdyn::experiments

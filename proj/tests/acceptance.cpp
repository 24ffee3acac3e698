// Acceptance runner: one PASS/FAIL line per criterion.
//
//   pbtdyn_acceptance [--configs DIR] [--out DIR] [--unit-tests BIN] [criterion ...]
//
// With no criteria listed every one runs. Exit status is 0 only if all pass.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pbtdyn/experiments.hpp"
#include "pbtdyn/log.hpp"

namespace fs = std::filesystem;
using namespace pbtdyn::experiments;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::string config;  // empty: runs the unit-test binary
  std::vector<std::string> checks;
  double budget_seconds;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "quadratic PBT concentration", "ac1_quadratic_pbt.json",
       {"population_size_conserved", "concentration"}, 120},
      {2, "propagation of chaos", "ac2_quadratic_chaos.json",
       {"distance_decreasing_in_population"}, 600},
      {3, "two-time-scale reduction", "ac3_quadratic_two_time.json",
       {"distance_decreasing_in_inner_steps"}, 600},
      {4, "penalization rate", "ac4_penalization_rate.json",
       {"error_decreasing", "error_within_rate", "closed_form_matches_monte_carlo"}, 60},
      {5, "mean decay", "ac5_7_8_meanfield.json", {"mean_decay_bound", "mass_conservation"}, 60},
      {6, "replicator-mutator consistency", "ac6_replicator_limit.json",
       {"residual_first_order_in_nu"}, 60},
      {7, "mean-evolution identity", "ac5_7_8_meanfield.json",
       {"mean_evolution_first_order"}, 60},
      {8, "equilibrium relations", "ac5_7_8_meanfield.json", {"equilibrium_relations"}, 60},
      {9, "Himmelblau basin concentration", "ac9_himmelblau.json", {"basin_concentration"},
       300},
      {10, "CartPole PBT", "ac10_cartpole.json",
       {"reward_threshold_reached", "windowed_fitness_not_slower"}, 900},
      {11, "invariant suites", "", {}, 120},
  };
  return list;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", s);
  return buf;
}

bool run_criterion(const Criterion& c, const fs::path& configs, const fs::path& out,
                   const std::string& unit_tests) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;

  if (c.config.empty()) {
    if (unit_tests.empty()) {
      detail = "no unit-test binary given (--unit-tests)";
      ok = false;
    } else {
      const std::string cmd = "\"" + unit_tests + "\" --no-intro=true --minimal=true";
      const int rc = std::system(cmd.c_str());
      ok = rc == 0;
      detail = "unit tests exit status " + std::to_string(rc);
    }
  } else {
    try {
      const json cfg = resolve_config(load_config(configs / c.config));
      const Outcome o =
          run_experiment(cfg, out / ("ac" + std::to_string(c.id)), {});
      for (const auto& name : c.checks) {
        const Check* chk = o.find(name);
        if (!chk) {
          ok = false;
          detail += name + ": missing; ";
          continue;
        }
        ok = ok && chk->passed;
        detail += name + (chk->passed ? " ok" : " FAILED");
        if (!chk->detail.empty()) detail += " (" + chk->detail + ")";
        detail += "; ";
      }
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("error: ") + e.what();
    }
  }

  const double wall = since(t0);
  const bool in_budget = wall <= c.budget_seconds;
  if (!in_budget) detail += "over budget; ";
  const bool passed = ok && in_budget;
  std::cout << (passed ? "PASS" : "FAIL") << "  AC" << c.id << " " << c.title << "  ["
            << seconds(wall) << " / " << seconds(c.budget_seconds) << "]  " << detail
            << std::endl;
  return passed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pbtdyn acceptance criteria"};
  std::string configs = PBTDYN_CONFIG_DIR;
  std::string out = "acceptance_out";
  std::string unit_tests;
  std::vector<int> wanted;
  app.add_option("--configs", configs, "directory holding the ac*.json configs");
  app.add_option("--out", out, "output directory");
  app.add_option("--unit-tests", unit_tests, "unit-test binary for criterion 11");
  app.add_option("criteria", wanted, "criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  pbtdyn::set_warnings_enabled(false);
  int failed = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) {
      continue;
    }
    ++ran;
    if (!run_criterion(c, configs, out, unit_tests)) ++failed;
  }
  if (ran == 0) {
    std::cerr << "no such criterion\n";
    return 2;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}

#include <algorithm>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pbtdyn/cartpole.hpp"
#include "pbtdyn/driver.hpp"
#include "pbtdyn/effective_fitness.hpp"
#include "pbtdyn/evolution.hpp"
#include "pbtdyn/experiments.hpp"
#include "pbtdyn/meanfield.hpp"
#include "pbtdyn/metrics.hpp"

namespace py = pybind11;
using namespace pbtdyn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Vec to_vec(const Array& a) { return Vec(a.data(), a.data() + a.size()); }

py::array_t<double> to_array(const Vec& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

/// (N, d) array of h or theta.
py::array_t<double> population_matrix(const Population& pop, bool h) {
  const std::size_t n = pop.size();
  const std::size_t d = n ? (h ? pop[0].h.size() : pop[0].theta.size()) : 0;
  py::array_t<double> out({n, d});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& v = h ? pop[i].h : pop[i].theta;
    for (std::size_t k = 0; k < d; ++k) m(i, k) = v[k];
  }
  return out;
}

py::dict metrics_dict(const std::vector<MetricsRecord>& records) {
  py::list rows;
  for (const auto& r : records) {
    py::dict row;
    row["generation"] = r.generation;
    row["sim_time"] = r.sim_time;
    row["phase"] = r.phase;
    row["fitness_q10"] = r.fitness_q10;
    row["fitness_median"] = r.fitness_median;
    row["fitness_q90"] = r.fitness_q90;
    row["mean_h"] = r.mean_h;
    row["var_h"] = r.var_h;
    row["mean_theta"] = r.mean_theta;
    row["extra"] = r.extra;
    rows.append(row);
  }
  py::dict out;
  out["records"] = rows;
  return out;
}

SelectionRule make_rule(const std::string& kind, double alpha, double fraction) {
  SelectionRule rule;
  rule.kind = selection_kind_from_string(kind);
  rule.alpha = alpha;
  rule.fraction = fraction;
  return rule;
}

py::dict run_particles(bool reduced, const std::string& objective, std::size_t population,
                       int generations, long inner_steps, double dt, double tau,
                       double alpha, double sigma, const std::string& selection,
                       double fraction, const std::string& fitness_mode, std::size_t window,
                       std::uint64_t seed, unsigned threads) {
  RunConfig cfg;
  cfg.objective = objective;
  cfg.population = population;
  cfg.generations = generations;
  cfg.inner_steps = inner_steps;
  cfg.langevin.dt = dt;
  cfg.tau = tau;
  cfg.selection = make_rule(selection, alpha, fraction);
  cfg.mutation.sigma = sigma;
  cfg.fitness_mode = fitness_mode_from_string(fitness_mode);
  cfg.window = window;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.snapshot_every = 0;
  RunResult r;
  {
    py::gil_scoped_release release;
    r = reduced ? run_reduced(cfg) : run_pbt(cfg);
  }
  py::dict out = metrics_dict(r.metrics);
  out["h"] = population_matrix(r.population, true);
  out["theta"] = population_matrix(r.population, false);
  out["wall_seconds"] = r.wall_seconds;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Population-based training dynamics";
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def(
      "selection_weights",
      [](const Array& fitness, const std::string& rule, double alpha, double fraction) {
        return to_array(selection_weights(to_vec(fitness), make_rule(rule, alpha, fraction)));
      },
      py::arg("fitness"), py::arg("rule") = "softmax", py::arg("alpha") = 1.0,
      py::arg("fraction") = 0.2);

  m.def(
      "effective_fitness",
      [](const Array& h) { return quadratic_objective().effective_fitness_closed(to_vec(h)); },
      py::arg("h"), "Closed-form effective fitness of the quadratic problem.");
  m.def(
      "gibbs_fitness",
      [](const Array& h, double beta) {
        return fbar_gibbs_beta(quadratic_objective(), to_vec(h), beta);
      },
      py::arg("h"), py::arg("beta"));
  m.def(
      "fbar_monte_carlo",
      [](const Array& h, long n, std::uint64_t seed) {
        Stream rng(seed);
        const auto e = fbar_monte_carlo(quadratic_objective(), to_vec(h), n, rng);
        return py::make_tuple(e.value, e.std_error);
      },
      py::arg("h"), py::arg("n"), py::arg("seed") = 1);

  m.def(
      "run_pbt",
      [](const std::string& objective, std::size_t population, int generations,
         long inner_steps, double dt, double tau, double alpha, double sigma,
         const std::string& selection, double fraction, const std::string& fitness_mode,
         std::size_t window, std::uint64_t seed, unsigned threads) {
        return run_particles(false, objective, population, generations, inner_steps, dt, tau,
                             alpha, sigma, selection, fraction, fitness_mode, window, seed,
                             threads);
      },
      py::arg("objective") = "quadratic", py::arg("population") = 100,
      py::arg("generations") = 100, py::arg("inner_steps") = 50, py::arg("dt") = 0.01,
      py::arg("tau") = 1.0, py::arg("alpha") = 100.0, py::arg("sigma") = 0.1,
      py::arg("selection") = "softmax", py::arg("fraction") = 0.2,
      py::arg("fitness_mode") = "instantaneous", py::arg("window") = 1,
      py::arg("seed") = 1, py::arg("threads") = 1);
  m.def(
      "run_reduced",
      [](std::size_t population, int generations, double alpha, double sigma,
         const std::string& fitness_mode, std::uint64_t seed) {
        return run_particles(true, "quadratic", population, generations, 50, 0.01, 1.0, alpha,
                             sigma, "softmax", 0.2, fitness_mode, 1, seed, 1);
      },
      py::arg("population") = 100, py::arg("generations") = 100, py::arg("alpha") = 100.0,
      py::arg("sigma") = 0.1, py::arg("fitness_mode") = "equilibrium_sample",
      py::arg("seed") = 1);

  m.def(
      "bl_distance",
      [](const Array& a, const Array& b, std::size_t dim) {
        return bl_distance(EmpiricalMeasure(to_vec(a), dim), EmpiricalMeasure(to_vec(b), dim));
      },
      py::arg("a"), py::arg("b"), py::arg("dim") = 1);
  m.def(
      "w1_1d",
      [](const Array& a, const Array& b) {
        return w1_sorted_1d(EmpiricalMeasure(to_vec(a), 1), EmpiricalMeasure(to_vec(b), 1));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "meanfield_step",
      [](const Array& masses, double lower, double upper, const Array& fbar, double alpha,
         double sigma, double dt, const std::string& scheme) {
        DensityGrid g = DensityGrid::line(lower, upper, static_cast<std::size_t>(masses.size()));
        g.masses() = to_vec(masses);
        PdeConfig cfg;
        cfg.alpha = alpha;
        cfg.sigma = sigma;
        cfg.dt = dt;
        if (scheme == "replicator_mutator") {
          cfg.scheme = PdeScheme::replicator_mutator;
        } else if (scheme != "selection_mutation") {
          throw Error("unknown scheme '" + scheme + "'");
        }
        const Vec f = to_vec(fbar);
        return to_array(step(g, cfg, f).masses());
      },
      py::arg("masses"), py::arg("lower"), py::arg("upper"), py::arg("fbar"),
      py::arg("alpha"), py::arg("sigma"), py::arg("dt"),
      py::arg("scheme") = "selection_mutation",
      "One step of the density dynamics on a 1D grid of cell masses.");

  m.def(
      "cartpole_step",
      [](std::array<double, 4> s, int action) {
        const auto r = cartpole::env_step({s[0], s[1], s[2], s[3]}, action);
        return py::make_tuple(
            std::array<double, 4>{r.state.x, r.state.x_dot, r.state.phi, r.state.phi_dot},
            r.reward, r.done);
      },
      py::arg("state"), py::arg("action"));
  m.def(
      "run_cartpole",
      [](std::size_t population, int generations, int steps, std::size_t window,
         int reward_cap, std::uint64_t seed) {
        cartpole::CartPoleConfig cfg;
        cfg.population = population;
        cfg.generations = generations;
        cfg.steps_per_generation = steps;
        cfg.window = window;
        cfg.reward_cap = reward_cap;
        cfg.seed = seed;
        cartpole::CartPoleResult r;
        {
          py::gil_scoped_release release;
          r = cartpole::run_cartpole_pbt(cfg);
        }
        py::list top5, mean;
        for (const auto& rec : r.records) {
          top5.append(rec.top5_mean_reward);
          mean.append(rec.pop_mean_reward);
        }
        py::dict out;
        out["top5_mean_reward"] = top5;
        out["pop_mean_reward"] = mean;
        out["final_agents"] = r.final_agents;
        return out;
      },
      py::arg("population") = 20, py::arg("generations") = 40, py::arg("steps") = 300,
      py::arg("window") = 5, py::arg("reward_cap") = 100, py::arg("seed") = 1);

  // Config documents travel as JSON text; the Python wrapper handles dicts.
  m.def("resolve_config", [](const std::string& text) {
    return experiments::resolve_config(experiments::json::parse(text)).dump();
  });
  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& out_dir) {
        const auto cfg = experiments::resolve_config(experiments::json::parse(text));
        experiments::Outcome o;
        {
          py::gil_scoped_release release;
          o = experiments::run_experiment(cfg, out_dir);
        }
        py::list checks;
        for (const auto& c : o.checks) checks.append(py::make_tuple(c.name, c.passed, c.detail));
        return py::make_tuple(o.passed(), checks, o.results.dump());
      },
      py::arg("config"), py::arg("out_dir"));
  m.def("experiment_ids", &experiments::experiment_ids);
  m.attr("__version__") = "0.1.0";
}

#include "pbtdyn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <sstream>

#include "pbtdyn/cartpole.hpp"
#include "pbtdyn/driver.hpp"
#include "pbtdyn/effective_fitness.hpp"
#include "pbtdyn/io.hpp"
#include "pbtdyn/meanfield.hpp"
#include "pbtdyn/metrics.hpp"
#include "pbtdyn/numeric.hpp"

namespace pbtdyn::experiments {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) { return format_number(x); }

std::string seed_file(const std::string& stem, std::uint64_t seed, const char* ext = ".csv") {
  return stem + "_seed" + std::to_string(seed) + ext;
}

Vec pair_of(const json& v) { return {v[0].get<double>(), v[1].get<double>()}; }

RunConfig particle_config(const json& b, const std::string& objective, std::size_t population,
                          std::uint64_t seed) {
  const ObjectiveSpec obj = objective_by_name(objective);
  RunConfig cfg;
  cfg.objective = objective;
  cfg.population = population;
  cfg.generations = b.at("generations").get<int>();
  cfg.inner_steps = b.at("inner_steps").get<long>();
  cfg.langevin.dt = b.at("dt").get<double>();
  cfg.tau = b.at("tau").get<double>();
  cfg.mutation.sigma = b.at("sigma").get<double>();
  const auto kind = selection_kind_from_string(b.at("selection").get<std::string>());
  cfg.selection.kind = kind;
  cfg.selection.alpha = b.at("alpha").get<double>();
  cfg.selection.fraction = b.at("truncation_fraction").get<double>();
  cfg.fitness_mode = fitness_mode_from_string(b.at("fitness_mode").get<std::string>());
  cfg.window = b.at("window").get<std::size_t>();
  cfg.snapshot_every = b.at("snapshot_every").get<int>();
  cfg.threads = b.at("threads").get<unsigned>();
  cfg.seed = seed;
  const Vec t = pair_of(b.at("init_theta"));
  const Vec h = pair_of(b.at("init_h"));
  cfg.init.theta_lower.assign(obj.theta_dim, t[0]);
  cfg.init.theta_upper.assign(obj.theta_dim, t[1]);
  cfg.init.h_lower.assign(obj.h_dim, h[0]);
  cfg.init.h_upper.assign(obj.h_dim, h[1]);
  if (!b.at("h_box").is_null()) {
    const Vec box = pair_of(b.at("h_box"));
    cfg.mutation.box = SearchBox::cube(obj.h_dim, box[0], box[1]);
  }
  return cfg;
}

EmpiricalMeasure h_marginal(const Population& pop, std::size_t axis, std::size_t n,
                            std::uint64_t seed) {
  return EmpiricalMeasure(h_column(pop, axis), 1).subsample(n, seed);
}

bool strictly_decreasing(const Vec& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

std::string join(const Vec& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

double median(Vec v) { return quantile(std::move(v), 0.5); }

bool population_conserved(const RunResult& r, std::size_t n) {
  if (r.population.size() != n) return false;
  for (const auto& s : r.snapshots) {
    if (s.agents.size() != n) return false;
  }
  return true;
}

/// Distinct-pair BL distances between per-seed marginals.
Vec pairwise_bl(const std::vector<EmpiricalMeasure>& m) {
  Vec out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) out.push_back(bl_distance(m[i], m[j]));
  }
  return out;
}

}  // namespace

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  const auto n = static_cast<double>(values.size());
  r.mean = pairwise_sum(values) / n;
  if (values.size() > 1) {
    double s = 0.0;
    for (double v : values) s += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(s / (n - 1.0));
  }
  return r;
}

BasinFractions himmelblau_basins(const Population& pop, double radius) {
  const auto& minima = himmelblau_minima();
  std::vector<std::size_t> counts(minima.size(), 0);
  std::size_t near = 0;
  for (const auto& a : pop) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t which = 0;
    for (std::size_t k = 0; k < minima.size(); ++k) {
      const double d = std::hypot(a.theta[0] - minima[k][0], a.theta[1] - minima[k][1]);
      if (d < best) {
        best = d;
        which = k;
      }
    }
    if (best <= radius) {
      ++near;
      ++counts[which];
    }
  }
  BasinFractions r;
  if (pop.empty()) return r;
  const auto n = static_cast<double>(pop.size());
  r.near_any = static_cast<double>(near) / n;
  const auto it = std::max_element(counts.begin(), counts.end());
  r.best_index = static_cast<int>(it - counts.begin());
  r.best_single = static_cast<double>(*it) / n;
  return r;
}

Outcome run_quadratic_pbt(const json& b, const std::vector<std::uint64_t>& seeds,
                          const fs::path& out) {
  Outcome o;
  o.experiment = "quadratic_pbt";
  const auto n = b.at("population").get<std::size_t>();
  bool conserved = true;
  Vec jump_fractions;
  json per_seed = json::array();
  std::vector<bool> concentrated;
  for (auto seed : seeds) {
    const RunResult r = run_pbt(particle_config(b, "quadratic", n, seed));
    write_metrics_csv(out / seed_file("metrics", seed), r.metrics);
    o.files.push_back(seed_file("metrics", seed));
    if (!r.snapshots.empty()) {
      write_snapshots_csv(out / seed_file("snapshots", seed), r.snapshots);
      o.files.push_back(seed_file("snapshots", seed));
    }
    conserved = conserved && population_conserved(r, n);

    // A generation "jumps up" when the post-jump median beats the trained one.
    std::size_t up = 0, total = 0;
    for (std::size_t i = 1; i + 1 < r.metrics.size(); i += 2) {
      ++total;
      if (r.metrics[i + 1].fitness_median > r.metrics[i].fitness_median) ++up;
    }
    const double frac = total ? static_cast<double>(up) / static_cast<double>(total) : 1.0;
    jump_fractions.push_back(frac);

    const Vec h0 = h_column(r.population, 0), h1 = h_column(r.population, 1);
    const double m0 = pairwise_sum(h0) / static_cast<double>(n);
    const double m1 = pairwise_sum(h1) / static_cast<double>(n);
    // The noise level only enters through h1^2, so report |h1| as well.
    Vec abs_h1 = h1;
    for (auto& x : abs_h1) x = std::abs(x);
    const double m1_abs = pairwise_sum(abs_h1) / static_cast<double>(n);
    bool ok = true;
    if (!b.at("max_abs_mean_h0").is_null()) {
      ok = ok && std::abs(m0) <= b.at("max_abs_mean_h0").get<double>();
    }
    if (!b.at("max_mean_h1").is_null()) ok = ok && m1 <= b.at("max_mean_h1").get<double>();
    concentrated.push_back(ok);
    per_seed.push_back({{"seed", seed},
                        {"mean_h0", m0},
                        {"mean_h1", m1},
                        {"mean_abs_h1", m1_abs},
                        {"final_fitness_median", r.metrics.back().fitness_median},
                        {"jump_up_fraction", frac},
                        {"wall_seconds", r.wall_seconds}});
  }
  o.results["seeds"] = per_seed;
  o.checks.push_back({"population_size_conserved", conserved, ""});
  const double min_jump = b.at("min_jump_up_fraction").get<double>();
  o.checks.push_back({"fitness_jumps_at_generation_boundaries",
                      std::all_of(jump_fractions.begin(), jump_fractions.end(),
                                  [&](double f) { return f >= min_jump; }),
                      "up fractions: " + join(jump_fractions)});
  if (!b.at("max_abs_mean_h0").is_null() || !b.at("max_mean_h1").is_null()) {
    std::string detail;
    for (const auto& s : per_seed) {
      detail += "seed " + s["seed"].dump() + ": mean h0 " + fmt(s["mean_h0"]) + ", mean h1 " +
                fmt(s["mean_h1"]) +
                ", mean |h1| " + fmt(s["mean_abs_h1"]) + "; ";
    }
    o.checks.push_back({"concentration",
                        std::all_of(concentrated.begin(), concentrated.end(),
                                    [](bool x) { return x; }),
                        detail});
  }
  return o;
}

Outcome run_quadratic_chaos(const json& b, const std::vector<std::uint64_t>& seeds,
                            const fs::path& out) {
  Outcome o;
  o.experiment = "quadratic_chaos";
  if (seeds.size() < 2) throw Error("quadratic_chaos needs at least two seeds");
  const auto sub = b.at("subsample").get<std::size_t>();
  const auto axis = b.at("marginal").get<std::size_t>();
  Vec means;
  std::vector<std::vector<double>> rows;
  json table = json::array();
  for (const auto& pj : b.at("populations")) {
    const auto n = pj.get<std::size_t>();
    std::vector<EmpiricalMeasure> marginals;
    for (auto seed : seeds) {
      const RunResult r = run_pbt(particle_config(b, "quadratic", n, seed));
      marginals.push_back(h_marginal(r.population, axis, std::min(sub, n), seed));
    }
    const Vec d = pairwise_bl(marginals);
    const MeanStd ms = mean_std(d);
    means.push_back(ms.mean);
    rows.push_back({static_cast<double>(n), ms.mean, ms.std, static_cast<double>(d.size())});
    table.push_back({{"population", n}, {"mean_bl", ms.mean}, {"std_bl", ms.std}});
  }
  write_table_csv(out / "distances.csv", {"population", "mean_bl", "std_bl", "pairs"}, rows);
  o.files.push_back("distances.csv");
  o.results["distances"] = table;
  o.checks.push_back({"distance_decreasing_in_population", strictly_decreasing(means),
                      "mean BL: " + join(means)});
  return o;
}

Outcome run_quadratic_two_time(const json& b, const std::vector<std::uint64_t>& seeds,
                               const fs::path& out) {
  Outcome o;
  o.experiment = "quadratic_two_time";
  const auto n = b.at("population").get<std::size_t>();
  const auto sub = b.at("subsample").get<std::size_t>();
  const auto axis = b.at("marginal").get<std::size_t>();
  const auto steps = b.at("inner_steps_list").get<std::vector<long>>();

  std::vector<Vec> dist(steps.size());
  double reduced_wall = 0.0, pbt_wall = 0.0;
  for (auto seed : seeds) {
    RunConfig rc = particle_config(b, "quadratic", n, seed);
    rc.fitness_mode = fitness_mode_from_string(b.at("reduced_mode").get<std::string>());
    const RunResult reduced = run_reduced(rc);
    reduced_wall += reduced.wall_seconds;
    write_metrics_csv(out / seed_file("reduced_metrics", seed), reduced.metrics);
    o.files.push_back(seed_file("reduced_metrics", seed));
    const auto ref = h_marginal(reduced.population, axis, std::min(sub, n), seed);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      RunConfig pc = particle_config(b, "quadratic", n, seed);
      pc.inner_steps = steps[k];
      const RunResult full = run_pbt(pc);
      if (steps[k] >= 20) pbt_wall += full.wall_seconds;
      const auto m = h_marginal(full.population, axis, std::min(sub, n), seed ^ 0x9E37ULL);
      dist[k].push_back(bl_distance(ref, m));
    }
  }
  Vec means;
  std::vector<std::vector<double>> rows;
  json table = json::array();
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const MeanStd ms = mean_std(dist[k]);
    means.push_back(ms.mean);
    rows.push_back({static_cast<double>(steps[k]), ms.mean, ms.std});
    table.push_back({{"inner_steps", steps[k]}, {"mean_bl", ms.mean}, {"std_bl", ms.std}});
  }
  write_table_csv(out / "two_time.csv", {"inner_steps", "mean_bl", "std_bl"}, rows);
  o.files.push_back("two_time.csv");
  o.results["distances"] = table;
  o.results["reduced_wall_seconds"] = reduced_wall;
  o.results["pbt_wall_seconds"] = pbt_wall;
  o.checks.push_back({"distance_decreasing_in_inner_steps", strictly_decreasing(means),
                      "mean BL: " + join(means)});
  // Each reduced run is compared with the runs at inner_steps >= 20.
  std::size_t slow_runs = 0;
  for (long s : steps) slow_runs += s >= 20 ? 1 : 0;
  if (slow_runs > 0) {
    const double per_pbt = pbt_wall / static_cast<double>(slow_runs);
    o.checks.push_back({"reduced_dynamics_faster", reduced_wall < per_pbt,
                        "reduced " + fmt(reduced_wall) + " s vs " + fmt(per_pbt) + " s"});
  }
  return o;
}

Outcome run_himmelblau(const json& b, const std::vector<std::uint64_t>& seeds,
                       const fs::path& out) {
  Outcome o;
  o.experiment = "himmelblau";
  const auto n = b.at("population").get<std::size_t>();
  const double radius = b.at("radius").get<double>();
  const double min_near = b.at("min_near_fraction").get<double>();
  const double min_basin = b.at("min_basin_fraction").get<double>();
  std::size_t passing = 0;
  std::vector<std::vector<double>> rows;
  std::string detail;
  for (auto seed : seeds) {
    const RunResult r = run_pbt(particle_config(b, "himmelblau", n, seed));
    write_metrics_csv(out / seed_file("metrics", seed), r.metrics);
    write_snapshots_csv(out / seed_file("final_population", seed),
                        {Snapshot{r.metrics.back().generation, r.population}});
    o.files.push_back(seed_file("metrics", seed));
    o.files.push_back(seed_file("final_population", seed));
    const BasinFractions f = himmelblau_basins(r.population, radius);
    const bool ok = f.near_any >= min_near && f.best_single >= min_basin;
    passing += ok ? 1 : 0;
    rows.push_back({static_cast<double>(seed), f.near_any, f.best_single,
                    static_cast<double>(f.best_index)});
    detail += "seed " + std::to_string(seed) + ": near " + fmt(f.near_any) + ", basin " +
              fmt(f.best_single) + "; ";
  }
  write_table_csv(out / "basins.csv", {"seed", "near_any", "best_single", "best_minimum"},
                  rows);
  o.files.push_back("basins.csv");
  o.results["passing_seeds"] = passing;
  o.checks.push_back({"basin_concentration",
                      passing >= b.at("min_passing_seeds").get<std::size_t>(), detail});
  return o;
}

Outcome run_meanfield_convergence(const json& b, const fs::path& out) {
  Outcome o;
  o.experiment = "meanfield_convergence";
  DensityGrid grid = DensityGrid::line(b.at("lower").get<double>(), b.at("upper").get<double>(),
                                       b.at("cells").get<std::size_t>());
  grid.fill_uniform();
  const double target = b.at("target").get<double>();
  PdeConfig cfg;
  cfg.dt = b.at("dt").get<double>();
  cfg.sigma = b.at("sigma").get<double>();
  cfg.alpha = b.at("alpha").get<double>();
  cfg.fbar = [target](ConstSpan h) { return -(h[0] - target) * (h[0] - target); };
  const Vec f = sample_field(grid, cfg.fbar);
  const double dx = grid.cell_width(0);

  // Mean decay towards the maximiser.
  const auto err2 = [&](const DensityGrid& g) {
    const double m = moments(g).mean[0] - target;
    return m * m;
  };
  const double e0 = err2(grid);
  const double slack = b.at("slack").get<double>();
  const double mass_tol = b.at("mass_tolerance").get<double>();
  const long decay_steps = std::lround(b.at("t_max").get<double>() / cfg.dt);
  const long total_steps = std::max(decay_steps, b.at("equilibrium_steps").get<long>());
  bool bound_ok = true;
  double worst_margin = -std::numeric_limits<double>::infinity();
  double max_drift = 0.0;
  std::vector<std::vector<double>> rows;
  DensityGrid rho = grid;
  for (long k = 0; k <= total_steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    if (k <= decay_steps) {
      const double e = err2(rho);
      const double bound = std::exp(-t) * e0 + slack;
      bound_ok = bound_ok && e <= bound;
      worst_margin = std::max(worst_margin, e - bound);
      rows.push_back({t, e, bound, rho.total_mass()});
    }
    if (k == total_steps) break;
    const double before = rho.total_mass();
    rho = step_averaged(rho, cfg, f);
    max_drift = std::max(max_drift, std::abs(rho.total_mass() - before));
  }
  write_table_csv(out / "mean_decay.csv", {"t", "mean_error_sq", "bound", "mass"}, rows);
  o.files.push_back("mean_decay.csv");
  o.checks.push_back({"mean_decay_bound", bound_ok,
                      "largest (error - bound) " + fmt(worst_margin)});
  o.checks.push_back({"mass_conservation", max_drift <= mass_tol,
                      "max drift per step " + fmt(max_drift)});

  const double edge = boundary_mass(rho);
  o.results["boundary_mass"] = edge;
  o.checks.push_back({"boundary_mass_negligible", edge < 1e-8, "boundary mass " + fmt(edge)});

  const EquilibriumResidual res = equilibrium_residual(rho, cfg);
  const double tol = b.at("residual_tolerance_cells").get<double>() * dx;
  write_table_csv(out / "equilibrium.csv", {"steps", "r_mean", "r_energy", "tolerance"},
                  {{static_cast<double>(total_steps), res.r_mean, res.r_energy, tol}});
  o.files.push_back("equilibrium.csv");
  o.results["equilibrium"] = {{"r_mean", res.r_mean}, {"r_energy", res.r_energy},
                              {"tolerance", tol}};
  o.checks.push_back({"equilibrium_relations", res.r_mean <= tol && res.r_energy <= tol,
                      "r_mean " + fmt(res.r_mean) + ", r_energy " + fmt(res.r_energy) +
                          ", tolerance " + fmt(tol)});

  // Finite-difference dm/dt at t = 0 against m(G[rho]) - m(rho). The
  // trajectory is resolved with a much finer step so the forward difference
  // is the only error left.
  const double m0 = moments(grid).mean[0];
  const double predicted = moments(apply_selection(grid, f, cfg.alpha)).mean[0] - m0;
  const double ref_dt = b.at("fd_reference_dt").get<double>();
  Vec errors;
  std::vector<std::vector<double>> fd_rows;
  for (const auto& dj : b.at("fd_dts")) {
    const double h = dj.get<double>();
    const long sub = std::max(1L, std::lround(h / ref_dt));
    PdeConfig fine = cfg;
    fine.dt = h / static_cast<double>(sub);
    DensityGrid g = grid;
    for (long k = 0; k < sub; ++k) g = step_averaged(g, fine, f);
    const double fd = (moments(g).mean[0] - m0) / h;
    errors.push_back(std::abs(fd - predicted));
    fd_rows.push_back({h, fd, predicted, errors.back()});
  }
  write_table_csv(out / "mean_evolution.csv", {"dt", "fd_derivative", "predicted", "error"},
                  fd_rows);
  o.files.push_back("mean_evolution.csv");
  const Vec band = pair_of(b.at("ratio_band"));
  bool ratios_ok = errors.size() >= 2;
  Vec ratios;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    ratios.push_back(errors[i - 1] / errors[i]);
    ratios_ok = ratios_ok && ratios.back() >= band[0] && ratios.back() <= band[1];
  }
  o.results["mean_evolution_errors"] = errors;
  o.checks.push_back({"mean_evolution_first_order", ratios_ok,
                      "errors " + join(errors) + "; ratios " + join(ratios)});
  return o;
}

Outcome run_replicator_limit(const json& b, const fs::path& out) {
  Outcome o;
  o.experiment = "replicator_limit";
  DensityGrid grid = DensityGrid::line(b.at("lower").get<double>(), b.at("upper").get<double>(),
                                       b.at("cells").get<std::size_t>());
  const double mu = b.at("bump_mean").get<double>();
  const double sd = b.at("bump_std").get<double>();
  grid.fill_from([&](ConstSpan h) {
    const double z = (h[0] - mu) / sd;
    return std::exp(-0.5 * z * z);
  });
  grid.normalize();
  const double c = b.at("fitness_center").get<double>();
  PdeConfig cfg;
  cfg.sigma = b.at("sigma").get<double>();
  cfg.alpha = b.at("alpha").get<double>();
  cfg.fbar = [c](ConstSpan h) { return -(h[0] - c) * (h[0] - c); };

  Vec residuals;
  std::vector<std::vector<double>> rows;
  for (const auto& nj : b.at("nus")) {
    const double nu = nj.get<double>();
    residuals.push_back(replicator_consistency(grid, cfg, nu));
    rows.push_back({nu, residuals.back()});
  }
  write_table_csv(out / "replicator_consistency.csv", {"nu", "residual"}, rows);
  o.files.push_back("replicator_consistency.csv");
  const Vec band = pair_of(b.at("ratio_band"));
  bool ok = residuals.size() >= 2;
  Vec ratios;
  for (std::size_t i = 1; i < residuals.size(); ++i) {
    ratios.push_back(residuals[i - 1] / residuals[i]);
    ok = ok && ratios.back() >= band[0] && ratios.back() <= band[1];
  }
  o.results["residuals"] = residuals;
  o.checks.push_back({"residual_first_order_in_nu", ok,
                      "residuals " + join(residuals) + "; ratios " + join(ratios)});
  return o;
}

Outcome run_penalization_rate(const json& b, const std::vector<std::uint64_t>& seeds,
                              const fs::path& out) {
  Outcome o;
  o.experiment = "penalization_rate";
  const ObjectiveSpec obj = quadratic_objective();
  const Vec h{b.at("h0").get<double>(), b.at("h1").get<double>()};
  const Vec theta_star = obj.loss_argmin(h);
  const double f_star = obj.fitness(theta_star, h);
  const auto samples = b.at("mc_samples").get<long>();
  const double slack = b.at("rate_slack").get<double>();
  const double z_max = b.at("z_max").get<double>();
  const std::uint64_t seed = seeds.empty() ? 1 : seeds.front();

  Vec errs, zs;
  bool rate_ok = true;
  std::vector<std::vector<double>> rows;
  const auto betas = b.at("betas").get<std::vector<double>>();
  for (std::size_t k = 0; k < betas.size(); ++k) {
    const double beta = betas[k];
    const double closed = fbar_gibbs_beta(obj, h, beta);
    const double err = std::abs(closed - f_star);
    errs.push_back(err);
    const double allowed = errs.front() / std::sqrt(beta / betas.front()) * slack;
    rate_ok = rate_ok && err <= allowed;
    Stream rng(stream_key(seed, k, 0, 0x71));
    const auto mc = fbar_gibbs_beta_monte_carlo(obj, h, beta, samples, rng);
    const double z = std::abs(mc.value - closed) / mc.std_error;
    zs.push_back(z);
    rows.push_back({beta, closed, err, allowed, mc.value, mc.std_error, z});
  }
  write_table_csv(out / seed_file("penalization", seed),
                  {"beta", "fbar_closed", "error", "rate_bound", "fbar_mc", "mc_std_error", "z"},
                  rows);
  o.files.push_back(seed_file("penalization", seed));
  o.results["errors"] = errs;
  o.results["z"] = zs;
  o.checks.push_back({"error_decreasing", strictly_decreasing(errs), "errors " + join(errs)});
  o.checks.push_back({"error_within_rate", rate_ok, "errors " + join(errs)});
  o.checks.push_back({"closed_form_matches_monte_carlo",
                      std::all_of(zs.begin(), zs.end(), [&](double z) { return z <= z_max; }),
                      "z scores " + join(zs)});
  return o;
}

Outcome run_cartpole(const json& b, const std::vector<std::uint64_t>& seeds,
                     const fs::path& out) {
  Outcome o;
  o.experiment = "cartpole";
  const auto windows = b.at("windows").get<std::vector<std::size_t>>();
  const double threshold = b.at("threshold").get<double>();
  cartpole::CartPoleConfig base;
  base.population = b.at("population").get<std::size_t>();
  base.steps_per_generation = b.at("steps_per_generation").get<int>();
  base.reward_cap = b.at("reward_cap").get<int>();
  base.sigma = b.at("sigma").get<double>();
  base.generations = b.at("generations").get<int>();
  base.gamma = b.at("gamma").get<double>();
  base.p_start = b.at("p_start").get<double>();
  base.p_end = b.at("p_end").get<double>();
  base.buffer_capacity = b.at("buffer_capacity").get<std::size_t>();
  base.warmup = b.at("warmup").get<std::size_t>();
  base.target_sync = b.at("target_sync").get<int>();
  base.hidden = b.at("hidden").get<int>();
  base.truncation_fraction = b.at("truncation_fraction").get<double>();
  base.threads = b.at("threads").get<unsigned>();

  // Runs that never reach the threshold count as one past the last generation.
  const double never = static_cast<double>(base.generations + 1);
  std::vector<Vec> first(windows.size());
  std::vector<std::size_t> reached(windows.size(), 0);
  json per_run = json::array();
  for (std::size_t w = 0; w < windows.size(); ++w) {
    for (auto seed : seeds) {
      cartpole::CartPoleConfig cfg = base;
      cfg.window = windows[w];
      cfg.seed = seed;
      const auto r = cartpole::run_cartpole_pbt(cfg);
      const std::string stem = "cartpole_m" + std::to_string(windows[w]);
      std::vector<std::vector<double>> rows;
      for (const auto& rec : r.records) {
        rows.push_back({static_cast<double>(rec.generation), rec.top5_mean_reward,
                        rec.pop_mean_reward, rec.mean_h[0], rec.std_h[0], rec.mean_h[1],
                        rec.std_h[1], rec.mean_h[2], rec.std_h[2],
                        static_cast<double>(rec.episodes)});
      }
      write_table_csv(out / seed_file(stem, seed),
                      {"generation", "top5_mean_reward", "pop_mean_reward", "mean_lr",
                       "std_lr", "mean_p_decay", "std_p_decay", "mean_batch_size",
                       "std_batch_size", "episodes"},
                      rows);
      std::vector<std::vector<double>> agents;
      for (const auto& a : r.final_agents) agents.push_back({a.begin(), a.end()});
      write_table_csv(out / seed_file(stem + "_final_agents", seed),
                      {"id", "lr", "p_decay", "batch_size", "fitness"}, agents);
      o.files.push_back(seed_file(stem, seed));
      o.files.push_back(seed_file(stem + "_final_agents", seed));
      const int g = cartpole::first_generation_reaching(r.records, threshold);
      first[w].push_back(g < 0 ? never : static_cast<double>(g));
      reached[w] += g >= 0 ? 1 : 0;
      per_run.push_back({{"window", windows[w]},
                         {"seed", seed},
                         {"first_generation_reaching", g},
                         {"final_top5_mean_reward", r.records.back().top5_mean_reward},
                         {"wall_seconds", r.wall_seconds}});
    }
  }
  o.results["runs"] = per_run;
  const auto min_pass = b.at("min_passing_seeds").get<std::size_t>();
  o.checks.push_back({"reward_threshold_reached", reached[0] >= min_pass,
                      "window " + std::to_string(windows[0]) + ": " +
                          std::to_string(reached[0]) + " of " + std::to_string(seeds.size()) +
                          " seeds reach " + fmt(threshold)});
  if (windows.size() >= 2) {
    const double a = median(first[0]), c = median(first[1]);
    o.checks.push_back({"windowed_fitness_not_slower", a <= c,
                        "median first generation: window " + std::to_string(windows[0]) +
                            " -> " + fmt(a) + ", window " + std::to_string(windows[1]) +
                            " -> " + fmt(c)});
  }
  return o;
}

Outcome run_experiment(const json& resolved, const fs::path& out_dir,
                       const std::vector<std::uint64_t>& seed_override) {
  const auto start = Clock::now();
  const std::string id = resolved.at("experiment").get<std::string>();
  std::vector<std::uint64_t> seeds = seed_override;
  if (seeds.empty()) seeds = resolved.at("seeds").get<std::vector<std::uint64_t>>();
  const json& b = resolved.at(id);
  fs::create_directories(out_dir);

  Outcome o;
  if (id == "quadratic_pbt") {
    o = run_quadratic_pbt(b, seeds, out_dir);
  } else if (id == "quadratic_chaos") {
    o = run_quadratic_chaos(b, seeds, out_dir);
  } else if (id == "quadratic_two_time") {
    o = run_quadratic_two_time(b, seeds, out_dir);
  } else if (id == "himmelblau") {
    o = run_himmelblau(b, seeds, out_dir);
  } else if (id == "meanfield_convergence") {
    o = run_meanfield_convergence(b, out_dir);
  } else if (id == "replicator_limit") {
    o = run_replicator_limit(b, out_dir);
  } else if (id == "penalization_rate") {
    o = run_penalization_rate(b, seeds, out_dir);
  } else if (id == "cartpole") {
    o = run_cartpole(b, seeds, out_dir);
  } else {
    throw ConfigError("experiment", "unknown experiment '" + id + "'");
  }
  o.wall_seconds = elapsed(start);

  json summary;
  summary["experiment"] = id;
  summary["config"] = resolved;
  summary["seeds"] = seeds;
  summary["version"] = kVersion;
  summary["compiler"] = __VERSION__;
  summary["finished_at"] = std::time(nullptr);
  summary["wall_seconds"] = o.wall_seconds;
  summary["results"] = o.results;
  summary["files"] = o.files;
  json checks = json::array();
  for (const auto& c : o.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  summary["checks"] = checks;
  summary["passed"] = o.passed();
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  return o;
}

}  // namespace pbtdyn::experiments

#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbtdyn/random.hpp"

namespace pbtdyn {

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;
using MutSpan = std::span<double>;

/// Base error type for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One population member: network parameters plus hyperparameters.
struct Agent {
  Vec theta;
  Vec h;
  int id = 0;

  bool operator==(const Agent&) const = default;
};

using Population = std::vector<Agent>;

/// Axis-aligned box H = [lower, upper] for hyperparameters.
class SearchBox {
 public:
  SearchBox() = default;
  SearchBox(Vec lower, Vec upper);

  static SearchBox cube(std::size_t dim, double lo, double hi) {
    return SearchBox(Vec(dim, lo), Vec(dim, hi));
  }

  std::size_t dim() const { return lower_.size(); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  bool contains(ConstSpan h) const;

 private:
  Vec lower_;
  Vec upper_;
};

/// Componentwise clamp of h into the box.
Vec project(ConstSpan h, const SearchBox& box);
void project_inplace(MutSpan h, const SearchBox& box);

/// Analytic benchmark: fitness, training loss and optional closed forms.
struct ObjectiveSpec {
  std::string name;
  std::size_t theta_dim = 0;
  std::size_t h_dim = 0;

  std::function<double(ConstSpan theta, ConstSpan h)> fitness;
  std::function<double(ConstSpan theta, ConstSpan h)> loss;
  /// Writes grad_theta L(theta, h) into `grad` (size theta_dim).
  std::function<void(ConstSpan theta, ConstSpan h, MutSpan grad)> loss_grad;

  /// Draws theta from the stationary law of the training dynamics at h.
  std::function<void(ConstSpan h, Stream& rng, MutSpan theta)>
      equilibrium_sampler;
  /// log E_{mu_inf(.|h)} exp(F).
  std::function<double(ConstSpan h)> effective_fitness_closed;

  /// Draws theta from the Gibbs law ~ exp(-beta L(., h)).
  std::function<void(ConstSpan h, double beta, Stream& rng, MutSpan theta)>
      gibbs_sampler;
  /// log E_{Gibbs_beta} exp(F), when available in closed form.
  std::function<double(ConstSpan h, double beta)> gibbs_fitness_closed;
  /// inf_theta L(theta, h) and the minimiser theta*(h).
  std::function<double(ConstSpan h)> loss_min;
  std::function<Vec(ConstSpan h)> loss_argmin;

  /// Selection acts on sign * F. Logs always report F itself.
  double selection_sign = 1.0;
  /// Index of the hyperparameter used as the Langevin diffusion coefficient.
  std::optional<std::size_t> noise_index;

  bool has_equilibrium() const { return static_cast<bool>(equilibrium_sampler); }
  bool has_closed_form() const {
    return static_cast<bool>(effective_fitness_closed);
  }
};

/// Quadratic toy problem: F = 1.2 - |theta|^2, L biased by h0, noise h1.
///
/// The diffusion coefficient enters only through h1^2, so a negative h1 is
/// treated as its magnitude. Non-finite hyperparameters are rejected.
ObjectiveSpec quadratic_objective();

/// Himmelblau problem with the h0-biased loss; selection uses -F.
ObjectiveSpec himmelblau_objective();

/// Looks up "quadratic" or "himmelblau".
ObjectiveSpec objective_by_name(const std::string& name);

/// The four global minimisers of the Himmelblau function.
const std::vector<std::array<double, 2>>& himmelblau_minima();

struct MetricsRecord {
  int generation = 0;
  double sim_time = 0.0;
  /// "init", "train" (after the inner block) or "jump" (after selection).
  std::string phase = "train";
  double fitness_q10 = 0.0;
  double fitness_median = 0.0;
  double fitness_q90 = 0.0;
  Vec mean_h;
  Vec var_h;
  Vec mean_theta;
  std::map<std::string, double> extra;
};

/// Linear-interpolated empirical quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Population statistics for one record.
MetricsRecord summarize(const Population& pop, std::span<const double> fitness,
                        int generation, double sim_time, std::string phase);

}  // namespace pbtdyn

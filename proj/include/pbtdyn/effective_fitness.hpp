#pragma once

#include <deque>
#include <functional>
#include <limits>

#include "pbtdyn/core.hpp"

namespace pbtdyn {

struct EffectiveFitnessEstimate {
  enum class Method { closed, monte_carlo, time_average };

  double value = 0.0;
  double std_error = 0.0;
  Method method = Method::closed;
  /// Number of samples (monte_carlo) or window length (time_average).
  long count = 0;
};

/// Ring buffer of an agent's most recent fitness evaluations.
class FitnessHistory {
 public:
  explicit FitnessHistory(std::size_t window = 1);

  void push(double fitness, int generation);
  void clear() { entries_.clear(); }

  std::size_t window() const { return window_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  struct Entry {
    double fitness;
    int generation;
  };
  const std::deque<Entry>& entries() const { return entries_; }

 private:
  std::size_t window_;
  std::deque<Entry> entries_;
};

/// Mean over the buffered values; fewer than `window` entries are averaged
/// as they are. Throws when the buffer is empty.
double time_avg_fitness(const FitnessHistory& history);

/// log-mean-exp of F over n equilibrium samples at h, with a delta-method
/// standard error.
EffectiveFitnessEstimate fbar_monte_carlo(const ObjectiveSpec& obj, ConstSpan h,
                                          long n, Stream& rng);

/// log-mean-exp of a batch of fitness values (the estimator above, exposed for
/// callers that draw their own samples).
EffectiveFitnessEstimate log_mean_exp(std::span<const double> values);

/// Gibbs-averaged fitness log E exp(F) under exp(-beta L(., h)).
double fbar_gibbs_beta(const ObjectiveSpec& obj, ConstSpan h, double beta);

/// Monte Carlo version of fbar_gibbs_beta using the objective's Gibbs sampler.
EffectiveFitnessEstimate fbar_gibbs_beta_monte_carlo(const ObjectiveSpec& obj,
                                                     ConstSpan h, double beta,
                                                     long n, Stream& rng);

/// F(theta, h) - beta (L(theta, h) - inf L(., h)).
double penalized_fitness(const ObjectiveSpec& obj, ConstSpan theta, ConstSpan h,
                         double beta);

/// Constants of the quantitative Laplace principle.
struct LaplaceConstants {
  double c_p = 1.0;
  double p = 1.0;
  /// Fbar(h*) - inf over B(h*, r) of Fbar.
  double fbar_r = 0.0;
  double fbar_inf = 1.0;
  /// Radius bound on r; r must lie in (0, r_p].
  double r_p = std::numeric_limits<double>::infinity();
};

struct LaplaceBound {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs; }
};

/// Both sides of the quantitative Laplace bound
///   |m(G_{alpha Fbar}[rho]) - h*| <= c_p (q + Fbar_r)^{1/p}
///                                   + exp(-alpha q) int|h - h*| d rho / rho(B(h*, r))
/// for a weighted point cloud rho (points row-major, dimension `dim`).
LaplaceBound laplace_bound(std::span<const double> points,
                           std::span<const double> weights, std::size_t dim,
                           const std::function<double(ConstSpan)>& fbar,
                           ConstSpan h_star, double alpha, double r, double q,
                           const LaplaceConstants& constants);

/// Fbar(h*) - min Fbar over sample points within distance r of h*.
double fbar_r_on_samples(std::span<const double> points, std::size_t dim,
                         const std::function<double(ConstSpan)>& fbar,
                         ConstSpan h_star, double r);

}  // namespace pbtdyn

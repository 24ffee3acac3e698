#include "pbtdyn/effective_fitness.hpp"

#include <algorithm>
#include <cmath>

#include "pbtdyn/numeric.hpp"

namespace pbtdyn {

FitnessHistory::FitnessHistory(std::size_t window) : window_(window) {
  if (window_ == 0) throw Error("fitness history: window must be at least 1");
}

void FitnessHistory::push(double fitness, int generation) {
  entries_.push_back({fitness, generation});
  while (entries_.size() > window_) entries_.pop_front();
}

double time_avg_fitness(const FitnessHistory& history) {
  if (history.empty()) {
    throw Error("time_avg_fitness: agent has no fitness evaluation yet");
  }
  double s = 0.0;
  for (const auto& e : history.entries()) s += e.fitness;
  return s / static_cast<double>(history.size());
}

EffectiveFitnessEstimate log_mean_exp(std::span<const double> values) {
  if (values.empty()) throw Error("log_mean_exp: no samples");
  const double fmax = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(fmax)) throw Error("log_mean_exp: non-finite sample");
  Vec e(values.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(values[i] - fmax);
  const double n = static_cast<double>(e.size());
  const double mean = pairwise_sum(e) / n;
  Vec dev(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    dev[i] = (e[i] - mean) * (e[i] - mean);
  }
  const double var = e.size() > 1 ? pairwise_sum(dev) / (n - 1.0) : 0.0;

  EffectiveFitnessEstimate est;
  est.value = fmax + std::log(mean);
  est.std_error = std::sqrt(var) / (std::sqrt(n) * mean);
  est.method = EffectiveFitnessEstimate::Method::monte_carlo;
  est.count = static_cast<long>(e.size());
  return est;
}

EffectiveFitnessEstimate fbar_monte_carlo(const ObjectiveSpec& obj, ConstSpan h,
                                          long n, Stream& rng) {
  if (!obj.equilibrium_sampler) {
    throw Error("fbar_monte_carlo: objective '" + obj.name +
                "' has no equilibrium sampler");
  }
  if (n < 1) throw Error("fbar_monte_carlo: need at least one sample");
  Vec theta(obj.theta_dim);
  Vec values(static_cast<std::size_t>(n));
  for (auto& v : values) {
    obj.equilibrium_sampler(h, rng, theta);
    v = obj.fitness(theta, h);
  }
  return log_mean_exp(values);
}

double fbar_gibbs_beta(const ObjectiveSpec& obj, ConstSpan h, double beta) {
  if (!(beta > 0.0)) throw Error("fbar_gibbs_beta: beta must be positive");
  if (!obj.gibbs_fitness_closed) {
    throw Error("fbar_gibbs_beta: objective '" + obj.name +
                "' has no closed-form Gibbs average");
  }
  return obj.gibbs_fitness_closed(h, beta);
}

EffectiveFitnessEstimate fbar_gibbs_beta_monte_carlo(const ObjectiveSpec& obj,
                                                     ConstSpan h, double beta,
                                                     long n, Stream& rng) {
  if (!obj.gibbs_sampler) {
    throw Error("fbar_gibbs_beta: objective '" + obj.name +
                "' has no Gibbs sampler");
  }
  if (n < 1) throw Error("fbar_gibbs_beta: need at least one sample");
  Vec theta(obj.theta_dim);
  Vec values(static_cast<std::size_t>(n));
  for (auto& v : values) {
    obj.gibbs_sampler(h, beta, rng, theta);
    v = obj.fitness(theta, h);
  }
  return log_mean_exp(values);
}

double penalized_fitness(const ObjectiveSpec& obj, ConstSpan theta, ConstSpan h,
                         double beta) {
  if (!obj.loss_min) {
    throw Error("penalized_fitness: loss minimum of '" + obj.name +
                "' is unknown");
  }
  return obj.fitness(theta, h) - beta * (obj.loss(theta, h) - obj.loss_min(h));
}

namespace {

double distance(ConstSpan a, ConstSpan b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

}  // namespace

double fbar_r_on_samples(std::span<const double> points, std::size_t dim,
                         const std::function<double(ConstSpan)>& fbar,
                         ConstSpan h_star, double r) {
  const double top = fbar(h_star);
  double lowest = top;
  for (std::size_t i = 0; i * dim < points.size(); ++i) {
    const auto x = points.subspan(i * dim, dim);
    if (distance(x, h_star) <= r) lowest = std::min(lowest, fbar(x));
  }
  return top - lowest;
}

LaplaceBound laplace_bound(std::span<const double> points,
                           std::span<const double> weights, std::size_t dim,
                           const std::function<double(ConstSpan)>& fbar,
                           ConstSpan h_star, double alpha, double r, double q,
                           const LaplaceConstants& constants) {
  if (dim == 0 || points.size() % dim != 0 || h_star.size() != dim) {
    throw Error("laplace_bound: inconsistent dimensions");
  }
  const std::size_t n = points.size() / dim;
  if (n == 0) throw Error("laplace_bound: empty measure");
  if (!weights.empty() && weights.size() != n) {
    throw Error("laplace_bound: weights do not match points");
  }
  if (!(r > 0.0 && r <= constants.r_p)) {
    throw Error("laplace_bound: r must lie in (0, R_p]");
  }
  if (!(q > 0.0)) throw Error("laplace_bound: q must be positive");
  if (!(q + constants.fbar_r < constants.fbar_inf)) {
    throw Error("laplace_bound: requires q + Fbar_r < Fbar_inf");
  }

  Vec w(n), f(n), dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = points.subspan(i * dim, dim);
    w[i] = weights.empty() ? 1.0 : weights[i];
    f[i] = alpha * fbar(x);
    dist[i] = distance(x, h_star);
  }
  const double total = pairwise_sum(w);
  double ball = 0.0;
  Vec wd(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] /= total;
    wd[i] = w[i] * dist[i];
    if (dist[i] <= r) ball += w[i];
  }
  if (!(ball > 0.0)) {
    throw Error("laplace_bound: no mass in B(h*, r); bound inapplicable");
  }

  const double fmax = *std::max_element(f.begin(), f.end());
  Vec g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = w[i] * std::exp(f[i] - fmax);
  const double z = pairwise_sum(g);
  Vec mean(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      mean[k] += g[i] / z * points[i * dim + k];
    }
  }

  LaplaceBound out;
  out.lhs = distance(mean, h_star);
  out.rhs = constants.c_p * std::pow(q + constants.fbar_r, 1.0 / constants.p) +
            std::exp(-alpha * q) * pairwise_sum(wd) / ball;
  return out;
}

}  // namespace pbtdyn

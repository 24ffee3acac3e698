#include "pbtdyn/core.hpp"

#include <algorithm>
#include <cmath>

namespace pbtdyn {

SearchBox::SearchBox(Vec lower, Vec upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw Error("SearchBox: lower and upper have different dimensions");
  }
  for (std::size_t k = 0; k < lower_.size(); ++k) {
    if (!(lower_[k] < upper_[k])) {
      throw Error("SearchBox: lower must be strictly below upper in every "
                  "coordinate");
    }
  }
}

bool SearchBox::contains(ConstSpan h) const {
  if (h.size() != dim()) return false;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (h[k] < lower_[k] || h[k] > upper_[k]) return false;
  }
  return true;
}

void project_inplace(MutSpan h, const SearchBox& box) {
  if (h.size() != box.dim()) {
    throw Error("project: dimension mismatch (h has " +
                std::to_string(h.size()) + ", box has " +
                std::to_string(box.dim()) + ")");
  }
  for (std::size_t k = 0; k < h.size(); ++k) {
    h[k] = std::clamp(h[k], box.lower()[k], box.upper()[k]);
  }
}

Vec project(ConstSpan h, const SearchBox& box) {
  Vec out(h.begin(), h.end());
  project_inplace(out, box);
  return out;
}

namespace {

void require_finite_h(ConstSpan h, const char* who) {
  for (double v : h) {
    if (!std::isfinite(v)) {
      throw Error(std::string(who) + ": non-finite hyperparameter");
    }
  }
}

void require_dim(ConstSpan v, std::size_t n, const char* who) {
  if (v.size() < n) {
    throw Error(std::string(who) + ": expected dimension " + std::to_string(n) +
                ", got " + std::to_string(v.size()));
  }
}

constexpr double kQuadMax = 1.2;

}  // namespace

ObjectiveSpec quadratic_objective() {
  ObjectiveSpec obj;
  obj.name = "quadratic";
  obj.theta_dim = 2;
  obj.h_dim = 2;
  obj.noise_index = 1;
  obj.selection_sign = 1.0;

  obj.fitness = [](ConstSpan th, ConstSpan) {
    return kQuadMax - (th[0] * th[0] + th[1] * th[1]);
  };
  obj.loss = [](ConstSpan th, ConstSpan h) {
    const double a = th[0] - h[0];
    const double b = th[1] - h[0];
    return -kQuadMax + (a * a + b * b);
  };
  obj.loss_grad = [](ConstSpan th, ConstSpan h, MutSpan g) {
    g[0] = 2.0 * (th[0] - h[0]);
    g[1] = 2.0 * (th[1] - h[0]);
  };
  // Stationary law of d theta = -grad L dt + h1 dB is N((h0, h0), h1^2/4 I).
  obj.equilibrium_sampler = [](ConstSpan h, Stream& rng, MutSpan th) {
    require_dim(h, 2, "quadratic equilibrium");
    require_finite_h(h, "quadratic equilibrium");
    const double sd = 0.5 * std::abs(h[1]);
    th[0] = h[0] + sd * rng.normal();
    th[1] = h[0] + sd * rng.normal();
  };
  // E[exp(-X^2)] = exp(-m^2 / (1 + 2 s^2)) / sqrt(1 + 2 s^2) per coordinate,
  // with s^2 = h1^2 / 4.
  obj.effective_fitness_closed = [](ConstSpan h) {
    require_dim(h, 2, "quadratic effective fitness");
    require_finite_h(h, "quadratic effective fitness");
    const double c = 1.0 + 0.5 * h[1] * h[1];
    return kQuadMax - 2.0 * h[0] * h[0] / c - std::log(c);
  };
  obj.gibbs_sampler = [](ConstSpan h, double beta, Stream& rng, MutSpan th) {
    if (!(beta > 0.0)) throw Error("gibbs sampler: beta must be positive");
    const double sd = std::sqrt(0.5 / beta);
    th[0] = h[0] + sd * rng.normal();
    th[1] = h[0] + sd * rng.normal();
  };
  obj.gibbs_fitness_closed = [](ConstSpan h, double beta) {
    if (!(beta > 0.0)) throw Error("gibbs fitness: beta must be positive");
    if (std::isinf(beta)) return kQuadMax - 2.0 * h[0] * h[0];
    const double c = 1.0 + 1.0 / beta;
    return kQuadMax - 2.0 * h[0] * h[0] / c - std::log(c);
  };
  obj.loss_min = [](ConstSpan) { return -kQuadMax; };
  obj.loss_argmin = [](ConstSpan h) { return Vec{h[0], h[0]}; };
  return obj;
}

ObjectiveSpec himmelblau_objective() {
  ObjectiveSpec obj;
  obj.name = "himmelblau";
  obj.theta_dim = 2;
  obj.h_dim = 2;
  obj.noise_index = 1;
  obj.selection_sign = -1.0;

  obj.fitness = [](ConstSpan th, ConstSpan) {
    const double u = th[0] * th[0] + th[1] - 11.0;
    const double v = th[0] + th[1] * th[1] - 7.0;
    return u * u + v * v;
  };
  obj.loss = [](ConstSpan th, ConstSpan h) {
    const double a = th[0] - h[0];
    const double b = th[1] - h[0];
    const double u = a * a + th[1] - 11.0;
    const double v = th[0] + b * b - 7.0;
    return u * u + v * v;
  };
  obj.loss_grad = [](ConstSpan th, ConstSpan h, MutSpan g) {
    const double a = th[0] - h[0];
    const double b = th[1] - h[0];
    const double u = a * a + th[1] - 11.0;
    const double v = th[0] + b * b - 7.0;
    g[0] = 4.0 * a * u + 2.0 * v;
    g[1] = 2.0 * u + 4.0 * b * v;
  };
  return obj;
}

ObjectiveSpec objective_by_name(const std::string& name) {
  if (name == "quadratic") return quadratic_objective();
  if (name == "himmelblau") return himmelblau_objective();
  throw Error("unknown objective '" + name + "'");
}

const std::vector<std::array<double, 2>>& himmelblau_minima() {
  static const std::vector<std::array<double, 2>> minima = {
      {3.0, 2.0},
      {-2.805118086952745, 3.131312518250573},
      {-3.779310253377747, -3.283185991286170},
      {3.584428340330492, -1.848126526964404},
  };
  return minima;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

MetricsRecord summarize(const Population& pop, std::span<const double> fitness,
                        int generation, double sim_time, std::string phase) {
  MetricsRecord rec;
  rec.generation = generation;
  rec.sim_time = sim_time;
  rec.phase = std::move(phase);
  if (pop.empty()) return rec;

  std::vector<double> f(fitness.begin(), fitness.end());
  std::sort(f.begin(), f.end());
  rec.fitness_q10 = quantile(f, 0.1);
  rec.fitness_median = quantile(f, 0.5);
  rec.fitness_q90 = quantile(f, 0.9);

  const std::size_t dh = pop.front().h.size();
  const std::size_t dt = pop.front().theta.size();
  const double n = static_cast<double>(pop.size());
  rec.mean_h.assign(dh, 0.0);
  rec.var_h.assign(dh, 0.0);
  rec.mean_theta.assign(dt, 0.0);
  for (const auto& a : pop) {
    for (std::size_t k = 0; k < dh; ++k) rec.mean_h[k] += a.h[k];
    for (std::size_t k = 0; k < dt; ++k) rec.mean_theta[k] += a.theta[k];
  }
  for (auto& m : rec.mean_h) m /= n;
  for (auto& m : rec.mean_theta) m /= n;
  for (const auto& a : pop) {
    for (std::size_t k = 0; k < dh; ++k) {
      const double d = a.h[k] - rec.mean_h[k];
      rec.var_h[k] += d * d;
    }
  }
  for (auto& v : rec.var_h) v /= n;
  return rec;
}

}  // namespace pbtdyn

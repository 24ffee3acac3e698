#include "pbtdyn/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pbtdyn/numeric.hpp"

namespace pbtdyn {

void SelectionRule::validate() const {
  switch (kind) {
    case Kind::softmax:
    case Kind::worst_replacement:
      if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw Error("selection: alpha must be positive and finite");
      }
      break;
    case Kind::truncation:
      if (!(fraction > 0.0 && fraction <= 0.5)) {
        throw Error("selection: truncation fraction must lie in (0, 0.5]");
      }
      break;
  }
}

const char* to_string(SelectionRule::Kind kind) {
  switch (kind) {
    case SelectionRule::Kind::softmax:
      return "softmax";
    case SelectionRule::Kind::truncation:
      return "truncation";
    case SelectionRule::Kind::worst_replacement:
      return "worst_replacement";
  }
  return "?";
}

SelectionRule::Kind selection_kind_from_string(const std::string& name) {
  if (name == "softmax") return SelectionRule::Kind::softmax;
  if (name == "truncation") return SelectionRule::Kind::truncation;
  if (name == "worst_replacement") return SelectionRule::Kind::worst_replacement;
  throw Error("unknown selection rule '" + name + "'");
}

void MutationConfig::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error("mutation: sigma must be finite and non-negative");
  }
  if (scale_to_unit && !box) {
    throw Error("mutation: scale_to_unit requires a search box");
  }
}

namespace {

void check_fitness(std::span<const double> fitness) {
  if (fitness.empty()) throw Error("selection: empty population");
  for (double f : fitness) {
    if (std::isnan(f)) throw Error("selection: NaN fitness");
    if (!std::isfinite(f)) throw Error("selection: non-finite fitness");
  }
}

Vec softmax_weights(std::span<const double> fitness, double alpha) {
  const double fmax = *std::max_element(fitness.begin(), fitness.end());
  Vec w(fitness.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(alpha * (fitness[i] - fmax));
  }
  const double total = pairwise_sum(w);
  for (auto& x : w) x /= total;
  return w;
}

/// Indices sorted best-first: fitness descending, then id ascending.
std::vector<std::size_t> rank_order(std::span<const double> fitness,
                                    std::span<const int> ids) {
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (fitness[a] != fitness[b]) return fitness[a] > fitness[b];
                     const int ia = ids.empty() ? static_cast<int>(a) : ids[a];
                     const int ib = ids.empty() ? static_cast<int>(b) : ids[b];
                     return ia < ib;
                   });
  return order;
}

std::size_t sample_cdf(const Vec& cdf, Stream& rng) {
  const double u = rng.uniform() * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

Vec cumulative(const Vec& w) {
  Vec cdf(w.size());
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  return cdf;
}

}  // namespace

std::size_t truncation_count(std::size_t n, double fraction) {
  const auto k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n) - 1e-12));
  // Top and bottom sets must not overlap.
  return std::min(k, n / 2);
}

Vec selection_weights(std::span<const double> fitness,
                      const SelectionRule& rule) {
  rule.validate();
  check_fitness(fitness);
  switch (rule.kind) {
    case SelectionRule::Kind::softmax:
    case SelectionRule::Kind::worst_replacement:
      return softmax_weights(fitness, rule.alpha);
    case SelectionRule::Kind::truncation: {
      const std::size_t n = fitness.size();
      const auto k = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::ceil(rule.fraction * static_cast<double>(n) - 1e-12)));
      const auto order = rank_order(fitness, {});
      Vec w(n, 0.0);
      for (std::size_t r = 0; r < std::min(k, n); ++r) {
        w[order[r]] = 1.0 / static_cast<double>(std::min(k, n));
      }
      return w;
    }
  }
  return {};
}

Vec mutate(ConstSpan h, const MutationConfig& mut, Stream& rng) {
  Vec out(h.begin(), h.end());
  if (mut.scale_to_unit) {
    const auto& lo = mut.box->lower();
    const auto& hi = mut.box->upper();
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double half = 0.5 * (hi[k] - lo[k]);
      double u = (out[k] - lo[k]) / half - 1.0;
      u = std::clamp(u + mut.sigma * rng.normal(), -1.0, 1.0);
      out[k] = lo[k] + (u + 1.0) * half;
    }
  } else {
    for (auto& x : out) x += mut.sigma * rng.normal();
  }
  if (mut.box) project_inplace(out, *mut.box);
  return out;
}

std::vector<int> plan_jumps(std::span<const double> fitness,
                            std::span<const int> ids, const SelectionRule& rule,
                            double tau, Stream& rng) {
  rule.validate();
  check_fitness(fitness);
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error("genetic update: tau must be in [0, 1]");
  const std::size_t n = fitness.size();
  std::vector<int> source(n, -1);

  switch (rule.kind) {
    case SelectionRule::Kind::softmax: {
      if (tau == 0.0) return source;
      const Vec cdf = cumulative(softmax_weights(fitness, rule.alpha));
      for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() < tau) {
          source[i] = static_cast<int>(sample_cdf(cdf, rng));
        }
      }
      return source;
    }
    case SelectionRule::Kind::worst_replacement: {
      if (tau == 0.0) return source;
      std::binomial_distribution<std::size_t> count_dist(n, tau);
      const std::size_t victims = count_dist(rng);
      // Gumbel-top-k draws `victims` distinct slots with weights exp(-alpha F).
      std::vector<std::pair<double, std::size_t>> keys(n);
      const double fmin = *std::min_element(fitness.begin(), fitness.end());
      for (std::size_t i = 0; i < n; ++i) {
        const double u = std::max(rng.uniform(), std::numeric_limits<double>::min());
        keys[i] = {-rule.alpha * (fitness[i] - fmin) - std::log(-std::log(u)), i};
      }
      std::partial_sort(keys.begin(), keys.begin() + static_cast<long>(victims),
                        keys.end(), [](const auto& a, const auto& b) {
                          return a.first > b.first ||
                                 (a.first == b.first && a.second < b.second);
                        });
      std::vector<std::size_t> chosen;
      for (std::size_t r = 0; r < victims; ++r) chosen.push_back(keys[r].second);
      std::sort(chosen.begin(), chosen.end());
      const Vec cdf = cumulative(softmax_weights(fitness, rule.alpha));
      for (std::size_t i : chosen) source[i] = static_cast<int>(sample_cdf(cdf, rng));
      return source;
    }
    case SelectionRule::Kind::truncation: {
      const std::size_t k = truncation_count(n, rule.fraction);
      const auto order = rank_order(fitness, ids);
      for (std::size_t r = 0; r < k; ++r) {
        source[order[n - 1 - r]] = static_cast<int>(order[r]);
      }
      return source;
    }
  }
  return source;
}

GeneticUpdate genetic_update(const Population& pop,
                             std::span<const double> fitness,
                             const SelectionRule& rule,
                             const MutationConfig& mut, double tau,
                             Stream& rng) {
  if (fitness.size() != pop.size()) {
    throw Error("genetic update: fitness vector does not match population");
  }
  mut.validate();
  std::vector<int> ids(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) ids[i] = pop[i].id;

  GeneticUpdate out;
  out.source = plan_jumps(fitness, ids, rule, tau, rng);
  out.population = pop;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const int j = out.source[i];
    if (j < 0) continue;
    out.population[i].theta = pop[static_cast<std::size_t>(j)].theta;
    out.population[i].h = mutate(pop[static_cast<std::size_t>(j)].h, mut, rng);
  }
  return out;
}

}  // namespace pbtdyn

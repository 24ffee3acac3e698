#include "pbtdyn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "pbtdyn/log.hpp"
#include "pbtdyn/numeric.hpp"

namespace pbtdyn {

EmpiricalMeasure::EmpiricalMeasure(Vec pts, std::size_t d, Vec w)
    : points(std::move(pts)), dim(d), weights(std::move(w)) {
  if (dim == 0 || points.size() % dim != 0) {
    throw Error("EmpiricalMeasure: point buffer is not a multiple of the dimension");
  }
  if (!weights.empty()) {
    if (weights.size() != size()) {
      throw Error("EmpiricalMeasure: weight count does not match point count");
    }
    for (double x : weights) {
      if (!(x >= 0.0)) throw Error("EmpiricalMeasure: negative weight");
    }
    const double total = pairwise_sum(weights);
    if (!(total > 0.0)) throw Error("EmpiricalMeasure: zero total weight");
    for (auto& x : weights) x /= total;
  }
}

EmpiricalMeasure EmpiricalMeasure::marginal(std::size_t axis) const {
  if (axis >= dim) throw Error("EmpiricalMeasure: marginal axis out of range");
  Vec out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = points[i * dim + axis];
  return EmpiricalMeasure(std::move(out), 1, weights);
}

EmpiricalMeasure EmpiricalMeasure::subsample(std::size_t n,
                                             std::uint64_t seed) const {
  if (!weights.empty()) {
    throw Error("EmpiricalMeasure: subsampling requires equal weights");
  }
  if (n >= size()) return *this;
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Stream rng(mix64(seed ^ 0xB1A5EDULL));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t span = idx.size() - i;
    const std::size_t j = i + static_cast<std::size_t>(rng() % span);
    std::swap(idx[i], idx[j]);
  }
  Vec out;
  out.reserve(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = point(idx[i]);
    out.insert(out.end(), p.begin(), p.end());
  }
  return EmpiricalMeasure(std::move(out), dim);
}

EmpiricalMeasure EmpiricalMeasure::from_grid(const DensityGrid& grid) {
  Vec pts;
  Vec w;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] <= 0.0) continue;
    const Vec c = grid.center_of(i);
    pts.insert(pts.end(), c.begin(), c.end());
    w.push_back(grid[i]);
  }
  return EmpiricalMeasure(std::move(pts), grid.dim(), std::move(w));
}

namespace {

std::vector<std::pair<double, double>> sorted_atoms(const EmpiricalMeasure& m) {
  std::vector<std::pair<double, double>> atoms(m.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    atoms[i] = {m.points[i], m.weight(i)};
  }
  std::sort(atoms.begin(), atoms.end());
  return atoms;
}

bool equal_weights(const EmpiricalMeasure& m) {
  if (m.weights.empty()) return true;
  const double w0 = m.weights.front();
  return std::all_of(m.weights.begin(), m.weights.end(),
                     [&](double w) { return std::abs(w - w0) <= 1e-15; });
}

}  // namespace

double w1_sorted_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim != 1 || b.dim != 1) throw Error("w1_sorted_1d: inputs must be 1D");
  if (a.size() == 0 || b.size() == 0) throw Error("w1_sorted_1d: empty measure");
  const auto xa = sorted_atoms(a);
  const auto xb = sorted_atoms(b);
  std::size_t i = 0, j = 0;
  double ra = xa[0].second, rb = xb[0].second;
  double acc = 0.0;
  while (i < xa.size() && j < xb.size()) {
    const double gap = std::abs(xa[i].first - xb[j].first);
    if (ra <= rb) {
      acc += ra * gap;
      rb -= ra;
      if (++i < xa.size()) ra = xa[i].second;
    } else {
      acc += rb * gap;
      ra -= rb;
      if (++j < xb.size()) rb = xb[j].second;
    }
  }
  return acc;
}

std::vector<std::size_t> solve_assignment(std::span<const double> cost,
                                          std::size_t n) {
  if (cost.size() != n * n) throw Error("solve_assignment: cost is not n x n");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source.
  Vec u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      const double* crow = cost.data() + (i0 - 1) * n;
      const double ui = u[i0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = crow[j - 1] - ui - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  return assignment;
}

double bl_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                   std::size_t max_n) {
  if (a.dim != b.dim) throw Error("bl_distance: dimension mismatch");
  if (a.size() != b.size()) {
    throw Error("bl_distance: sample counts differ (" + std::to_string(a.size()) +
                " vs " + std::to_string(b.size()) + "); subsample to equal size");
  }
  if (a.size() > max_n) {
    throw Error("bl_distance: " + std::to_string(a.size()) +
                " points exceed the limit of " + std::to_string(max_n) +
                "; subsample first");
  }
  if (a.size() == 0) throw Error("bl_distance: empty measures");
  if (!equal_weights(a) || !equal_weights(b)) {
    throw Error("bl_distance: only equal-weight measures are supported");
  }
  const std::size_t n = a.size();
  const std::size_t d = a.dim;
  Vec cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = a.point(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto y = b.point(j);
      double c;
      if (d == 1) {
        c = std::abs(x[0] - y[0]);
      } else {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
        c = std::sqrt(s);
      }
      cost[i * n + j] = std::min(c, 1.0);
    }
  }
  const auto assignment = solve_assignment(cost, n);
  Vec matched(n);
  for (std::size_t i = 0; i < n; ++i) matched[i] = cost[i * n + assignment[i]];
  return pairwise_sum(matched) / static_cast<double>(n);
}

DensityGrid histogram(std::span<const double> samples, std::size_t bins,
                      double lo, double hi, HistogramStats* stats) {
  if (bins == 0) throw Error("histogram: need at least one bin");
  if (samples.empty()) throw Error("histogram: empty sample set");
  DensityGrid grid = DensityGrid::line(lo, hi, bins);
  HistogramStats local;
  for (double x : samples) {
    if (x < lo) ++local.below;
    if (x > hi) ++local.above;
    grid[grid.locate(0, x)] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  for (auto& m : grid.masses()) m /= n;
  if (local.below + local.above > 0) {
    log_warning("histogram: " + std::to_string(local.below + local.above) +
                " samples outside [" + std::to_string(lo) + ", " +
                std::to_string(hi) + "] folded into boundary bins");
  }
  if (stats) *stats = local;
  return grid;
}

SampleMoments sample_moments(const EmpiricalMeasure& m) {
  SampleMoments out;
  out.mean.assign(m.dim, 0.0);
  out.variance.assign(m.dim, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t k = 0; k < m.dim; ++k) {
      out.mean[k] += m.weight(i) * m.points[i * m.dim + k];
    }
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t k = 0; k < m.dim; ++k) {
      const double dlt = m.points[i * m.dim + k] - out.mean[k];
      out.variance[k] += m.weight(i) * dlt * dlt;
    }
  }
  return out;
}

}  // namespace pbtdyn

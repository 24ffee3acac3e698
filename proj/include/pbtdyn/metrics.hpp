#pragma once

#include <cstddef>
#include <vector>

#include "pbtdyn/grid.hpp"

namespace pbtdyn {

/// Finite point cloud with equal (empty `weights`) or explicit weights.
struct EmpiricalMeasure {
  Vec points;  ///< row-major, size() * dim entries
  std::size_t dim = 1;
  Vec weights;

  EmpiricalMeasure() = default;
  EmpiricalMeasure(Vec pts, std::size_t d, Vec w = {});

  std::size_t size() const { return dim == 0 ? 0 : points.size() / dim; }
  double weight(std::size_t i) const {
    return weights.empty() ? 1.0 / static_cast<double>(size()) : weights[i];
  }
  ConstSpan point(std::size_t i) const {
    return ConstSpan(points).subspan(i * dim, dim);
  }

  /// One coordinate of every point, as a 1D measure.
  EmpiricalMeasure marginal(std::size_t axis) const;
  /// Equal-weight subsample of at most `n` points, drawn without
  /// replacement with a fixed-seed stream.
  EmpiricalMeasure subsample(std::size_t n, std::uint64_t seed) const;
  /// Cell centers weighted by mass.
  static EmpiricalMeasure from_grid(const DensityGrid& grid);
};

/// Exact 1D Wasserstein-1 distance via quantile coupling.
double w1_sorted_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

inline constexpr std::size_t kDefaultBlMaxN = 2048;

/// Optimal transport distance with truncated cost min(|x - y|, 1) between two
/// equal-weight clouds of the same size, solved exactly as an assignment
/// problem. Inputs larger than max_n are rejected; subsample them first.
double bl_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                   std::size_t max_n = kDefaultBlMaxN);

/// Minimum-cost perfect matching for a dense n x n cost matrix (row-major).
/// Returns assignment[row] = column. O(n^3) shortest augmenting paths.
std::vector<std::size_t> solve_assignment(std::span<const double> cost,
                                          std::size_t n);

struct HistogramStats {
  std::size_t below = 0;
  std::size_t above = 0;
};

/// Normalised 1D histogram of samples over [lo, hi] with `bins` cells.
/// Out-of-range samples land in the boundary bins and are counted in `stats`.
DensityGrid histogram(std::span<const double> samples, std::size_t bins,
                      double lo, double hi, HistogramStats* stats = nullptr);

struct SampleMoments {
  Vec mean;
  Vec variance;
};
SampleMoments sample_moments(const EmpiricalMeasure& m);

}  // namespace pbtdyn

#include "pbtdyn/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pbtdyn/log.hpp"
#include "pbtdyn/numeric.hpp"

namespace pbtdyn {

namespace {

constexpr double kMassTolerance = 1e-10;
constexpr double kNegativeTolerance = 1e-14;

void check_finite(const DensityGrid& grid, const char* who) {
  for (double m : grid.masses()) {
    if (!std::isfinite(m)) throw Error(std::string(who) + ": non-finite cell mass");
  }
}

/// Clamps round-off negatives; anything below tolerance is an error.
void enforce_nonnegative(DensityGrid& grid, const char* who) {
  std::size_t clamped = 0;
  for (auto& m : grid.masses()) {
    if (m >= 0.0) continue;
    if (m < -kNegativeTolerance) {
      throw Error(std::string(who) + ": negative cell mass " + std::to_string(m) +
                  " (scheme unstable for this step size)");
    }
    m = 0.0;
    ++clamped;
  }
  if (clamped > 0) {
    log_warning(std::string(who) + ": clamped " + std::to_string(clamped) +
                " round-off negative cells");
  }
}

/// Mass-conserving 1D convolution along one axis of the flat mass array.
void convolve_axis(const DensityGrid& grid, const Vec& in, Vec& out,
                   std::size_t axis, double sigma) {
  const std::size_t n = grid.cells(axis);
  const double w = grid.cell_width(axis);
  const auto reach = static_cast<long>(std::floor(6.0 * sigma / w));
  std::vector<double> taps(static_cast<std::size_t>(2 * reach + 1));
  for (long k = -reach; k <= reach; ++k) {
    const double x = static_cast<double>(k) * w;
    taps[static_cast<std::size_t>(k + reach)] =
        std::exp(-0.5 * x * x / (sigma * sigma));
  }
  // Per-source normalisation accounts for taps that fall outside the domain.
  Vec norm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long lo = std::max(-reach, -static_cast<long>(i));
    const long hi = std::min(reach, static_cast<long>(n - 1 - i));
    double s = 0.0;
    for (long k = lo; k <= hi; ++k) s += taps[static_cast<std::size_t>(k + reach)];
    norm[i] = s;
  }

  const std::size_t stride = (grid.dim() == 2 && axis == 0) ? grid.cells(1) : 1;
  const std::size_t lines = grid.size() / n;
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t line = 0; line < lines; ++line) {
    const std::size_t base =
        (grid.dim() == 2 && axis == 0) ? line : line * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double src = in[base + i * stride];
      if (src == 0.0) continue;
      const double scale = src / norm[i];
      const long lo = std::max(-reach, -static_cast<long>(i));
      const long hi = std::min(reach, static_cast<long>(n - 1 - i));
      for (long k = lo; k <= hi; ++k) {
        const auto j = static_cast<std::size_t>(static_cast<long>(i) + k);
        out[base + j * stride] += scale * taps[static_cast<std::size_t>(k + reach)];
      }
    }
  }
}

double mean_fitness(const DensityGrid& grid, std::span<const double> f) {
  Vec prod(grid.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = grid[i] * f[i];
  return pairwise_sum(prod);
}

}  // namespace

Vec sample_field(const DensityGrid& grid, const FitnessField& fbar) {
  if (!fbar) throw Error("meanfield: no fitness field configured");
  Vec out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fbar(grid.center_of(i));
  return out;
}

DensityGrid apply_selection(const DensityGrid& grid,
                            std::span<const double> fbar_values, double alpha) {
  check_finite(grid, "apply_selection");
  if (fbar_values.size() != grid.size()) {
    throw Error("apply_selection: fitness field does not match the grid");
  }
  double fmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] > 0.0) fmax = std::max(fmax, alpha * fbar_values[i]);
  }
  if (!std::isfinite(fmax)) throw Error("apply_selection: grid carries no mass");
  DensityGrid out = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[i] = grid[i] > 0.0 ? grid[i] * std::exp(alpha * fbar_values[i] - fmax) : 0.0;
  }
  const double z = out.total_mass();
  if (!(z > 0.0)) throw Error("apply_selection: all-zero mass after reweighting");
  for (auto& m : out.masses()) m /= z;
  return out;
}

DensityGrid apply_selection(const DensityGrid& grid, const FitnessField& fbar,
                            double alpha) {
  const Vec f = sample_field(grid, fbar);
  return apply_selection(grid, f, alpha);
}

DensityGrid apply_mutation(const DensityGrid& grid, double sigma) {
  if (!(sigma >= 0.0)) throw Error("apply_mutation: sigma must be non-negative");
  DensityGrid out = grid;
  Vec scratch(grid.size());
  for (std::size_t axis = 0; axis < grid.dim(); ++axis) {
    if (6.0 * sigma < grid.cell_width(axis)) continue;
    convolve_axis(grid, out.masses(), scratch, axis, sigma);
    out.masses().swap(scratch);
  }
  return out;
}

DensityGrid step_averaged(const DensityGrid& grid, const PdeConfig& cfg,
                          std::span<const double> fbar_values) {
  if (!(cfg.dt >= 0.0 && cfg.dt <= 1.0)) {
    throw Error("step_averaged: dt must lie in [0, 1] (got " +
                std::to_string(cfg.dt) + ")");
  }
  if (cfg.dt == 0.0) return grid;
  const DensityGrid jumped =
      apply_mutation(apply_selection(grid, fbar_values, cfg.alpha), cfg.sigma);
  DensityGrid out = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[i] = (1.0 - cfg.dt) * grid[i] + cfg.dt * jumped[i];
  }
  enforce_nonnegative(out, "step_averaged");
  return out;
}

DensityGrid step_averaged(const DensityGrid& grid, const PdeConfig& cfg) {
  const Vec f = sample_field(grid, cfg.fbar);
  return step_averaged(grid, cfg, f);
}

double replicator_max_dt(const DensityGrid& grid, double sigma) {
  double inv = 0.0;
  for (std::size_t k = 0; k < grid.dim(); ++k) {
    inv += sigma * sigma / (2.0 * grid.cell_width(k) * grid.cell_width(k));
  }
  return inv > 0.0 ? 0.5 / inv : std::numeric_limits<double>::infinity();
}

Vec laplacian(const DensityGrid& grid) {
  Vec out(grid.size(), 0.0);
  const auto& m = grid.masses();
  if (grid.dim() == 1) {
    const std::size_t n = grid.cells(0);
    const double inv = 1.0 / (grid.cell_width(0) * grid.cell_width(0));
    for (std::size_t i = 0; i < n; ++i) {
      const double left = i > 0 ? m[i - 1] : m[i];
      const double right = i + 1 < n ? m[i + 1] : m[i];
      out[i] = (left - 2.0 * m[i] + right) * inv;
    }
    return out;
  }
  const std::size_t nx = grid.cells(0), ny = grid.cells(1);
  const double ix = 1.0 / (grid.cell_width(0) * grid.cell_width(0));
  const double iy = 1.0 / (grid.cell_width(1) * grid.cell_width(1));
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const double c = m[i * ny + j];
      const double up = i > 0 ? m[(i - 1) * ny + j] : c;
      const double down = i + 1 < nx ? m[(i + 1) * ny + j] : c;
      const double left = j > 0 ? m[i * ny + j - 1] : c;
      const double right = j + 1 < ny ? m[i * ny + j + 1] : c;
      out[i * ny + j] = (up - 2.0 * c + down) * ix + (left - 2.0 * c + right) * iy;
    }
  }
  return out;
}

Vec replicator_rhs(const DensityGrid& grid, std::span<const double> fitness,
                   double sigma) {
  const double avg = mean_fitness(grid, fitness);
  Vec out = laplacian(grid);
  const double diff = 0.5 * sigma * sigma;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = grid[i] * (fitness[i] - avg) + diff * out[i];
  }
  return out;
}

DensityGrid step_replicator(const DensityGrid& grid, const PdeConfig& cfg,
                            std::span<const double> fbar_values) {
  check_finite(grid, "step_replicator");
  if (!(cfg.dt >= 0.0)) throw Error("step_replicator: dt must be non-negative");
  if (cfg.dt > replicator_max_dt(grid, cfg.sigma) * (1.0 + 1e-12)) {
    throw Error("step_replicator: diffusion stability condition violated "
                "(sigma^2 dt / (2 dx^2) must not exceed 1/2)");
  }
  Vec f(fbar_values.begin(), fbar_values.end());
  for (auto& x : f) x *= cfg.alpha;
  const Vec rhs = replicator_rhs(grid, f, cfg.sigma);
  const double before = grid.total_mass();
  DensityGrid out = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] += cfg.dt * rhs[i];
  const double drift = std::abs(out.total_mass() - before);
  if (drift > kMassTolerance) {
    throw Error("step_replicator: mass drift " + std::to_string(drift) +
                " exceeds tolerance");
  }
  enforce_nonnegative(out, "step_replicator");
  out.normalize();
  return out;
}

DensityGrid step_replicator(const DensityGrid& grid, const PdeConfig& cfg) {
  const Vec f = sample_field(grid, cfg.fbar);
  return step_replicator(grid, cfg, f);
}

DensityGrid step(const DensityGrid& grid, const PdeConfig& cfg,
                 std::span<const double> fbar_values) {
  return cfg.scheme == PdeScheme::selection_mutation
             ? step_averaged(grid, cfg, fbar_values)
             : step_replicator(grid, cfg, fbar_values);
}

GridMoments moments(const DensityGrid& grid) {
  GridMoments out;
  out.mean.assign(grid.dim(), 0.0);
  Vec sq(grid.size());
  std::vector<Vec> first(grid.dim(), Vec(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec c = grid.center_of(i);
    double r2 = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      first[k][i] = grid[i] * c[k];
      r2 += c[k] * c[k];
    }
    sq[i] = grid[i] * r2;
  }
  for (std::size_t k = 0; k < grid.dim(); ++k) out.mean[k] = pairwise_sum(first[k]);
  out.second_moment = pairwise_sum(sq);
  out.energy = 0.5 * out.second_moment;
  return out;
}

EquilibriumResidual equilibrium_residual(const DensityGrid& grid,
                                         const PdeConfig& cfg) {
  const DensityGrid g = apply_selection(grid, cfg.fbar, cfg.alpha);
  const GridMoments a = moments(grid);
  const GridMoments b = moments(g);
  EquilibriumResidual r;
  double s = 0.0;
  for (std::size_t k = 0; k < a.mean.size(); ++k) {
    s += (a.mean[k] - b.mean[k]) * (a.mean[k] - b.mean[k]);
  }
  r.r_mean = std::sqrt(s);
  const double dh = static_cast<double>(grid.dim());
  r.r_energy =
      std::abs(a.second_moment - b.second_moment - dh * cfg.sigma * cfg.sigma);
  return r;
}

double replicator_consistency(const DensityGrid& grid, const PdeConfig& cfg,
                              double nu) {
  if (!(nu > 0.0)) throw Error("replicator_consistency: nu must be positive");
  const Vec f = sample_field(grid, cfg.fbar);
  const DensityGrid jumped = apply_mutation(
      apply_selection(grid, f, nu * cfg.alpha), std::sqrt(nu) * cfg.sigma);
  Vec scaled_f = f;
  for (auto& x : scaled_f) x *= cfg.alpha;
  const Vec rhs = replicator_rhs(grid, scaled_f, cfg.sigma);
  Vec diff(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    diff[i] = std::abs((jumped[i] - grid[i]) / nu - rhs[i]);
  }
  return pairwise_sum(diff);
}

double boundary_mass(const DensityGrid& grid) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    bool edge = false;
    if (grid.dim() == 1) {
      edge = i == 0 || i + 1 == grid.cells(0);
    } else {
      const std::size_t a = i / grid.cells(1), b = i % grid.cells(1);
      edge = a == 0 || b == 0 || a + 1 == grid.cells(0) || b + 1 == grid.cells(1);
    }
    if (edge) s += grid[i];
  }
  return s;
}

}  // namespace pbtdyn

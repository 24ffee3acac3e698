#pragma once

#include <functional>

#include "pbtdyn/grid.hpp"

namespace pbtdyn {

using FitnessField = std::function<double(ConstSpan h)>;

enum class PdeScheme { selection_mutation, replicator_mutator };

struct PdeConfig {
  double dt = 0.1;
  double sigma = 0.1;
  double alpha = 1.0;
  FitnessField fbar;
  PdeScheme scheme = PdeScheme::selection_mutation;
  double nu = 1.0;
};

/// Fbar evaluated at every cell center.
Vec sample_field(const DensityGrid& grid, const FitnessField& fbar);

/// Reweighting G_{alpha Fbar}: m_j <- m_j exp(alpha F_j - max) / Z.
DensityGrid apply_selection(const DensityGrid& grid, std::span<const double> fbar_values,
                            double alpha);
DensityGrid apply_selection(const DensityGrid& grid, const FitnessField& fbar,
                            double alpha);

/// Gaussian mutation kernel of standard deviation sigma, sampled at cell
/// offsets, truncated at 6 sigma and renormalised per source cell so no mass
/// leaves the domain. 2D grids are convolved axis by axis.
DensityGrid apply_mutation(const DensityGrid& grid, double sigma);

/// Forward Euler step of d rho/dt = K_sigma * G[rho] - rho; requires dt <= 1.
DensityGrid step_averaged(const DensityGrid& grid, const PdeConfig& cfg);
DensityGrid step_averaged(const DensityGrid& grid, const PdeConfig& cfg,
                          std::span<const double> fbar_values);

/// Largest dt allowed by the explicit diffusion stencil.
double replicator_max_dt(const DensityGrid& grid, double sigma);

/// Forward Euler step of the replicator-mutator equation
///   d rho/dt = rho (alpha Fbar - <alpha Fbar, rho>) + sigma^2/2 Laplacian rho
/// with a zero-flux boundary.
DensityGrid step_replicator(const DensityGrid& grid, const PdeConfig& cfg);
DensityGrid step_replicator(const DensityGrid& grid, const PdeConfig& cfg,
                            std::span<const double> fbar_values);

/// Dispatches on cfg.scheme.
DensityGrid step(const DensityGrid& grid, const PdeConfig& cfg,
                 std::span<const double> fbar_values);

/// Right-hand side of the replicator-mutator equation (per-cell masses).
Vec replicator_rhs(const DensityGrid& grid, std::span<const double> fitness,
                   double sigma);

/// Zero-flux five-point (or three-point) Laplacian of the cell masses.
Vec laplacian(const DensityGrid& grid);

struct GridMoments {
  Vec mean;
  /// (1/2) int |h|^2 d rho
  double energy = 0.0;
  /// int |h|^2 d rho
  double second_moment = 0.0;
};

GridMoments moments(const DensityGrid& grid);

struct EquilibriumResidual {
  double r_mean = 0.0;
  double r_energy = 0.0;
};

/// Residuals of the stationarity relations
///   m(rho) = m(G[rho]),  M2(rho) = M2(G[rho]) + d_h sigma^2,
/// using the factor-free second moment M2 = int |h|^2 d rho, the convention
/// in which the relation is exact for Gaussian mutation.
EquilibriumResidual equilibrium_residual(const DensityGrid& grid,
                                         const PdeConfig& cfg);

/// L1 norm of (1/nu) Ebar^nu[rho] - (replicator-mutator RHS), where Ebar^nu
/// uses pressure nu alpha Fbar and mutation sqrt(nu) sigma. Decays as O(nu).
double replicator_consistency(const DensityGrid& grid, const PdeConfig& cfg,
                              double nu);

/// Mass held in the outermost layer of cells.
double boundary_mass(const DensityGrid& grid);

}  // namespace pbtdyn

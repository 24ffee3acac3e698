#pragma once

#include <cstddef>
#include <vector>

#include "pbtdyn/core.hpp"

namespace pbtdyn {

/// Probability masses on a regular 1D or 2D grid over a bounded box.
/// The state is per-cell mass, not density; row-major with the last axis
/// fastest.
class DensityGrid {
 public:
  DensityGrid() = default;
  /// Zero-mass grid with `cells[k]` cells along axis k.
  DensityGrid(Vec lower, Vec upper, std::vector<std::size_t> cells);

  static DensityGrid line(double lo, double hi, std::size_t cells) {
    return DensityGrid({lo}, {hi}, {cells});
  }

  std::size_t dim() const { return cells_.size(); }
  std::size_t size() const { return mass_.size(); }
  std::size_t cells(std::size_t axis) const { return cells_[axis]; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  double cell_width(std::size_t axis) const { return width_[axis]; }
  double center(std::size_t axis, std::size_t index) const {
    return lower_[axis] + (static_cast<double>(index) + 0.5) * width_[axis];
  }
  /// Coordinates of the center of flat cell `flat`.
  Vec center_of(std::size_t flat) const;
  /// Cell containing x (clamped to the boundary cells).
  std::size_t locate(std::size_t axis, double x) const;

  Vec& masses() { return mass_; }
  const Vec& masses() const { return mass_; }
  double& operator[](std::size_t i) { return mass_[i]; }
  double operator[](std::size_t i) const { return mass_[i]; }

  double total_mass() const;
  /// Rescales to unit total mass; throws when the grid carries no mass.
  void normalize();

  /// Uniform unit mass over all cells.
  void fill_uniform();
  /// Unit mass at the cell containing x.
  void set_point_mass(ConstSpan x);
  /// Cell masses proportional to f(center).
  void fill_from(const std::function<double(ConstSpan)>& density);

 private:
  Vec lower_;
  Vec upper_;
  std::vector<std::size_t> cells_;
  Vec width_;
  Vec mass_;
};

}  // namespace pbtdyn

#include "pbtdyn/grid.hpp"

#include <algorithm>
#include <cmath>

#include "pbtdyn/numeric.hpp"

namespace pbtdyn {

DensityGrid::DensityGrid(Vec lower, Vec upper, std::vector<std::size_t> cells)
    : lower_(std::move(lower)), upper_(std::move(upper)), cells_(std::move(cells)) {
  if (cells_.empty() || cells_.size() > 2 || lower_.size() != cells_.size() ||
      upper_.size() != cells_.size()) {
    throw Error("DensityGrid: only 1D and 2D grids with matching bounds are supported");
  }
  std::size_t total = 1;
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    if (cells_[k] == 0) throw Error("DensityGrid: zero cells along an axis");
    if (!(lower_[k] < upper_[k])) throw Error("DensityGrid: empty domain");
    if (cells_.size() == 2 && cells_[k] > 512) {
      throw Error("DensityGrid: 2D grids are limited to 512 cells per axis");
    }
    width_.push_back((upper_[k] - lower_[k]) / static_cast<double>(cells_[k]));
    total *= cells_[k];
  }
  mass_.assign(total, 0.0);
}

Vec DensityGrid::center_of(std::size_t flat) const {
  if (dim() == 1) return {center(0, flat)};
  return {center(0, flat / cells_[1]), center(1, flat % cells_[1])};
}

std::size_t DensityGrid::locate(std::size_t axis, double x) const {
  const double pos = std::floor((x - lower_[axis]) / width_[axis]);
  if (!(pos > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(pos), cells_[axis] - 1);
}

double DensityGrid::total_mass() const { return pairwise_sum(mass_); }

void DensityGrid::normalize() {
  const double total = total_mass();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error("DensityGrid: cannot normalise a grid with zero or non-finite mass");
  }
  for (auto& m : mass_) m /= total;
}

void DensityGrid::fill_uniform() {
  std::fill(mass_.begin(), mass_.end(), 1.0 / static_cast<double>(mass_.size()));
}

void DensityGrid::set_point_mass(ConstSpan x) {
  if (x.size() != dim()) throw Error("DensityGrid: point dimension mismatch");
  std::fill(mass_.begin(), mass_.end(), 0.0);
  std::size_t flat = locate(0, x[0]);
  if (dim() == 2) flat = flat * cells_[1] + locate(1, x[1]);
  mass_[flat] = 1.0;
}

void DensityGrid::fill_from(const std::function<double(ConstSpan)>& density) {
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    const Vec c = center_of(i);
    mass_[i] = std::max(0.0, density(c));
  }
  normalize();
}

}  // namespace pbtdyn

#include "spp/projection.hpp"

#include <algorithm>
#include <cmath>

namespace spp {

double halfspace_distance(const HalfspaceIndicator& h, const Vector& x) {
  return std::max(0.0, h.c.dot(x) - h.d) / h.c.norm();
}

DykstraResult dykstra_project(std::span<const HalfspaceIndicator> halfspaces, const Vector& x,
                              double tol, int max_cycles) {
  DykstraResult result;
  result.point = x;
  if (halfspaces.empty()) {
    result.converged = true;
    return result;
  }
  for (const auto& h : halfspaces) validate(h);

  const auto count = static_cast<Eigen::Index>(halfspaces.size());
  Matrix corrections = Matrix::Zero(x.size(), count);
  Vector& point = result.point;
  Vector previous(x.size());
  for (int cycle = 1; cycle <= max_cycles; ++cycle) {
    previous = point;
    for (Eigen::Index i = 0; i < count; ++i) {
      const auto& h = halfspaces[static_cast<std::size_t>(i)];
      Vector shifted = point + corrections.col(i);
      point = project_halfspace(shifted, h.c, h.d);
      corrections.col(i) = shifted - point;
    }
    result.cycles = cycle;
    if ((point - previous).norm() <= tol) {
      double worst = 0.0;
      for (const auto& h : halfspaces) worst = std::max(worst, halfspace_distance(h, point));
      if (worst <= tol) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

}  // namespace spp

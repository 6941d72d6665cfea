#pragma once

// Euclidean projection onto an intersection of halfspaces.

#include "spp/prox.hpp"

#include <span>

namespace spp {

struct DykstraResult {
  Vector point;
  int cycles = 0;
  bool converged = false;
};

/// Dykstra's cyclic projection algorithm. Stops once a full cycle moves the
/// iterate by at most `tol` and every halfspace is violated by at most `tol`
/// (in distance). An empty family returns x unchanged.
DykstraResult dykstra_project(std::span<const HalfspaceIndicator> halfspaces, const Vector& x,
                              double tol = 1e-10, int max_cycles = 1000000);

/// Distance from x to a single halfspace.
double halfspace_distance(const HalfspaceIndicator& h, const Vector& x);

}  // namespace spp

#pragma once

#include "tempfit/geom.hpp"
#include "tempfit/mesh.hpp"

#include <vector>

namespace tempfit {

struct RidgeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RidgeEntry {
  int index = -1;
  Vec3 target = Vec3::Zero();
  double kappa = 0.0;  // unitless height offset factor, >= 0, not clamped
};

struct RidgeTargets {
  std::vector<RidgeEntry> entries;
  Plane plane;
};

// Plane through the cylinder's axis midpoint, normal pointing from the head
// mean toward that midpoint. Degenerate when the two coincide.
Plane cylinder_plane(const Cylinder& c, const SurfaceMesh& head);

// Raised target positions above the cylinder plane: each selected head vertex
// projects onto the plane and is lifted along the normal by kappa * length,
// where kappa = min(distance to either cylinder end) / (length / 2).
// Input order of `indices` is preserved. Cylinders shorter than min_length
// are rejected.
RidgeTargets ridge(const std::vector<int>& indices, const SurfaceMesh& head, const Cylinder& c,
                   double min_length);

// The index set the ridge expects: all head vertices inside the cylinder,
// ascending order.
std::vector<int> select_cylinder_vertices(const SurfaceMesh& head, const Cylinder& c);

}  // namespace tempfit

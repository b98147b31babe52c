#include "tempfit/ridge.hpp"

#include <algorithm>
#include <string>

namespace tempfit {

Plane cylinder_plane(const Cylinder& c, const SurfaceMesh& head) {
  const Vec3 mid = c.axis_midpoint();
  const Vec3 dir = mid - mesh_mean(head);
  const double len = dir.norm();
  if (len <= 1e-9)
    throw RidgeError("cylinder_plane: axis midpoint coincides with head mean");
  return Plane{mid, dir / len};
}

RidgeTargets ridge(const std::vector<int>& indices, const SurfaceMesh& head, const Cylinder& c,
                   double min_length) {
  const double len = c.length();
  if (len < min_length)
    throw RidgeError("ridge: cylinder length " + std::to_string(len) + " < l_min " +
                     std::to_string(min_length));

  RidgeTargets out;
  out.plane = cylinder_plane(c, head);
  out.entries.reserve(indices.size());

  for (int i : indices) {
    if (i < 0 || i >= static_cast<int>(head.vertices.size()))
      throw RidgeError("ridge: vertex index " + std::to_string(i) + " out of range");
    const Vec3 on_plane = project_point_plane(head.vertices[i], out.plane);
    const double kappa =
        std::min((c.start - on_plane).norm(), (c.end - on_plane).norm()) / (len / 2.0);
    out.entries.push_back({i, on_plane + kappa * len * out.plane.normal, kappa});
  }
  return out;
}

std::vector<int> select_cylinder_vertices(const SurfaceMesh& head, const Cylinder& c) {
  std::vector<int> indices;
  for (int i = 0; i < static_cast<int>(head.vertices.size()); ++i)
    if (point_in_cylinder(head.vertices[i], c)) indices.push_back(i);
  return indices;
}

}  // namespace tempfit

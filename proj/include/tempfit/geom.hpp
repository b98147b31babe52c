#pragma once

#include "tempfit/mesh.hpp"

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <vector>

namespace tempfit {

using Mat3 = Eigen::Matrix3d;

struct GeomError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Plane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // unit length
};

struct Cylinder {
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
  double radius = 0.0;

  double length() const { return (end - start).norm(); }
  Vec3 axis_midpoint() const { return 0.5 * (start + end); }
};

Vec3 project_point_plane(const Vec3& v, const Plane& p);

// Closest rotation to m in the Frobenius sense: R = U V^T from the SVD of m,
// with a sign flip on the smallest singular direction when det(U V^T) < 0.
// Throws GeomError when m is numerically zero (all singular values < 1e-12).
Mat3 best_fit_rotation(const Mat3& m);

// Boundary counts as inside (closed intervals on both the axial and radial
// tests).
bool point_in_cylinder(const Vec3& v, const Cylinder& c);

struct ClosestPointResult {
  Vec3 point = Vec3::Zero();
  int face = -1;
  double distance = 0.0;
};

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Exact closest point by scanning every triangle. Oracle for the BVH.
ClosestPointResult closest_point_brute_force(const Vec3& v, const SurfaceMesh& s);

// Axis-aligned BVH over the mesh triangles, leaf size 4. Immutable after
// build; concurrent queries are safe.
class SurfaceBvh {
 public:
  explicit SurfaceBvh(const SurfaceMesh& mesh);
  ~SurfaceBvh();
  SurfaceBvh(SurfaceBvh&&) noexcept;
  SurfaceBvh& operator=(SurfaceBvh&&) noexcept;

  ClosestPointResult closest_point(const Vec3& v) const;
  const SurfaceMesh& mesh() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ClosestPointResult closest_point_on_surface(const Vec3& v, const SurfaceBvh& bvh);

// Angle-weighted vertex pseudonormals (Baerentzen-Aanaes), normalized.
std::vector<Vec3> vertex_pseudonormals(const SurfaceMesh& mesh);

}  // namespace tempfit

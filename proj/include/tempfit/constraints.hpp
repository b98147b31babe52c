#pragma once

#include "tempfit/geom.hpp"
#include "tempfit/mesh.hpp"

#include <array>
#include <memory>
#include <optional>
#include <vector>

namespace tempfit {

struct ConstraintError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Solver weights. Defaults are the reference values used throughout.
struct Weights {
  double target = 1e2;          // w_tar
  double tet_s = 1e1;           // w_S
  double tet_j = 1e4;           // w_J
  double tet_c = 1e4;           // w_C
  double push = 1e2;            // w_push
  double pull = 1e2;            // w_pull
  double correspondence = 1e2;  // w_corr
};

enum class ConstraintKind { Target, TetStrain, Push, Pull, Correspondence };

const char* to_string(ConstraintKind kind);

// Closed, consistently oriented surface a push constraint keeps vertices out
// of. Owns the BVH and the feature pseudonormals; immutable and shared
// between constraints.
class PushField {
 public:
  explicit PushField(SurfaceMesh surface);  // throws on open/inconsistent surface

  // Signed distance (negative inside) and the closest point with its
  // outward pseudonormal.
  struct Query {
    double signed_distance = 0.0;
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
  };
  Query query(const Vec3& p) const;

  const SurfaceMesh& surface() const { return bvh_.mesh(); }

 private:
  SurfaceBvh bvh_;
  std::vector<Vec3> vertex_normals_;
  std::vector<Vec3> face_normals_;
  // edge pseudonormals keyed per face: edge k is (v_k, v_{k+1})
  std::vector<std::array<Vec3, 3>> edge_normals_;
};

// One weighted projective constraint. Positional kinds use indices[0] only.
struct Constraint {
  ConstraintKind kind = ConstraintKind::Target;
  std::array<int, 4> indices{-1, -1, -1, -1};
  double weight = 0.0;
  double measure = 1.0;  // rest volume for TetStrain, 1 otherwise

  Vec3 target = Vec3::Zero();  // positional kinds
  Mat3 rest_inv = Mat3::Identity();  // TetStrain
  double alpha = 0.0;                // TetStrain band half-width
  double margin = 0.0;               // Push offset
  std::shared_ptr<const PushField> field;  // Push
};

Constraint make_target(int vertex, const Vec3& target, double weight);
Constraint make_pull(int vertex, const Vec3& target, double weight);
Constraint make_correspondence(int vertex, const Vec3& target, double weight);
Constraint make_tet_strain(const std::array<int, 4>& tet, const std::array<Vec3, 4>& rest,
                           double alpha, double weight);
Constraint make_push(int vertex, std::shared_ptr<const PushField> field, double margin,
                     double weight);

// Local-step output: a pin target for positional kinds, a projected
// deformation gradient for TetStrain.
struct Projection {
  Vec3 point = Vec3::Zero();
  Mat3 strain = Mat3::Identity();
};

Vec3 project_target(const Vec3& current, const Vec3& target);

// Deformation gradient of the current tet against the rest inverse, with
// singular values clamped to [1/(1+alpha), 1+alpha]. A fully degenerate
// current tet projects to the rest shape.
Mat3 project_tet_strain_gradient(const Mat3& rest_inv, const std::array<Vec3, 4>& positions,
                                 double alpha);
// Same projection expressed as positions, rebuilt around the current centroid.
std::array<Vec3, 4> project_tet_strain(const Mat3& rest_inv, const std::array<Vec3, 4>& positions,
                                       double alpha);

// Inactive (nullopt) when the point is farther than `margin` outside.
std::optional<Vec3> project_push(const Vec3& current, const PushField& field, double margin);

Projection project(const Constraint& c, const std::vector<Vec3>& q);

// w/2 * measure * squared residual against the constraint's own projection.
double constraint_energy(const Constraint& c, const std::vector<Vec3>& q);

Mat3 edge_matrix(const std::array<Vec3, 4>& positions);
Mat3 deformation_gradient(const Mat3& rest_inv, const std::array<Vec3, 4>& positions);

// Closest-point pairs from source vertices to the target surface, gated by
// distance and normal agreement.
std::vector<Constraint> build_correspondences(const std::vector<Vec3>& source_vertices,
                                              const std::vector<Vec3>& source_normals,
                                              const std::vector<int>& source_indices,
                                              const SurfaceBvh& target, double max_dist,
                                              double max_angle_deg, double weight);

}  // namespace tempfit

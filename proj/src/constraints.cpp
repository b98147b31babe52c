#include "tempfit/constraints.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace tempfit {

const char* to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Target: return "target";
    case ConstraintKind::TetStrain: return "tet_strain";
    case ConstraintKind::Push: return "push";
    case ConstraintKind::Pull: return "pull";
    case ConstraintKind::Correspondence: return "correspondence";
  }
  return "?";
}

PushField::PushField(SurfaceMesh surface) : bvh_([&] {
  // closure check: every directed edge must be matched by its reverse
  std::map<std::pair<int, int>, int> directed;
  for (const auto& f : surface.faces)
    for (int k = 0; k < 3; ++k) directed[{f[k], f[(k + 1) % 3]}]++;
  for (const auto& [edge, count] : directed) {
    auto rev = directed.find({edge.second, edge.first});
    if (count != 1 || rev == directed.end() || rev->second != 1)
      throw ConstraintError("PushField: surface is open or inconsistently oriented");
  }
  return SurfaceBvh(surface);
}()) {
  const SurfaceMesh& mesh = bvh_.mesh();
  vertex_normals_ = vertex_pseudonormals(mesh);
  face_normals_.resize(mesh.faces.size());
  std::map<std::pair<int, int>, Vec3> edge_accum;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    const Vec3 n = (mesh.vertices[face[1]] - mesh.vertices[face[0]])
                       .cross(mesh.vertices[face[2]] - mesh.vertices[face[0]])
                       .normalized();
    face_normals_[f] = n;
    for (int k = 0; k < 3; ++k) {
      const auto key = std::minmax(face[k], face[(k + 1) % 3]);
      edge_accum[{key.first, key.second}] += n;
    }
  }
  edge_normals_.resize(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      const auto key = std::minmax(face[k], face[(k + 1) % 3]);
      edge_normals_[f][k] = edge_accum[{key.first, key.second}].normalized();
    }
  }
}

PushField::Query PushField::query(const Vec3& p) const {
  const ClosestPointResult cp = bvh_.closest_point(p);
  const SurfaceMesh& mesh = bvh_.mesh();
  const auto& face = mesh.faces[cp.face];
  const Vec3& a = mesh.vertices[face[0]];
  const Vec3& b = mesh.vertices[face[1]];
  const Vec3& c = mesh.vertices[face[2]];

  // barycentric coordinates of the closest point
  const Vec3 v0 = b - a, v1 = c - a, v2 = cp.point - a;
  const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
  const double d20 = v2.dot(v0), d21 = v2.dot(v1);
  const double denom = d00 * d11 - d01 * d01;
  double bv = 0.0, bw = 0.0;
  if (denom > 0.0) {
    bv = (d11 * d20 - d01 * d21) / denom;
    bw = (d00 * d21 - d01 * d20) / denom;
  }
  const double bu = 1.0 - bv - bw;

  // pseudonormal of the closest feature
  constexpr double kTol = 1e-9;
  const double bary[3] = {bu, bv, bw};
  int zeros = 0, zero_idx[3] = {0, 0, 0};
  for (int k = 0; k < 3; ++k)
    if (bary[k] <= kTol) zero_idx[zeros++] = k;
  Vec3 n;
  if (zeros == 0) {
    n = face_normals_[cp.face];
  } else if (zeros == 1) {
    // edge opposite the vanished vertex, i.e. edge (k+1, k+2)
    n = edge_normals_[cp.face][(zero_idx[0] + 1) % 3];
  } else {
    // vertex with the surviving coordinate
    int k = 3 - zero_idx[0] - zero_idx[1];
    n = vertex_normals_[face[k]];
  }

  Query out;
  out.point = cp.point;
  out.normal = n;
  out.signed_distance = (p - cp.point).dot(n) >= 0.0 ? cp.distance : -cp.distance;
  return out;
}

Constraint make_target(int vertex, const Vec3& target, double weight) {
  Constraint c;
  c.kind = ConstraintKind::Target;
  c.indices[0] = vertex;
  c.target = target;
  c.weight = weight;
  return c;
}

Constraint make_pull(int vertex, const Vec3& target, double weight) {
  Constraint c = make_target(vertex, target, weight);
  c.kind = ConstraintKind::Pull;
  return c;
}

Constraint make_correspondence(int vertex, const Vec3& target, double weight) {
  Constraint c = make_target(vertex, target, weight);
  c.kind = ConstraintKind::Correspondence;
  return c;
}

Constraint make_tet_strain(const std::array<int, 4>& tet, const std::array<Vec3, 4>& rest,
                           double alpha, double weight) {
  Mat3 rest_edges = edge_matrix(rest);
  const double det = rest_edges.determinant();
  if (det <= 0.0)
    throw ConstraintError("make_tet_strain: rest tet has non-positive volume");
  Constraint c;
  c.kind = ConstraintKind::TetStrain;
  c.indices = tet;
  c.rest_inv = rest_edges.inverse();
  c.alpha = alpha;
  c.weight = weight;
  c.measure = det / 6.0;
  return c;
}

Constraint make_push(int vertex, std::shared_ptr<const PushField> field, double margin,
                     double weight) {
  if (!field) throw ConstraintError("make_push: null field");
  Constraint c;
  c.kind = ConstraintKind::Push;
  c.indices[0] = vertex;
  c.margin = margin;
  c.weight = weight;
  c.field = std::move(field);
  return c;
}

Vec3 project_target(const Vec3& /*current*/, const Vec3& target) { return target; }

Mat3 edge_matrix(const std::array<Vec3, 4>& p) {
  Mat3 d;
  d.col(0) = p[1] - p[0];
  d.col(1) = p[2] - p[0];
  d.col(2) = p[3] - p[0];
  return d;
}

Mat3 deformation_gradient(const Mat3& rest_inv, const std::array<Vec3, 4>& positions) {
  return edge_matrix(positions) * rest_inv;
}

Mat3 project_tet_strain_gradient(const Mat3& rest_inv, const std::array<Vec3, 4>& positions,
                                 double alpha) {
  const Mat3 f = deformation_gradient(rest_inv, positions);
  Eigen::JacobiSVD<Mat3> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 sigma = svd.singularValues();
  if (sigma(0) < 1e-12) return Mat3::Identity();  // collapsed tet: rest shape
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if (f.determinant() < 0.0) {
    // inverted element: carry the reflection on the smallest singular value
    sigma(2) = -sigma(2);
    u.col(2) *= -1.0;
  }
  const double lo = 1.0 / (1.0 + alpha), hi = 1.0 + alpha;
  for (int k = 0; k < 3; ++k) sigma(k) = std::clamp(sigma(k), lo, hi);
  return u * sigma.asDiagonal() * v.transpose();
}

std::array<Vec3, 4> project_tet_strain(const Mat3& rest_inv, const std::array<Vec3, 4>& positions,
                                       double alpha) {
  const Mat3 f_proj = project_tet_strain_gradient(rest_inv, positions, alpha);
  const Mat3 d_proj = f_proj * rest_inv.inverse();
  const Vec3 centroid = 0.25 * (positions[0] + positions[1] + positions[2] + positions[3]);
  const Vec3 p0 = centroid - 0.25 * (d_proj.col(0) + d_proj.col(1) + d_proj.col(2));
  return {p0, p0 + d_proj.col(0), p0 + d_proj.col(1), p0 + d_proj.col(2)};
}

std::optional<Vec3> project_push(const Vec3& current, const PushField& field, double margin) {
  const PushField::Query q = field.query(current);
  if (q.signed_distance >= margin) return std::nullopt;
  return q.point + margin * q.normal;
}

namespace {

std::array<Vec3, 4> gather(const Constraint& c, const std::vector<Vec3>& q) {
  return {q[c.indices[0]], q[c.indices[1]], q[c.indices[2]], q[c.indices[3]]};
}

}  // namespace

Projection project(const Constraint& c, const std::vector<Vec3>& q) {
  Projection p;
  switch (c.kind) {
    case ConstraintKind::Target:
    case ConstraintKind::Pull:
    case ConstraintKind::Correspondence:
      p.point = project_target(q[c.indices[0]], c.target);
      break;
    case ConstraintKind::TetStrain:
      p.strain = project_tet_strain_gradient(c.rest_inv, gather(c, q), c.alpha);
      break;
    case ConstraintKind::Push: {
      const auto target = project_push(q[c.indices[0]], *c.field, c.margin);
      p.point = target.value_or(q[c.indices[0]]);  // inactive: zero residual
      break;
    }
  }
  return p;
}

double constraint_energy(const Constraint& c, const std::vector<Vec3>& q) {
  if (c.kind == ConstraintKind::TetStrain) {
    const Mat3 f = deformation_gradient(c.rest_inv, gather(c, q));
    const Mat3 f_proj = project_tet_strain_gradient(c.rest_inv, gather(c, q), c.alpha);
    return 0.5 * c.weight * c.measure * (f - f_proj).squaredNorm();
  }
  const Projection p = project(c, q);
  return 0.5 * c.weight * c.measure * (q[c.indices[0]] - p.point).squaredNorm();
}

std::vector<Constraint> build_correspondences(const std::vector<Vec3>& source_vertices,
                                              const std::vector<Vec3>& source_normals,
                                              const std::vector<int>& source_indices,
                                              const SurfaceBvh& target, double max_dist,
                                              double max_angle_deg, double weight) {
  const double cos_limit = std::cos(max_angle_deg * M_PI / 180.0);
  const SurfaceMesh& tmesh = target.mesh();
  std::vector<Constraint> out;
  for (std::size_t k = 0; k < source_vertices.size(); ++k) {
    const ClosestPointResult cp = target.closest_point(source_vertices[k]);
    if (cp.distance > max_dist) continue;
    const auto& face = tmesh.faces[cp.face];
    const Vec3 tn = (tmesh.vertices[face[1]] - tmesh.vertices[face[0]])
                        .cross(tmesh.vertices[face[2]] - tmesh.vertices[face[0]])
                        .normalized();
    if (source_normals[k].dot(tn) < cos_limit) continue;
    out.push_back(make_correspondence(source_indices[k], cp.point, weight));
  }
  return out;
}

}  // namespace tempfit

#include "tempfit/geom.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tempfit {

Vec3 project_point_plane(const Vec3& v, const Plane& p) {
  return v - (v - p.point).dot(p.normal) * p.normal;
}

Mat3 best_fit_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(0) < 1e-12)
    throw GeomError("best_fit_rotation: matrix is numerically zero");
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0) u.col(2) *= -1.0;  // smallest singular direction
  return u * v.transpose();
}

bool point_in_cylinder(const Vec3& v, const Cylinder& c) {
  const Vec3 axis = c.end - c.start;
  const double len = axis.norm();
  const Vec3 dir = axis / len;
  const double t = (v - c.start).dot(dir);
  if (t < 0.0 || t > len) return false;
  const double radial = ((v - c.start) - t * dir).norm();
  return radial <= c.radius;
}

// Ericson, Real-Time Collision Detection, 5.1.5.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

  const double denom = 1.0 / (va + vb + vc);
  return a + (vb * denom) * ab + (vc * denom) * ac;
}

ClosestPointResult closest_point_brute_force(const Vec3& v, const SurfaceMesh& s) {
  if (s.faces.empty()) throw GeomError("closest_point: empty mesh");
  ClosestPointResult best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < s.faces.size(); ++f) {
    const auto& face = s.faces[f];
    const Vec3 q = closest_point_on_triangle(v, s.vertices[face[0]], s.vertices[face[1]],
                                             s.vertices[face[2]]);
    const double d = (q - v).norm();
    if (d < best.distance) {
      best.distance = d;
      best.point = q;
      best.face = static_cast<int>(f);
    }
  }
  return best;
}

namespace {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void grow(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void grow(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  double sq_distance(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - hi);
    return d.squaredNorm();
  }
};

struct BvhNode {
  Aabb box;
  int left = -1;   // child index, or -1 for leaf
  int right = -1;
  int begin = 0;   // triangle range [begin, end) for leaves
  int end = 0;
};

constexpr int kLeafSize = 4;

}  // namespace

struct SurfaceBvh::Impl {
  SurfaceMesh mesh;
  std::vector<int> tri_order;
  std::vector<BvhNode> nodes;

  int build(std::vector<Aabb>& tri_boxes, std::vector<Vec3>& centroids, int begin, int end) {
    BvhNode node;
    for (int i = begin; i < end; ++i) node.box.grow(tri_boxes[tri_order[i]]);
    const int idx = static_cast<int>(nodes.size());
    nodes.push_back(node);
    if (end - begin <= kLeafSize) {
      nodes[idx].begin = begin;
      nodes[idx].end = end;
      return idx;
    }
    Aabb cbox;
    for (int i = begin; i < end; ++i) cbox.grow(centroids[tri_order[i]]);
    int axis = 0;
    (cbox.hi - cbox.lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(tri_order.begin() + begin, tri_order.begin() + mid, tri_order.begin() + end,
                     [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
    const int left = build(tri_boxes, centroids, begin, mid);
    const int right = build(tri_boxes, centroids, mid, end);
    nodes[idx].left = left;
    nodes[idx].right = right;
    return idx;
  }

  void query(int node_idx, const Vec3& p, ClosestPointResult& best) const {
    const BvhNode& node = nodes[node_idx];
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int f = tri_order[i];
        const auto& face = mesh.faces[f];
        const Vec3 q = closest_point_on_triangle(p, mesh.vertices[face[0]],
                                                 mesh.vertices[face[1]], mesh.vertices[face[2]]);
        const double d = (q - p).norm();
        if (d < best.distance) {
          best.distance = d;
          best.point = q;
          best.face = f;
        }
      }
      return;
    }
    double dl = nodes[node.left].box.sq_distance(p);
    double dr = nodes[node.right].box.sq_distance(p);
    int first = node.left, second = node.right;
    if (dr < dl) {
      std::swap(first, second);
      std::swap(dl, dr);
    }
    if (dl < best.distance * best.distance) query(first, p, best);
    if (dr < best.distance * best.distance) query(second, p, best);
  }
};

SurfaceBvh::SurfaceBvh(const SurfaceMesh& mesh) : impl_(std::make_unique<Impl>()) {
  if (mesh.faces.empty()) throw GeomError("SurfaceBvh: empty mesh");
  impl_->mesh = mesh;
  const int n = static_cast<int>(mesh.faces.size());
  impl_->tri_order.resize(n);
  std::iota(impl_->tri_order.begin(), impl_->tri_order.end(), 0);
  std::vector<Aabb> tri_boxes(n);
  std::vector<Vec3> centroids(n);
  for (int f = 0; f < n; ++f) {
    const auto& face = mesh.faces[f];
    for (int k = 0; k < 3; ++k) tri_boxes[f].grow(mesh.vertices[face[k]]);
    centroids[f] =
        (mesh.vertices[face[0]] + mesh.vertices[face[1]] + mesh.vertices[face[2]]) / 3.0;
  }
  impl_->nodes.reserve(2 * n);
  impl_->build(tri_boxes, centroids, 0, n);
}

SurfaceBvh::~SurfaceBvh() = default;
SurfaceBvh::SurfaceBvh(SurfaceBvh&&) noexcept = default;
SurfaceBvh& SurfaceBvh::operator=(SurfaceBvh&&) noexcept = default;

ClosestPointResult SurfaceBvh::closest_point(const Vec3& v) const {
  ClosestPointResult best;
  best.distance = std::numeric_limits<double>::infinity();
  impl_->query(0, v, best);
  return best;
}

const SurfaceMesh& SurfaceBvh::mesh() const { return impl_->mesh; }

ClosestPointResult closest_point_on_surface(const Vec3& v, const SurfaceBvh& bvh) {
  return bvh.closest_point(v);
}

std::vector<Vec3> vertex_pseudonormals(const SurfaceMesh& mesh) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (const auto& face : mesh.faces) {
    const Vec3& a = mesh.vertices[face[0]];
    const Vec3& b = mesh.vertices[face[1]];
    const Vec3& c = mesh.vertices[face[2]];
    const Vec3 n = (b - a).cross(c - a);
    const double nn = n.norm();
    if (nn == 0.0) continue;
    const Vec3 unit = n / nn;
    const Vec3* p[3] = {&a, &b, &c};
    for (int k = 0; k < 3; ++k) {
      const Vec3 e1 = (*p[(k + 1) % 3] - *p[k]).normalized();
      const Vec3 e2 = (*p[(k + 2) % 3] - *p[k]).normalized();
      const double angle = std::acos(std::clamp(e1.dot(e2), -1.0, 1.0));
      normals[face[k]] += angle * unit;
    }
  }
  for (Vec3& n : normals) {
    const double nn = n.norm();
    if (nn > 0.0) n /= nn;
  }
  return normals;
}

}  // namespace tempfit

// Acceptance suite: one pass/fail line per criterion.

#include "tempfit/config.hpp"
#include "tempfit/geom.hpp"
#include "tempfit/mesh.hpp"
#include "tempfit/ridge.hpp"
#include "tempfit/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

using namespace tempfit;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool ok, const std::string& detail = "") {
  std::printf("%s  criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, name,
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::mt19937_64 g_rng(1234);

Vec3 random_vec(double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return Vec3(d(g_rng), d(g_rng), d(g_rng));
}

Mat3 random_rotation() { return Eigen::Quaterniond::UnitRandom().toRotationMatrix(); }

// worked ridge fixture: head mean (0,0,-1), axis on x, plane z=0
SurfaceMesh ridge_head() {
  SurfaceMesh head;
  head.vertices = {
      {0, 0, -1}, {1, 0, -2}, {-1, 0, -2}, {0, 1, -2}, {0, -1, 4},
      {0, 0, 0.3}, {0, 0, 0}, {-1, 0, 0.5}, {0, 0, 0}, {0.5, 0, 0.2},
  };
  Vec3 sum = Vec3::Zero();
  for (const Vec3& v : head.vertices) sum += v;
  head.vertices[4] -= sum - Vec3(0, 0, -10);
  return head;
}

SurfaceMesh ellipsoid_target(double radius) {
  SurfaceMesh t = synth_sphere(3, radius);
  for (Vec3& v : t.vertices) {
    v.y() *= 1.2;
    v.z() *= 0.8;
  }
  return t;
}

std::vector<Constraint> strain_constraints(const TetMesh& mesh, double alpha, double weight) {
  std::vector<Constraint> out;
  for (const auto& tet : mesh.tets) {
    std::array<Vec3, 4> rest{mesh.vertices[tet[0]], mesh.vertices[tet[1]], mesh.vertices[tet[2]],
                             mesh.vertices[tet[3]]};
    out.push_back(make_tet_strain(tet, rest, alpha, weight));
  }
  return out;
}

void criterion_1_ridge_oracle() {
  const auto t0 = Clock::now();
  const SurfaceMesh head = ridge_head();
  const Cylinder cyl{Vec3(-1, 0, 0), Vec3(1, 0, 0), 0.35};

  const RidgeTargets rt = ridge({5, 7, 9}, head, cyl, 0.025);
  bool ok = rt.entries.size() == 3 &&
            (rt.entries[0].target - Vec3(0, 0, 2)).norm() < 1e-12 &&
            (rt.entries[1].target - Vec3(-1, 0, 0)).norm() < 1e-12 &&
            (rt.entries[2].target - Vec3(0.5, 0, 1)).norm() < 1e-12;

  for (int trial = 0; ok && trial < 100; ++trial) {
    const Mat3 rot = random_rotation();
    const Vec3 t = random_vec(5.0);
    SurfaceMesh moved_head = head;
    for (Vec3& v : moved_head.vertices) v = rot * v + t;
    const Cylinder moved_cyl{rot * cyl.start + t, rot * cyl.end + t, cyl.radius};
    const RidgeTargets moved = ridge({5, 7, 9}, moved_head, moved_cyl, 0.025);
    for (std::size_t k = 0; k < 3; ++k)
      if ((moved.entries[k].target - (rot * rt.entries[k].target + t)).norm() >= 1e-9) ok = false;
  }
  const double dt = seconds_since(t0);
  report(1, "ridge oracle suite", ok && dt < 1.0,
         "targets to 1e-12, equivariance to 1e-9, " + std::to_string(dt) + " s");
}

void criterion_2_defaults() {
  const Config c = resolve_config("", {});
  const bool ok = c.weights.target == 1e2 && c.weights.tet_s == 1e1 && c.weights.tet_j == 1e4 &&
                  c.weights.tet_c == 1e4 && c.weights.push == 1e2 && c.weights.pull == 1e2 &&
                  c.weights.correspondence == 1e2 && c.params.pd_iterations == 10 &&
                  c.params.alpha == 0.01 && c.params.l_min == 0.025 &&
                  c.params.contact_margin == 0.005 && c.params.timestep == 0.05 &&
                  c.params.delta_eps == 0.05;
  report(2, "defaults fidelity", ok);
}

void criterion_3_pd_descent() {
  const auto t0 = Clock::now();
  const TetMesh mesh = synth_sphere_tet(6, 0.1);  // about a thousand tets
  const SurfaceMesh boundary = extract_boundary(mesh);
  const SurfaceMesh target = ellipsoid_target(0.1);

  SolverParams params;
  params.max_outer_iterations = 20;
  const FitResult r = fit(mesh, boundary, target, nullptr, Weights{}, params);

  // the history holds pd_iterations entries per outer solve; descent is
  // required within each solve
  bool ok = !r.state.energy_history.empty() &&
            r.state.energy_history.size() % params.pd_iterations == 0;
  for (std::size_t base = 0; ok && base < r.state.energy_history.size();
       base += params.pd_iterations) {
    for (int k = 1; k < params.pd_iterations; ++k) {
      const double prev = r.state.energy_history[base + k - 1];
      const double cur = r.state.energy_history[base + k];
      if (cur > prev * (1.0 + 1e-9) + 1e-15) ok = false;
    }
  }
  const double dt = seconds_since(t0);
  report(3, "PD descent on sphere-to-ellipsoid", ok && dt < 30.0,
         std::to_string(mesh.tets.size()) + " tets, " + std::to_string(dt) + " s");
}

void criterion_4_gradients() {
  const TetMesh mesh = synth_sphere_tet(3, 0.1);
  std::vector<Constraint> cs = strain_constraints(mesh, 0.01, 10.0);
  cs.push_back(make_target(0, random_vec(0.1), 1e2));
  const System sys = assemble({mesh}, cs, SolverParams{});

  bool fd_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> q = mesh.vertices;
    for (Vec3& v : q) v += random_vec(0.02);
    const std::vector<Vec3> anchor = mesh.vertices;
    const auto projections = local_step(cs, q);
    const std::vector<Vec3> grad = quadratic_gradient(sys, cs, projections, q, anchor);
    double gnorm2 = 0.0, err2 = 0.0;
    const double h = 1e-7;
    for (std::size_t i = 0; i < q.size(); ++i)
      for (int axis = 0; axis < 3; ++axis) {
        std::vector<Vec3> qp = q, qm = q;
        qp[i][axis] += h;
        qm[i][axis] -= h;
        const double fd = (quadratic_energy(sys, cs, projections, qp, anchor) -
                           quadratic_energy(sys, cs, projections, qm, anchor)) /
                          (2.0 * h);
        gnorm2 += grad[i][axis] * grad[i][axis];
        err2 += (fd - grad[i][axis]) * (fd - grad[i][axis]);
      }
    if (std::sqrt(err2) >= 1e-4 * std::sqrt(gnorm2)) fd_ok = false;
  }

  bool opt_ok = true;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Vec3> q = mesh.vertices;
    for (Vec3& v : q) v += random_vec(0.01);
    const auto projections = local_step(cs, q);
    const std::vector<Vec3> sol = global_step(sys, cs, projections, q);
    double gnorm2 = 0.0, scale2 = 0.0;
    const std::vector<Vec3> g_sol = quadratic_gradient(sys, cs, projections, sol, q);
    const std::vector<Vec3> g_pre = quadratic_gradient(sys, cs, projections, q, q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      gnorm2 += g_sol[i].squaredNorm();
      scale2 += g_pre[i].squaredNorm();
    }
    if (std::sqrt(gnorm2) >= 1e-8 * std::max(std::sqrt(scale2), 1.0)) opt_ok = false;
  }
  report(4, "global-step optimality and gradient checks", fd_ok && opt_ok);
}

void criterion_5_strain_invariance() {
  const std::array<Vec3, 4> rest{Vec3(0, 0, 0), Vec3(0.1, 0, 0), Vec3(0, 0.1, 0),
                                 Vec3(0, 0, 0.1)};
  const Constraint c = make_tet_strain({0, 1, 2, 3}, rest, 0.01, 10.0);

  bool rigid_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 rot = random_rotation();
    const Vec3 t = random_vec(1.0);
    std::vector<Vec3> q(4);
    for (int i = 0; i < 4; ++i) q[i] = rot * rest[i] + t;
    if (std::abs(constraint_energy(c, q)) >= 1e-10) rigid_ok = false;
  }

  bool clamp_ok = true;
  const double alpha = 0.01;
  for (int trial = 0; trial < 100; ++trial) {
    std::array<Vec3, 4> cur;
    for (int i = 0; i < 4; ++i) cur[i] = rest[i] + random_vec(0.05);
    const Mat3 f = deformation_gradient(c.rest_inv, cur);
    const Mat3 f_proj = project_tet_strain_gradient(c.rest_inv, cur, alpha);
    Eigen::JacobiSVD<Mat3> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 s = svd.singularValues();
    Mat3 u = svd.matrixU();
    if (f.determinant() < 0) {
      s(2) = -s(2);
      u.col(2) *= -1;
    }
    for (int k = 0; k < 3; ++k) s(k) = std::clamp(s(k), 1.0 / (1 + alpha), 1 + alpha);
    const Mat3 oracle = u * s.asDiagonal() * svd.matrixV().transpose();
    if ((f_proj - oracle).norm() >= 1e-8) clamp_ok = false;
  }
  report(5, "strain-constraint invariance and clamp", rigid_ok && clamp_ok);
}

void criterion_6_closest_point_oracle() {
  const SurfaceMesh sphere = synth_sphere(3, 1.0);
  const SurfaceBvh bvh(sphere);
  bool ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec3 v = random_vec(2.0);
    const auto fast = bvh.closest_point(v);
    const auto slow = closest_point_brute_force(v, sphere);
    if (std::abs(fast.distance - slow.distance) >= 1e-10) ok = false;
  }
  report(6, "closest-point BVH equals brute force", ok, "1000 queries");
}

void criterion_7_desk_scale_fit() {
  const auto t0 = Clock::now();
  const TetMesh mesh = synth_sphere_tet(6, 0.1);
  const SurfaceMesh boundary = extract_boundary(mesh);
  const SurfaceMesh target = ellipsoid_target(0.1);

  SolverParams params;
  params.max_outer_iterations = 20;
  const FitResult a = fit(mesh, boundary, target, nullptr, Weights{}, params);
  const FitResult b = fit(mesh, boundary, target, nullptr, Weights{}, params);

  const bool reduced = !a.reports.empty() &&
                       a.reports.back().mean_surface_dist < 0.1 * a.initial_mean_surface_dist;
  bool deterministic = a.state.energy_history.size() == b.state.energy_history.size();
  for (std::size_t i = 0; deterministic && i < a.state.energy_history.size(); ++i)
    if (a.state.energy_history[i] != b.state.energy_history[i]) deterministic = false;

  const double dt = seconds_since(t0);
  char detail[160];
  std::snprintf(detail, sizeof(detail), "mean dist %.3g -> %.3g in %zu outer iter, %.2f s",
                a.initial_mean_surface_dist,
                a.reports.empty() ? -1.0 : a.reports.back().mean_surface_dist, a.reports.size(),
                dt);
  report(7, "desk-scale fit", reduced && deterministic && dt < 60.0, detail);
}

void criterion_8_asset_check() {
  const char* dir = std::getenv("TEMPFIT_ASSET_DIR");
  if (!dir) {
    std::printf("SKIP  criterion 8: asset check (TEMPFIT_ASSET_DIR not set)\n");
    return;
  }
  bool ok = true;
  std::string detail;
  try {
    const SurfaceMesh head = parse_obj_file(std::string(dir) + "/head.obj");
    ok = head.vertices.size() == 6688 && head.faces.size() == 13372;
    detail = std::to_string(head.vertices.size()) + " vertices, " +
             std::to_string(head.faces.size()) + " faces";
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  report(8, "asset check", ok, detail);
}

}  // namespace

int main() {
  criterion_1_ridge_oracle();
  criterion_2_defaults();
  criterion_3_pd_descent();
  criterion_4_gradients();
  criterion_5_strain_invariance();
  criterion_6_closest_point_oracle();
  criterion_7_desk_scale_fit();
  criterion_8_asset_check();
  if (g_failures) std::printf("%d criterion(s) FAILED\n", g_failures);
  else std::printf("all criteria passed\n");
  return g_failures == 0 ? 0 : 1;
}

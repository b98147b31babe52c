#include "tempfit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace tempfit {

namespace {

// Maps the 4 tet vertices to the 3 edge vectors: row 0 is the pivot.
Eigen::Matrix<double, 4, 3> edge_selector() {
  Eigen::Matrix<double, 4, 3> e;
  e << -1, -1, -1, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  return e;
}

bool positional(ConstraintKind kind) { return kind != ConstraintKind::TetStrain; }

}  // namespace

System assemble(const std::vector<TetMesh>& tet_meshes, const std::vector<Constraint>& constraints,
                const SolverParams& params) {
  System sys;
  for (const TetMesh& m : tet_meshes) sys.n += static_cast<int>(m.vertices.size());
  if (sys.n == 0) throw SolverError("assemble: no vertices");
  sys.inv_h2 = 1.0 / (params.timestep * params.timestep);

  // lumped masses: a quarter of each incident tet's volume times density
  sys.mass = Eigen::VectorXd::Zero(sys.n);
  int offset = 0;
  for (const TetMesh& m : tet_meshes) {
    for (const auto& tet : m.tets) {
      const double vol = signed_tet_volume(m.vertices[tet[0]], m.vertices[tet[1]],
                                           m.vertices[tet[2]], m.vertices[tet[3]]);
      for (int k = 0; k < 4; ++k) sys.mass(offset + tet[k]) += 0.25 * vol * params.density;
    }
    offset += static_cast<int>(m.vertices.size());
  }
  for (int i = 0; i < sys.n; ++i)
    if (!(sys.mass(i) > 0.0))
      throw SolverError("assemble: zero-mass vertex " + std::to_string(i));

  const Eigen::Matrix<double, 4, 3> sel = edge_selector();
  sys.tet_maps.resize(constraints.size());
  sys.eff_weights.resize(constraints.size());

  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < sys.n; ++i) triplets.emplace_back(i, i, sys.mass(i) * sys.inv_h2);
  for (std::size_t ci = 0; ci < constraints.size(); ++ci) {
    const Constraint& c = constraints[ci];
    const double w = c.weight * c.measure;
    sys.eff_weights[ci] = w;
    if (positional(c.kind)) {
      const int v = c.indices[0];
      if (v < 0 || v >= sys.n) throw SolverError("assemble: constraint index out of range");
      triplets.emplace_back(v, v, w);
    } else {
      for (int k = 0; k < 4; ++k)
        if (c.indices[k] < 0 || c.indices[k] >= sys.n)
          throw SolverError("assemble: constraint index out of range");
      const Eigen::Matrix<double, 4, 3> map = sel * c.rest_inv;
      sys.tet_maps[ci] = map;
      const Eigen::Matrix4d g = map * map.transpose();
      for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s) triplets.emplace_back(c.indices[r], c.indices[s], w * g(r, s));
    }
  }

  sys.matrix.resize(sys.n, sys.n);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.factorization = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  sys.factorization->compute(sys.matrix);
  if (sys.factorization->info() != Eigen::Success)
    throw SolverError("assemble: factorization failed (matrix not SPD)");
  const Eigen::VectorXd d = sys.factorization->vectorD();
  for (int i = 0; i < d.size(); ++i)
    if (!(d(i) > 0.0))
      throw SolverError("assemble: matrix not SPD, non-positive pivot at index " +
                        std::to_string(i));
  return sys;
}

std::vector<Projection> local_step(const std::vector<Constraint>& constraints,
                                   const std::vector<Vec3>& q) {
  std::vector<Projection> projections(constraints.size());
  for (std::size_t i = 0; i < constraints.size(); ++i) projections[i] = project(constraints[i], q);
  return projections;
}

std::vector<Vec3> global_step(const System& system, const std::vector<Constraint>& constraints,
                              const std::vector<Projection>& projections,
                              const std::vector<Vec3>& anchor) {
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(system.n, 3);
  for (int i = 0; i < system.n; ++i)
    rhs.row(i) = system.mass(i) * system.inv_h2 * anchor[i].transpose();

  for (std::size_t ci = 0; ci < constraints.size(); ++ci) {
    const Constraint& c = constraints[ci];
    const double w = system.eff_weights[ci];
    if (positional(c.kind)) {
      rhs.row(c.indices[0]) += w * projections[ci].point.transpose();
    } else {
      // rows of F* gather per coordinate
      const Eigen::Matrix<double, 4, 3> contrib =
          w * system.tet_maps[ci] * projections[ci].strain.transpose();
      for (int k = 0; k < 4; ++k) rhs.row(c.indices[k]) += contrib.row(k);
    }
  }

  const Eigen::MatrixXd sol = system.factorization->solve(rhs);
  std::vector<Vec3> q(system.n);
  for (int i = 0; i < system.n; ++i) {
    q[i] = sol.row(i).transpose();
    if (!q[i].allFinite()) throw SolverError("global_step: non-finite solution (divergence)");
  }
  return q;
}

double quadratic_energy(const System& system, const std::vector<Constraint>& constraints,
                        const std::vector<Projection>& projections, const std::vector<Vec3>& q,
                        const std::vector<Vec3>& anchor) {
  double e = 0.0;
  for (int i = 0; i < system.n; ++i)
    e += 0.5 * system.mass(i) * system.inv_h2 * (q[i] - anchor[i]).squaredNorm();
  for (std::size_t ci = 0; ci < constraints.size(); ++ci) {
    const Constraint& c = constraints[ci];
    const double w = system.eff_weights[ci];
    if (positional(c.kind)) {
      e += 0.5 * w * (q[c.indices[0]] - projections[ci].point).squaredNorm();
    } else {
      std::array<Vec3, 4> p{q[c.indices[0]], q[c.indices[1]], q[c.indices[2]], q[c.indices[3]]};
      e += 0.5 * w * (deformation_gradient(c.rest_inv, p) - projections[ci].strain).squaredNorm();
    }
  }
  return e;
}

std::vector<Vec3> quadratic_gradient(const System& system,
                                     const std::vector<Constraint>& constraints,
                                     const std::vector<Projection>& projections,
                                     const std::vector<Vec3>& q, const std::vector<Vec3>& anchor) {
  std::vector<Vec3> grad(system.n, Vec3::Zero());
  for (int i = 0; i < system.n; ++i)
    grad[i] = system.mass(i) * system.inv_h2 * (q[i] - anchor[i]);
  for (std::size_t ci = 0; ci < constraints.size(); ++ci) {
    const Constraint& c = constraints[ci];
    const double w = system.eff_weights[ci];
    if (positional(c.kind)) {
      grad[c.indices[0]] += w * (q[c.indices[0]] - projections[ci].point);
    } else {
      std::array<Vec3, 4> p{q[c.indices[0]], q[c.indices[1]], q[c.indices[2]], q[c.indices[3]]};
      const Mat3 resid = deformation_gradient(c.rest_inv, p) - projections[ci].strain;
      // d/dq of w/2 ||L^T q_r - F*(r,:)||^2 per coordinate r
      const Eigen::Matrix<double, 4, 3> g = w * system.tet_maps[ci] * resid.transpose();
      for (int k = 0; k < 4; ++k) grad[c.indices[k]] += g.row(k).transpose();
    }
  }
  return grad;
}

double total_energy(const std::vector<Constraint>& constraints, const std::vector<Vec3>& q) {
  double e = 0.0;
  for (const Constraint& c : constraints) e += constraint_energy(c, q);
  return e;
}

FitState pd_iterate(const FitState& state, const System& system,
                    const std::vector<Constraint>& constraints) {
  if (static_cast<int>(state.q.size()) != system.n)
    throw SolverError("pd_iterate: state size does not match system");
  const std::vector<Projection> projections = local_step(constraints, state.q);
  FitState next;
  next.q = global_step(system, constraints, projections, state.q);
  next.q_prev = state.q;
  next.energy_history = state.energy_history;
  next.energy_history.push_back(total_energy(constraints, next.q));
  return next;
}

FitState pd_solve(const FitState& state, const System& system,
                  const std::vector<Constraint>& constraints, const SolverParams& params) {
  if (params.pd_iterations < 1) throw SolverError("pd_solve: pd_iterations must be >= 1");
  FitState cur = state;
  for (int it = 0; it < params.pd_iterations; ++it) cur = pd_iterate(cur, system, constraints);
  return cur;
}

namespace {

std::vector<int> boundary_vertex_ids(const SurfaceMesh& boundary) {
  std::set<int> ids;
  for (const auto& f : boundary.faces) ids.insert(f.begin(), f.end());
  return {ids.begin(), ids.end()};
}

double mean_surface_distance(const std::vector<Vec3>& q, const std::vector<int>& ids,
                             const SurfaceBvh& target) {
  if (ids.empty()) return 0.0;
  double sum = 0.0;
  for (int i : ids) sum += target.closest_point(q[i]).distance;
  return sum / static_cast<double>(ids.size());
}

}  // namespace

FitResult fit(const TetMesh& template_mesh, const SurfaceMesh& boundary,
              const SurfaceMesh& target, const RidgeTargets* ridge_targets,
              const Weights& weights, const SolverParams& params) {
  const int n = static_cast<int>(template_mesh.vertices.size());
  for (const auto& f : boundary.faces)
    for (int v : f)
      if (v < 0 || v >= n)
        throw SolverError("fit: boundary face indexes outside the template tet mesh");

  // fixed constraints: strain limiting per tet, optional ridge targets
  std::vector<Constraint> fixed;
  fixed.reserve(template_mesh.tets.size());
  for (const auto& tet : template_mesh.tets) {
    std::array<Vec3, 4> rest{template_mesh.vertices[tet[0]], template_mesh.vertices[tet[1]],
                             template_mesh.vertices[tet[2]], template_mesh.vertices[tet[3]]};
    fixed.push_back(make_tet_strain(tet, rest, params.alpha, weights.tet_s));
  }
  if (ridge_targets) {
    for (const RidgeEntry& e : ridge_targets->entries)
      fixed.push_back(make_target(e.index, e.target, weights.target));
  }

  const SurfaceBvh target_bvh(target);
  const std::vector<int> surf_ids = boundary_vertex_ids(boundary);

  FitResult result;
  result.state.q = template_mesh.vertices;
  result.state.q_prev = template_mesh.vertices;
  result.initial_mean_surface_dist = mean_surface_distance(result.state.q, surf_ids, target_bvh);

  System system;
  std::vector<int> prev_corr_ids{-1};  // force first assembly
  std::vector<Constraint> constraints;
  double prev_energy = std::numeric_limits<double>::quiet_NaN();
  int empty_streak = 0;

  for (int outer = 1; outer <= params.max_outer_iterations; ++outer) {
    // current boundary geometry for correspondence search
    SurfaceMesh skin;
    skin.vertices = result.state.q;
    skin.faces = boundary.faces;
    const std::vector<Vec3> normals_all = vertex_pseudonormals(skin);
    std::vector<Vec3> src_pos, src_nrm;
    for (int i : surf_ids) {
      src_pos.push_back(result.state.q[i]);
      src_nrm.push_back(normals_all[i]);
    }
    std::vector<Constraint> corr =
        build_correspondences(src_pos, src_nrm, surf_ids, target_bvh, params.corr_dist_limit(),
                              params.max_corr_angle_deg, weights.correspondence);
    if (corr.empty()) {
      if (++empty_streak >= 3)
        throw SolverError("fit: no correspondences for 3 consecutive outer iterations "
                          "(template and target appear misaligned)");
    } else {
      empty_streak = 0;
    }

    std::vector<int> corr_ids;
    for (const Constraint& c : corr) corr_ids.push_back(c.indices[0]);
    const bool topology_changed = corr_ids != prev_corr_ids;

    constraints = fixed;
    constraints.insert(constraints.end(), corr.begin(), corr.end());
    if (topology_changed) {
      system = assemble({template_mesh}, constraints, params);
      prev_corr_ids = corr_ids;
    }

    if (outer == 1) prev_energy = total_energy(constraints, result.state.q);

    result.state.q_prev = result.state.q;  // quasi-static: no carried velocity
    result.state = pd_solve(result.state, system, constraints, params);

    const double energy = total_energy(constraints, result.state.q);
    OuterReport rep;
    rep.outer_iter = outer;
    rep.energy = energy;
    rep.n_correspondences = static_cast<int>(corr.size());
    rep.mean_surface_dist = mean_surface_distance(result.state.q, surf_ids, target_bvh);
    result.reports.push_back(rep);

    const double denom = std::max(prev_energy, std::numeric_limits<double>::epsilon());
    if (!corr.empty() && std::abs(energy - prev_energy) / denom < params.delta_eps) {
      result.converged = true;
      break;
    }
    prev_energy = energy;
  }
  return result;
}

}  // namespace tempfit

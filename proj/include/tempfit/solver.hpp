#pragma once

#include "tempfit/constraints.hpp"
#include "tempfit/mesh.hpp"
#include "tempfit/ridge.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace tempfit {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverParams {
  int pd_iterations = 10;
  double alpha = 0.01;           // strain band half-width
  double l_min = 0.025;          // minimum cylinder length [m]
  double contact_margin = 0.005; // push offset [m]
  double timestep = 0.05;        // [s]
  double delta_eps = 0.05;       // relative-energy stopping threshold
  double density = 1000.0;       // [kg/m^3]
  int max_outer_iterations = 50;
  double max_corr_dist = 0.0;       // 0 -> 10 * contact_margin
  double max_corr_angle_deg = 60.0;

  double corr_dist_limit() const {
    return max_corr_dist > 0.0 ? max_corr_dist : 10.0 * contact_margin;
  }
};

// Prefactorized global step. The matrix is coordinate-separable, so one
// n x n factorization serves x, y and z.
struct System {
  int n = 0;
  Eigen::VectorXd mass;                  // lumped, [kg]
  double inv_h2 = 0.0;                   // 1 / timestep^2
  Eigen::SparseMatrix<double> matrix;    // M/s^2 + sum w_i G_i
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factorization;
  // per-constraint reduction data, aligned with the constraint list
  std::vector<Eigen::Matrix<double, 4, 3>> tet_maps;  // E * rest_inv for TetStrain
  std::vector<double> eff_weights;                     // weight * measure
};

struct FitState {
  std::vector<Vec3> q;
  std::vector<Vec3> q_prev;
  std::vector<double> energy_history;
};

System assemble(const std::vector<TetMesh>& tet_meshes, const std::vector<Constraint>& constraints,
                const SolverParams& params);

// Local step: every constraint's projection at the given positions.
std::vector<Projection> local_step(const std::vector<Constraint>& constraints,
                                   const std::vector<Vec3>& q);

// Global step: minimizes the quadratic with projections held fixed, inertial
// anchor s_n.
std::vector<Vec3> global_step(const System& system, const std::vector<Constraint>& constraints,
                              const std::vector<Projection>& projections,
                              const std::vector<Vec3>& anchor);

// Quadratic objective and its analytic gradient at fixed projections
// (momentum term included).
double quadratic_energy(const System& system, const std::vector<Constraint>& constraints,
                        const std::vector<Projection>& projections, const std::vector<Vec3>& q,
                        const std::vector<Vec3>& anchor);
std::vector<Vec3> quadratic_gradient(const System& system,
                                     const std::vector<Constraint>& constraints,
                                     const std::vector<Projection>& projections,
                                     const std::vector<Vec3>& q, const std::vector<Vec3>& anchor);

// Total constraint energy with projections recomputed at q.
double total_energy(const std::vector<Constraint>& constraints, const std::vector<Vec3>& q);

// One local/global sweep. The fit is quasi-static: the inertial anchor is the
// current position, which makes the momentum term a proximal regularizer and
// the per-iteration constraint energy non-increasing.
FitState pd_iterate(const FitState& state, const System& system,
                    const std::vector<Constraint>& constraints);

FitState pd_solve(const FitState& state, const System& system,
                  const std::vector<Constraint>& constraints, const SolverParams& params);

struct OuterReport {
  int outer_iter = 0;
  double energy = 0.0;
  int n_correspondences = 0;
  double mean_surface_dist = 0.0;
};

struct FitResult {
  FitState state;
  std::vector<OuterReport> reports;
  bool converged = false;
  double initial_mean_surface_dist = 0.0;
};

// Outer loop: rebuild correspondences, reassemble when the constraint
// topology changed, pd_solve, stop on the relative-energy threshold.
// The boundary surface must index vertices of the template tet mesh.
FitResult fit(const TetMesh& template_mesh, const SurfaceMesh& boundary,
              const SurfaceMesh& target, const RidgeTargets* ridge_targets,
              const Weights& weights, const SolverParams& params);

}  // namespace tempfit

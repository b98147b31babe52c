#pragma once

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace tempfit {

using Vec3 = Eigen::Vector3d;

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Triangle surface. Indices are 0-based internally; all parsers convert.
struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

// Tetrahedral volume. Tets are orientation-normalized at load so every
// signed volume is positive.
struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
};

struct MeshReport {
  std::int64_t vertex_count = 0;
  std::int64_t element_count = 0;
  double bbox_diag = 0.0;
  double min_measure = 0.0;  // min face area [m^2] or min tet volume [m^3]
  std::vector<std::string> defects;
  std::vector<std::string> warnings;  // e.g. zero-area faces; not defects
};

// OBJ subset: `v` and `f` records only, 1-based indices, optional `/attr`
// suffixes. Polygons are fan-triangulated from the first vertex.
SurfaceMesh parse_obj(std::istream& in);
SurfaceMesh parse_obj_file(const std::string& path);

std::string write_obj(const SurfaceMesh& mesh);

// TetGen ASCII .node/.ele pair. Base index (0 or 1) is taken from the first
// record. Negative-volume tets are fixed by swapping the last two indices.
TetMesh parse_tetgen(std::istream& node_in, std::istream& ele_in);
TetMesh parse_tetgen_files(const std::string& node_path, const std::string& ele_path);
void write_tetgen_files(const TetMesh& mesh, const std::string& node_path,
                        const std::string& ele_path);

Vec3 mesh_mean(const SurfaceMesh& mesh);

double signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
double bbox_diagonal(const std::vector<Vec3>& vertices);

MeshReport validate(const SurfaceMesh& mesh);
MeshReport validate(const TetMesh& mesh);

// Synthetic fixtures standing in for the template assets.
SurfaceMesh synth_sphere(int subdivisions, double radius);
TetMesh synth_sphere_tet(int resolution, double radius);

// Outward-oriented boundary triangles of a tet mesh. The returned surface
// shares the tet mesh vertex numbering (its faces index tet vertices).
SurfaceMesh extract_boundary(const TetMesh& mesh);

}  // namespace tempfit

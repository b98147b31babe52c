#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tempfit/mesh.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

using namespace tempfit;

TEST_CASE("parse_obj minimal triangle") {
  std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  const SurfaceMesh m = parse_obj(in);
  REQUIRE(m.vertices.size() == 3);
  REQUIRE(m.faces.size() == 1);
  CHECK(m.faces[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("parse_obj rejects out-of-range index") {
  std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
  CHECK_THROWS_AS(parse_obj(in), MeshError);
}

TEST_CASE("parse_obj fan-triangulates a quad") {
  std::istringstream in("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  const SurfaceMesh m = parse_obj(in);
  REQUIRE(m.faces.size() == 2);
  CHECK(m.faces[0] == std::array<int, 3>{0, 1, 2});
  CHECK(m.faces[1] == std::array<int, 3>{0, 2, 3});
}

TEST_CASE("parse_obj edge cases") {
  SUBCASE("attribute suffixes are stripped") {
    std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3\n");
    CHECK(parse_obj(in).faces.size() == 1);
  }
  SUBCASE("non-numeric coordinate") {
    std::istringstream in("v 0 zero 0\n");
    CHECK_THROWS_AS(parse_obj(in), MeshError);
  }
  SUBCASE("face with fewer than 3 vertices") {
    std::istringstream in("v 0 0 0\nv 1 0 0\nf 1 2\n");
    CHECK_THROWS_AS(parse_obj(in), MeshError);
  }
  SUBCASE("negative indices are unsupported") {
    std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -1 -2 -3\n");
    CHECK_THROWS_AS(parse_obj(in), MeshError);
  }
  SUBCASE("other record types are ignored") {
    std::istringstream in("vn 0 0 1\nvt 0 0\nusemtl m\nv 0 0 0\n");
    CHECK(parse_obj(in).vertices.size() == 1);
  }
}

TEST_CASE("write_obj round-trip") {
  SUBCASE("empty mesh") {
    const SurfaceMesh empty;
    std::istringstream in(write_obj(empty));
    const SurfaceMesh back = parse_obj(in);
    CHECK(back.vertices.empty());
    CHECK(back.faces.empty());
  }
  SUBCASE("random meshes round-trip exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
      SurfaceMesh m;
      for (int i = 0; i < 50; ++i) m.vertices.emplace_back(coord(rng), coord(rng), coord(rng));
      std::uniform_int_distribution<int> vid(0, 49);
      while (m.faces.size() < 30) {
        std::array<int, 3> f{vid(rng), vid(rng), vid(rng)};
        if (f[0] != f[1] && f[1] != f[2] && f[0] != f[2]) m.faces.push_back(f);
      }
      std::istringstream in(write_obj(m));
      const SurfaceMesh back = parse_obj(in);
      REQUIRE(back.vertices.size() == m.vertices.size());
      REQUIRE(back.faces == m.faces);
      for (std::size_t i = 0; i < m.vertices.size(); ++i)
        CHECK((back.vertices[i] - m.vertices[i]).norm() < 1e-9);
    }
  }
}

namespace {

const char* kUnitTetNodes =
    "4 3 0 0\n"
    "1 0 0 0\n"
    "2 1 0 0\n"
    "3 0 1 0\n"
    "4 0 0 1\n";

TetMesh parse_tet(const char* nodes, const char* eles) {
  std::istringstream node_in(nodes), ele_in(eles);
  return parse_tetgen(node_in, ele_in);
}

}  // namespace

TEST_CASE("parse_tetgen canonical unit tet") {
  const TetMesh m = parse_tet(kUnitTetNodes, "1 4 0\n1 1 2 3 4\n");
  REQUIRE(m.vertices.size() == 4);
  REQUIRE(m.tets.size() == 1);
  const auto& t = m.tets[0];
  CHECK(signed_tet_volume(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]],
                          m.vertices[t[3]]) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("parse_tetgen fixes orientation by swapping last two indices") {
  const TetMesh m = parse_tet(kUnitTetNodes, "1 4 0\n1 1 2 4 3\n");
  REQUIRE(m.tets.size() == 1);
  const auto& t = m.tets[0];
  const double vol = signed_tet_volume(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]],
                                       m.vertices[t[3]]);
  CHECK(vol == doctest::Approx(1.0 / 6.0));
  CHECK(vol > 0);
}

TEST_CASE("parse_tetgen error paths") {
  SUBCASE("node reference out of range") {
    CHECK_THROWS_AS(parse_tet(kUnitTetNodes, "1 4 0\n1 1 2 3 7\n"), MeshError);
  }
  SUBCASE("record count mismatch") {
    CHECK_THROWS_AS(parse_tet(kUnitTetNodes, "2 4 0\n1 1 2 3 4\n"), MeshError);
  }
  SUBCASE("zero-volume tet") {
    const char* nodes =
        "4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 1 1 0\n";  // coplanar
    CHECK_THROWS_AS(parse_tet(nodes, "1 4 0\n1 1 2 3 4\n"), MeshError);
  }
  SUBCASE("0-based indexing is accepted") {
    const TetMesh m = parse_tet(
        "4 3 0 0\n0 0 0 0\n1 1 0 0\n2 0 1 0\n3 0 0 1\n", "1 4 0\n0 0 1 2 3\n");
    CHECK(m.tets.size() == 1);
  }
}

TEST_CASE("mesh_mean") {
  SurfaceMesh m;
  SUBCASE("two points") {
    m.vertices = {{0, 0, 0}, {2, 0, 0}};
    CHECK((mesh_mean(m) - Vec3(1, 0, 0)).norm() == 0.0);
  }
  SUBCASE("single vertex is identity") {
    m.vertices = {{3.5, -1.25, 0.75}};
    CHECK((mesh_mean(m) - Vec3(3.5, -1.25, 0.75)).norm() == 0.0);
  }
  SUBCASE("unit tet corners") {
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    CHECK((mesh_mean(m) - Vec3(0.25, 0.25, 0.25)).norm() < 1e-15);
  }
  SUBCASE("empty mesh throws") { CHECK_THROWS_AS(mesh_mean(m), MeshError); }
  SUBCASE("translation equivariance") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    for (int i = 0; i < 40; ++i) m.vertices.emplace_back(coord(rng), coord(rng), coord(rng));
    const Vec3 t(0.1, -2.0, 3.7);
    SurfaceMesh shifted = m;
    for (Vec3& v : shifted.vertices) v += t;
    CHECK((mesh_mean(shifted) - (mesh_mean(m) + t)).norm() < 1e-12);
  }
}

TEST_CASE("synth_sphere level 0 is an icosahedron") {
  const SurfaceMesh m = synth_sphere(0, 1.0);
  CHECK(m.vertices.size() == 12);
  CHECK(m.faces.size() == 20);
  for (const Vec3& v : m.vertices) CHECK(v.norm() == doctest::Approx(1.0));
  CHECK(validate(m).defects.empty());
}

TEST_CASE("synth_sphere_tet fixtures are valid and fill the ball") {
  const TetMesh m = synth_sphere_tet(16, 1.0);
  const MeshReport rep = validate(m);
  CHECK(rep.defects.empty());
  double total = 0.0;
  for (const auto& t : m.tets)
    total += signed_tet_volume(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]],
                               m.vertices[t[3]]);
  const double ball = 4.0 * M_PI / 3.0;
  CHECK(std::abs(total - ball) / ball < 0.05);
}

TEST_CASE("synth_sphere_tet rejects bad inputs") {
  CHECK_THROWS_AS(synth_sphere_tet(1, 1.0), MeshError);
  CHECK_THROWS_AS(synth_sphere_tet(16, -1.0), MeshError);
  CHECK_THROWS_AS(synth_sphere(-1, 1.0), MeshError);
}

TEST_CASE("validate flags seeded defects distinctly") {
  SurfaceMesh good = synth_sphere(1, 1.0);
  SUBCASE("out-of-range face index") {
    SurfaceMesh bad = good;
    bad.faces[0][1] = 9999;
    const auto defects = validate(bad).defects;
    REQUIRE(defects.size() == 1);
    CHECK(defects[0].find("out of range") != std::string::npos);
  }
  SUBCASE("duplicated vertex in face") {
    SurfaceMesh bad = good;
    bad.faces[2][1] = bad.faces[2][0];
    const auto defects = validate(bad).defects;
    REQUIRE(defects.size() == 1);
    CHECK(defects[0].find("repeats a vertex") != std::string::npos);
  }
  SUBCASE("inverted tet") {
    TetMesh bad = synth_sphere_tet(4, 1.0);
    std::swap(bad.tets[0][2], bad.tets[0][3]);
    const auto defects = validate(bad).defects;
    REQUIRE(defects.size() == 1);
    CHECK(defects[0].find("inverted") != std::string::npos);
  }
  SUBCASE("zero-area face is a warning, not a defect") {
    SurfaceMesh bad = good;
    bad.vertices.push_back(bad.vertices[0]);
    bad.vertices.push_back(bad.vertices[0]);
    const int n = static_cast<int>(bad.vertices.size());
    bad.faces.push_back({0, n - 2, n - 1});
    const MeshReport rep = validate(bad);
    CHECK(rep.defects.empty());
    REQUIRE(rep.warnings.size() == 1);
    CHECK(rep.warnings[0].find("zero area") != std::string::npos);
  }
}

TEST_CASE("extract_boundary of a tet ball is closed and outward") {
  const TetMesh m = synth_sphere_tet(6, 1.0);
  const SurfaceMesh b = extract_boundary(m);
  REQUIRE(!b.faces.empty());
  // closed: every directed edge matched by its reverse
  std::map<std::pair<int, int>, int> edges;
  for (const auto& f : b.faces)
    for (int k = 0; k < 3; ++k) edges[{f[k], f[(k + 1) % 3]}]++;
  for (const auto& [e, c] : edges) {
    CHECK(c == 1);
    CHECK(edges.count({e.second, e.first}) == 1);
  }
  // outward: face normal points away from the origin
  for (const auto& f : b.faces) {
    const Vec3 n = (b.vertices[f[1]] - b.vertices[f[0]]).cross(b.vertices[f[2]] - b.vertices[f[0]]);
    const Vec3 centroid = (b.vertices[f[0]] + b.vertices[f[1]] + b.vertices[f[2]]) / 3.0;
    CHECK(n.dot(centroid) > 0.0);
  }
}

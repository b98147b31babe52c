#include "tempfit/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

namespace tempfit {

namespace {

bool finite3(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

double parse_coord(const std::string& tok, int line_no) {
  std::size_t pos = 0;
  double val = 0.0;
  try {
    val = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw MeshError("line " + std::to_string(line_no) + ": non-numeric coordinate '" + tok + "'");
  }
  if (pos != tok.size())
    throw MeshError("line " + std::to_string(line_no) + ": non-numeric coordinate '" + tok + "'");
  return val;
}

}  // namespace

SurfaceMesh parse_obj(std::istream& in) {
  SurfaceMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      std::string sx, sy, sz;
      if (!(ls >> sx >> sy >> sz))
        throw MeshError("line " + std::to_string(line_no) + ": vertex needs 3 coordinates");
      Vec3 v(parse_coord(sx, line_no), parse_coord(sy, line_no), parse_coord(sz, line_no));
      if (!finite3(v))
        throw MeshError("line " + std::to_string(line_no) + ": non-finite coordinate");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        // strip "/texcoord/normal" attributes
        const std::string head = tok.substr(0, tok.find('/'));
        long raw = 0;
        try {
          raw = std::stol(head);
        } catch (const std::exception&) {
          throw MeshError("line " + std::to_string(line_no) + ": bad face index '" + tok + "'");
        }
        if (raw < 0)
          throw MeshError("line " + std::to_string(line_no) +
                          ": negative (relative) indices are unsupported");
        if (raw == 0 || raw > static_cast<long>(mesh.vertices.size()))
          throw MeshError("line " + std::to_string(line_no) + ": face index " +
                          std::to_string(raw) + " out of range (have " +
                          std::to_string(mesh.vertices.size()) + " vertices)");
        idx.push_back(static_cast<int>(raw - 1));
      }
      if (idx.size() < 3)
        throw MeshError("line " + std::to_string(line_no) + ": face with fewer than 3 vertices");
      for (std::size_t k = 2; k < idx.size(); ++k) {
        std::array<int, 3> f{idx[0], idx[k - 1], idx[k]};
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
          throw MeshError("line " + std::to_string(line_no) + ": face repeats a vertex");
        mesh.faces.push_back(f);
      }
    }
    // all other record types ignored
  }
  return mesh;
}

SurfaceMesh parse_obj_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open '" + path + "'");
  return parse_obj(in);
}

std::string write_obj(const SurfaceMesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  for (const Vec3& v : mesh.vertices)
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  return out.str();
}

namespace {

// Reads one TetGen record line, skipping blanks and '#' comments.
bool next_record(std::istream& in, std::istringstream& rec) {
  std::string line;
  while (std::getline(in, line)) {
    const auto h = line.find('#');
    if (h != std::string::npos) line.erase(h);
    std::istringstream probe(line);
    std::string tok;
    if (probe >> tok) {
      rec = std::istringstream(line);
      return true;
    }
  }
  return false;
}

}  // namespace

TetMesh parse_tetgen(std::istream& node_in, std::istream& ele_in) {
  TetMesh mesh;
  std::istringstream rec;

  if (!next_record(node_in, rec)) throw MeshError(".node: missing header");
  long n_points = 0;
  int dim = 3;
  if (!(rec >> n_points >> dim)) throw MeshError(".node: bad header");
  if (dim != 3) throw MeshError(".node: dimension must be 3");
  if (n_points < 0) throw MeshError(".node: negative point count");

  long node_base = -1;
  std::vector<long> node_ids;
  node_ids.reserve(n_points);
  for (long i = 0; i < n_points; ++i) {
    if (!next_record(node_in, rec))
      throw MeshError(".node: expected " + std::to_string(n_points) + " records, got " +
                      std::to_string(i));
    long id;
    double x, y, z;
    if (!(rec >> id >> x >> y >> z)) throw MeshError(".node: bad record " + std::to_string(i));
    if (node_base < 0) node_base = id;
    Vec3 v(x, y, z);
    if (!finite3(v)) throw MeshError(".node: non-finite coordinate in record " + std::to_string(i));
    node_ids.push_back(id);
    mesh.vertices.push_back(v);
  }

  if (!next_record(ele_in, rec)) throw MeshError(".ele: missing header");
  long n_tets = 0;
  int per_tet = 4;
  if (!(rec >> n_tets >> per_tet)) throw MeshError(".ele: bad header");
  if (per_tet != 4) throw MeshError(".ele: only 4-node tets supported");

  const double diag = bbox_diagonal(mesh.vertices);
  const double vol_floor = 1e-12 * diag * diag * diag;

  for (long t = 0; t < n_tets; ++t) {
    if (!next_record(ele_in, rec))
      throw MeshError(".ele: expected " + std::to_string(n_tets) + " records, got " +
                      std::to_string(t));
    long id;
    std::array<long, 4> raw{};
    if (!(rec >> id >> raw[0] >> raw[1] >> raw[2] >> raw[3]))
      throw MeshError(".ele: bad record " + std::to_string(t));
    std::array<int, 4> tet{};
    for (int k = 0; k < 4; ++k) {
      const long local = raw[k] - node_base;
      if (local < 0 || local >= static_cast<long>(mesh.vertices.size()))
        throw MeshError(".ele: record " + std::to_string(t) + " references node " +
                        std::to_string(raw[k]) + ", out of range");
      tet[k] = static_cast<int>(local);
    }
    double vol = signed_tet_volume(mesh.vertices[tet[0]], mesh.vertices[tet[1]],
                                   mesh.vertices[tet[2]], mesh.vertices[tet[3]]);
    if (vol < 0) {
      std::swap(tet[2], tet[3]);
      vol = -vol;
    }
    if (vol <= vol_floor)
      throw MeshError(".ele: record " + std::to_string(t) + " is a zero-volume tet");
    mesh.tets.push_back(tet);
  }
  return mesh;
}

TetMesh parse_tetgen_files(const std::string& node_path, const std::string& ele_path) {
  std::ifstream node_in(node_path);
  if (!node_in) throw MeshError("cannot open '" + node_path + "'");
  std::ifstream ele_in(ele_path);
  if (!ele_in) throw MeshError("cannot open '" + ele_path + "'");
  return parse_tetgen(node_in, ele_in);
}

void write_tetgen_files(const TetMesh& mesh, const std::string& node_path,
                        const std::string& ele_path) {
  std::ofstream node_out(node_path);
  if (!node_out) throw MeshError("cannot open '" + node_path + "' for writing");
  node_out.precision(17);
  node_out << mesh.vertices.size() << " 3 0 0\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    node_out << i + 1 << ' ' << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  std::ofstream ele_out(ele_path);
  if (!ele_out) throw MeshError("cannot open '" + ele_path + "' for writing");
  ele_out << mesh.tets.size() << " 4 0\n";
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const auto& tet = mesh.tets[t];
    ele_out << t + 1 << ' ' << tet[0] + 1 << ' ' << tet[1] + 1 << ' ' << tet[2] + 1 << ' '
            << tet[3] + 1 << '\n';
  }
}

Vec3 mesh_mean(const SurfaceMesh& mesh) {
  if (mesh.vertices.empty()) throw MeshError("mesh_mean: empty mesh");
  Vec3 sum = Vec3::Zero();
  for (const Vec3& v : mesh.vertices) sum += v;
  return sum / static_cast<double>(mesh.vertices.size());
}

double signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

double bbox_diagonal(const std::vector<Vec3>& vertices) {
  if (vertices.empty()) return 0.0;
  Vec3 lo = vertices.front(), hi = vertices.front();
  for (const Vec3& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

MeshReport validate(const SurfaceMesh& mesh) {
  MeshReport rep;
  rep.vertex_count = static_cast<std::int64_t>(mesh.vertices.size());
  rep.element_count = static_cast<std::int64_t>(mesh.faces.size());
  rep.bbox_diag = bbox_diagonal(mesh.vertices);
  rep.min_measure = mesh.faces.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (!finite3(mesh.vertices[i]))
      rep.defects.push_back("non-finite coordinate at vertex " + std::to_string(i));
  }
  const int n = static_cast<int>(mesh.vertices.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    bool in_range = true;
    for (int k = 0; k < 3; ++k) {
      if (face[k] < 0 || face[k] >= n) {
        rep.defects.push_back("face " + std::to_string(f) + " index out of range");
        in_range = false;
        break;
      }
    }
    if (!in_range) continue;
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      rep.defects.push_back("face " + std::to_string(f) + " repeats a vertex");
      continue;
    }
    const double area =
        triangle_area(mesh.vertices[face[0]], mesh.vertices[face[1]], mesh.vertices[face[2]]);
    rep.min_measure = std::min(rep.min_measure, area);
    if (area == 0.0) rep.warnings.push_back("face " + std::to_string(f) + " has zero area");
  }
  if (mesh.faces.empty()) rep.min_measure = 0.0;
  return rep;
}

MeshReport validate(const TetMesh& mesh) {
  MeshReport rep;
  rep.vertex_count = static_cast<std::int64_t>(mesh.vertices.size());
  rep.element_count = static_cast<std::int64_t>(mesh.tets.size());
  rep.bbox_diag = bbox_diagonal(mesh.vertices);
  rep.min_measure = mesh.tets.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (!finite3(mesh.vertices[i]))
      rep.defects.push_back("non-finite coordinate at vertex " + std::to_string(i));
  }
  const int n = static_cast<int>(mesh.vertices.size());
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const auto& tet = mesh.tets[t];
    bool in_range = true;
    for (int k = 0; k < 4; ++k) {
      if (tet[k] < 0 || tet[k] >= n) {
        rep.defects.push_back("tet " + std::to_string(t) + " index out of range");
        in_range = false;
        break;
      }
    }
    if (!in_range) continue;
    const double vol = signed_tet_volume(mesh.vertices[tet[0]], mesh.vertices[tet[1]],
                                         mesh.vertices[tet[2]], mesh.vertices[tet[3]]);
    if (vol <= 0.0) {
      rep.defects.push_back("tet " + std::to_string(t) + " is inverted or degenerate");
      continue;
    }
    rep.min_measure = std::min(rep.min_measure, vol);
  }
  if (mesh.tets.empty()) rep.min_measure = 0.0;
  return rep;
}

namespace {

constexpr double kGolden = 1.618033988749894848204586834365638;

SurfaceMesh icosahedron() {
  SurfaceMesh m;
  const double t = kGolden;
  m.vertices = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
  };
  m.faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1},
  };
  return m;
}

}  // namespace

SurfaceMesh synth_sphere(int subdivisions, double radius) {
  if (subdivisions < 0) throw MeshError("synth_sphere: subdivisions must be >= 0");
  if (!(radius > 0)) throw MeshError("synth_sphere: radius must be positive");
  SurfaceMesh m = icosahedron();
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(m.vertices.size());
      m.vertices.push_back(0.5 * (m.vertices[a] + m.vertices[b]));
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.faces.size() * 4);
    for (const auto& f : m.faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.faces = std::move(next);
  }
  for (Vec3& v : m.vertices) v = radius * v.normalized();
  return m;
}

SurfaceMesh extract_boundary(const TetMesh& mesh) {
  // A boundary face belongs to exactly one tet; orient it outward using the
  // opposite tet vertex.
  struct FaceInfo {
    std::array<int, 3> oriented;
    int count = 0;
  };
  std::map<std::array<int, 3>, FaceInfo> faces;
  // Faces as ordered in a positively oriented tet, outward-facing.
  static const int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  for (const auto& tet : mesh.tets) {
    for (const auto& fi : kFace) {
      std::array<int, 3> f{tet[fi[0]], tet[fi[1]], tet[fi[2]]};
      std::array<int, 3> key = f;
      std::sort(key.begin(), key.end());
      auto& info = faces[key];
      if (info.count == 0) info.oriented = f;
      info.count++;
    }
  }
  SurfaceMesh boundary;
  boundary.vertices = mesh.vertices;
  for (const auto& [key, info] : faces)
    if (info.count == 1) boundary.faces.push_back(info.oriented);
  return boundary;
}

TetMesh synth_sphere_tet(int resolution, double radius) {
  if (resolution < 2) throw MeshError("synth_sphere_tet: resolution must be >= 2");
  if (!(radius > 0)) throw MeshError("synth_sphere_tet: radius must be positive");

  const int n = resolution;
  const double h = 2.0 * radius / n;
  auto grid_point = [&](int i, int j, int k) {
    return Vec3(-radius + i * h, -radius + j * h, -radius + k * h);
  };
  auto vid = [&](int i, int j, int k) { return (i * (n + 1) + j) * (n + 1) + k; };

  std::vector<Vec3> grid((n + 1) * (n + 1) * (n + 1));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      for (int k = 0; k <= n; ++k) grid[vid(i, j, k)] = grid_point(i, j, k);

  // Kuhn subdivision: six tets per cell sharing the main diagonal; conforming
  // across cells.
  static const int kPerm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<std::array<int, 4>> raw_tets;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const int base[3] = {i, j, k};
        for (const auto& perm : kPerm) {
          int c[3] = {base[0], base[1], base[2]};
          std::array<int, 4> tet{};
          tet[0] = vid(c[0], c[1], c[2]);
          for (int step = 0; step < 3; ++step) {
            c[perm[step]] += 1;
            tet[step + 1] = vid(c[0], c[1], c[2]);
          }
          // keep tets touching the open ball; outside vertices snap below
          bool keep = false;
          for (int v : tet)
            if (grid[v].norm() < radius - 1e-12) keep = true;
          if (keep) raw_tets.push_back(tet);
        }
      }
  if (raw_tets.empty()) throw MeshError("synth_sphere_tet: no tets produced");

  // Snap outside vertices radially onto the sphere.
  std::vector<Vec3> snapped = grid;
  for (Vec3& v : snapped)
    if (v.norm() > radius) v *= radius / v.norm();

  // Compact to used vertices, dropping tets the snap degenerated.
  const double vol_floor = 1e-10 * h * h * h;
  TetMesh mesh;
  std::vector<int> remap(grid.size(), -1);
  for (const auto& tet : raw_tets) {
    const double vol = signed_tet_volume(snapped[tet[0]], snapped[tet[1]], snapped[tet[2]],
                                         snapped[tet[3]]);
    if (std::abs(vol) <= vol_floor) continue;
    std::array<int, 4> out{};
    for (int k = 0; k < 4; ++k) {
      if (remap[tet[k]] < 0) {
        remap[tet[k]] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(snapped[tet[k]]);
      }
      out[k] = remap[tet[k]];
    }
    if (vol < 0) std::swap(out[2], out[3]);
    mesh.tets.push_back(out);
  }
  if (mesh.tets.empty()) throw MeshError("synth_sphere_tet: no tets produced");
  return mesh;
}

}  // namespace tempfit

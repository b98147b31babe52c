#pragma once

#include "tempfit/constraints.hpp"
#include "tempfit/geom.hpp"
#include "tempfit/mesh.hpp"
#include "tempfit/ridge.hpp"
#include "tempfit/solver.hpp"

#include <json.hpp>

#include <vector>

namespace tempfit {

using json = nlohmann::json;

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected [x, y, z]");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline json to_json(const Cylinder& c) {
  return {{"start", to_json(c.start)}, {"end", to_json(c.end)}, {"radius", c.radius}};
}

inline Cylinder cylinder_from_json(const json& j) {
  Cylinder c;
  c.start = vec3_from_json(j.at("start"));
  c.end = vec3_from_json(j.at("end"));
  c.radius = j.at("radius").get<double>();
  return c;
}

inline json to_json(const MeshReport& rep) {
  return {{"vertex_count", rep.vertex_count},
          {"element_count", rep.element_count},
          {"bbox_diag", rep.bbox_diag},
          {"min_measure", rep.min_measure},
          {"defects", rep.defects}};
}

inline json to_json(const RidgeTargets& rt) {
  json entries = json::array();
  for (const RidgeEntry& e : rt.entries)
    entries.push_back({{"index", e.index}, {"target", to_json(e.target)}, {"kappa", e.kappa}});
  return {{"plane", {{"point", to_json(rt.plane.point)}, {"normal", to_json(rt.plane.normal)}}},
          {"entries", entries}};
}

inline json to_json(const Constraint& c) {
  json j = {{"kind", to_string(c.kind)}, {"weight", c.weight}};
  if (c.kind == ConstraintKind::TetStrain) {
    j["indices"] = c.indices;
    j["alpha"] = c.alpha;
    j["measure"] = c.measure;
  } else {
    j["indices"] = json::array({c.indices[0]});
    j["target"] = to_json(c.target);
  }
  return j;
}

inline json to_json(const std::vector<OuterReport>& reports) {
  json rows = json::array();
  for (const OuterReport& r : reports)
    rows.push_back({{"outer_iter", r.outer_iter},
                    {"energy", r.energy},
                    {"n_correspondences", r.n_correspondences},
                    {"mean_surface_dist", r.mean_surface_dist}});
  return rows;
}

}  // namespace tempfit

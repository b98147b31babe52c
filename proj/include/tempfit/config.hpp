#pragma once

#include "tempfit/constraints.hpp"
#include "tempfit/json_io.hpp"
#include "tempfit/solver.hpp"

#include <string>
#include <vector>

namespace tempfit {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Resolved run configuration. Defaults are the reference weights and
// parameters; a config file or --set overrides replace individual keys.
// Unknown keys are rejected.
struct Config {
  Weights weights;
  SolverParams params;
  std::string template_dir;
  std::string target_path;
  std::string output_dir;
};

namespace detail {

inline void apply_weights(Weights& w, const json& j) {
  for (const auto& [key, val] : j.items()) {
    if (key == "w_tar") w.target = val.get<double>();
    else if (key == "w_S") w.tet_s = val.get<double>();
    else if (key == "w_J") w.tet_j = val.get<double>();
    else if (key == "w_C") w.tet_c = val.get<double>();
    else if (key == "w_push") w.push = val.get<double>();
    else if (key == "w_pull") w.pull = val.get<double>();
    else if (key == "w_corr") w.correspondence = val.get<double>();
    else throw ConfigError("unknown key 'weights." + key + "'");
    const double v = j.at(key).get<double>();
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError("weight '" + key + "' must be finite and >= 0");
  }
}

inline void apply_params(SolverParams& p, const json& j) {
  for (const auto& [key, val] : j.items()) {
    if (key == "pd_iterations") p.pd_iterations = val.get<int>();
    else if (key == "alpha") p.alpha = val.get<double>();
    else if (key == "l_min") p.l_min = val.get<double>();
    else if (key == "contact_margin") p.contact_margin = val.get<double>();
    else if (key == "timestep") p.timestep = val.get<double>();
    else if (key == "delta_eps") p.delta_eps = val.get<double>();
    else if (key == "density") p.density = val.get<double>();
    else if (key == "max_outer_iterations") p.max_outer_iterations = val.get<int>();
    else if (key == "max_corr_dist") p.max_corr_dist = val.get<double>();
    else if (key == "max_corr_angle_deg") p.max_corr_angle_deg = val.get<double>();
    else throw ConfigError("unknown key 'params." + key + "'");
  }
  if (p.pd_iterations < 1) throw ConfigError("params.pd_iterations must be >= 1");
  if (!(p.timestep > 0)) throw ConfigError("params.timestep must be > 0");
  if (!(p.delta_eps > 0)) throw ConfigError("params.delta_eps must be > 0");
}

inline void apply_paths(Config& c, const json& j) {
  for (const auto& [key, val] : j.items()) {
    if (key == "template_dir") c.template_dir = val.get<std::string>();
    else if (key == "target") c.target_path = val.get<std::string>();
    else if (key == "output_dir") c.output_dir = val.get<std::string>();
    else throw ConfigError("unknown key 'paths." + key + "'");
  }
}

}  // namespace detail

inline void apply_config_json(Config& c, const json& j) {
  for (const auto& [key, val] : j.items()) {
    if (key == "weights") detail::apply_weights(c.weights, val);
    else if (key == "params") detail::apply_params(c.params, val);
    else if (key == "paths") detail::apply_paths(c, val);
    else throw ConfigError("unknown key '" + key + "'");
  }
}

// One "dotted.key=value" override, e.g. "params.pd_iterations=10".
inline void apply_override(Config& c, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string value = kv.substr(eq + 1);
  const auto dot = key.find('.');
  if (dot == std::string::npos) throw ConfigError("--set key must be section.name: '" + key + "'");
  const std::string section = key.substr(0, dot);
  const std::string name = key.substr(dot + 1);
  json leaf;
  if (section == "paths") {
    leaf = value;
  } else {
    try {
      leaf = json::parse(value);
    } catch (const json::exception&) {
      throw ConfigError("--set value for '" + key + "' is not a number: '" + value + "'");
    }
  }
  apply_config_json(c, json{{section, {{name, leaf}}}});
}

inline json dump_config(const Config& c) {
  return {{"weights",
           {{"w_tar", c.weights.target},
            {"w_S", c.weights.tet_s},
            {"w_J", c.weights.tet_j},
            {"w_C", c.weights.tet_c},
            {"w_push", c.weights.push},
            {"w_pull", c.weights.pull},
            {"w_corr", c.weights.correspondence}}},
          {"params",
           {{"pd_iterations", c.params.pd_iterations},
            {"alpha", c.params.alpha},
            {"l_min", c.params.l_min},
            {"contact_margin", c.params.contact_margin},
            {"timestep", c.params.timestep},
            {"delta_eps", c.params.delta_eps},
            {"density", c.params.density},
            {"max_outer_iterations", c.params.max_outer_iterations},
            {"max_corr_dist", c.params.max_corr_dist},
            {"max_corr_angle_deg", c.params.max_corr_angle_deg}}},
          {"paths",
           {{"template_dir", c.template_dir},
            {"target", c.target_path},
            {"output_dir", c.output_dir}}}};
}

// Defaults, then config file (optional), then --set overrides in order.
inline Config resolve_config(const std::string& config_json_text,
                             const std::vector<std::string>& overrides) {
  Config c;
  if (!config_json_text.empty()) {
    json j;
    try {
      j = json::parse(config_json_text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    apply_config_json(c, j);
  }
  for (const std::string& kv : overrides) apply_override(c, kv);
  return c;
}

}  // namespace tempfit

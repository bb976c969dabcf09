// Copyright 2026 The neflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neflow/experiment.hpp"

namespace neflow {

using Json = nlohmann::json;

// A fully parsed experiment: everything run_experiment needs plus the output
// location. Built from a strict JSON schema; unknown keys are rejected so a
// typo cannot silently fall back to a default.
struct Experiment {
  std::string scenario_name;
  Scenario scenario;
  AgentLaw law;
  std::optional<GraphSpec> graph;
  SimConfig sim;
  RunOptions options;
  std::string out_dir;  // empty: resolved by the caller
};

namespace detail {

inline void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) {
    throw ConfigError(where + " must be a JSON object");
  }
}

inline void check_keys(const Json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  require_object(j, where);
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end()) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

inline const Json& require_key(const Json& j, const char* key,
                               const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError("missing required key '" + std::string(key) + "' in " +
                      where);
  }
  return *it;
}

inline double as_double(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  return j.get<double>();
}

inline int as_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + " must be an integer");
  return j.get<int>();
}

inline std::uint64_t as_seed(const Json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !j.is_number_integer()) {
    throw ConfigError(where + " must be a nonnegative integer");
  }
  const std::int64_t v = j.get<std::int64_t>();
  if (v < 0) throw ConfigError(where + " must be a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

inline std::string as_string(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

inline bool as_bool(const Json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + " must be a boolean");
  return j.get<bool>();
}

inline Eigen::VectorXd as_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    v(k) = as_double(j[static_cast<size_t>(k)],
                     where + "[" + std::to_string(k) + "]");
  }
  return v;
}

inline Eigen::MatrixXd as_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(where + " must be a non-empty array of rows");
  }
  const size_t rows = j.size();
  const Json& first = j[0];
  if (!first.is_array()) throw ConfigError(where + " rows must be arrays");
  const size_t cols = first.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < rows; ++r) {
    const Json& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw ConfigError(where + " rows must all have " +
                        std::to_string(cols) + " entries");
    }
    for (size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_double(row[c], where + " entry");
    }
  }
  return m;
}

}  // namespace detail

inline LawVariant law_variant_from_string(const std::string& s) {
  if (s == "gradient_play_full") return LawVariant::GradientPlayFull;
  if (s == "gradient_play_partial") return LawVariant::GradientPlayPartial;
  if (s == "single_int_full_im") return LawVariant::SingleIntFullIM;
  if (s == "single_int_partial_im") return LawVariant::SingleIntPartialIM;
  if (s == "double_int_full_im") return LawVariant::DoubleIntFullIM;
  if (s == "double_int_partial_im") return LawVariant::DoubleIntPartialIM;
  if (s == "multi_int_partial_im") return LawVariant::MultiIntPartialIM;
  throw ConfigError("unknown law variant '" + s + "'");
}

inline std::string to_string(LawVariant v) {
  switch (v) {
    case LawVariant::GradientPlayFull: return "gradient_play_full";
    case LawVariant::GradientPlayPartial: return "gradient_play_partial";
    case LawVariant::SingleIntFullIM: return "single_int_full_im";
    case LawVariant::SingleIntPartialIM: return "single_int_partial_im";
    case LawVariant::DoubleIntFullIM: return "double_int_full_im";
    case LawVariant::DoubleIntPartialIM: return "double_int_partial_im";
    case LawVariant::MultiIntPartialIM: return "multi_int_partial_im";
  }
  return "unknown";
}

namespace detail {

inline Scenario parse_scenario(const Json& j) {
  check_keys(j, "scenario", {"name", "params"});
  const std::string name = as_string(require_key(j, "name", "scenario"),
                                     "scenario.name");
  const Json params = j.value("params", Json::object());
  if (name == "sensor") {
    check_keys(params, "scenario.params", {});
    return sensor_scenario();
  }
  if (name == "osnr") {
    check_keys(params, "scenario.params", {"channels", "P0", "time_scale"});
    OsnrParams p = OsnrParams::defaults(
        params.contains("channels")
            ? as_int(params["channels"], "scenario.params.channels")
            : 10);
    if (params.contains("P0")) {
      p.P0 = as_double(params["P0"], "scenario.params.P0");
    }
    if (params.contains("time_scale")) {
      p.time_scale = as_double(params["time_scale"],
                               "scenario.params.time_scale");
    }
    return osnr_scenario(p);
  }
  if (name == "synthetic") {
    check_keys(params, "scenario.params", {"dims", "conditioning", "seed"});
    const Eigen::VectorXd dims_v =
        as_vector(require_key(params, "dims", "scenario.params"),
                  "scenario.params.dims");
    std::vector<int> dims;
    for (Eigen::Index k = 0; k < dims_v.size(); ++k) {
      dims.push_back(static_cast<int>(dims_v(k)));
    }
    const double cond = as_double(
        require_key(params, "conditioning", "scenario.params"),
        "scenario.params.conditioning");
    const std::uint64_t seed =
        params.contains("seed") ? as_seed(params["seed"],
                                          "scenario.params.seed")
                                : 0;
    return synthetic_scenario(std::move(dims), cond, seed);
  }
  throw ConfigError("unknown scenario '" + name +
                    "' (expected sensor, osnr, or synthetic)");
}

inline AgentLaw parse_law(const Json& j) {
  check_keys(j, "law", {"variant", "r", "b", "c"});
  AgentLaw law;
  law.variant = law_variant_from_string(
      as_string(require_key(j, "variant", "law"), "law.variant"));
  if (j.contains("r")) {
    law.r = as_int(j["r"], "law.r");
  } else if (law.variant == LawVariant::MultiIntPartialIM) {
    throw ConfigError("law.r is required for the multi-integrator variant");
  } else {
    law.r = integrator_order(law.variant, 1);
  }
  if (j.contains("b")) law.b = as_double(j["b"], "law.b");
  if (j.contains("c")) {
    law.c = as_vector(j["c"], "law.c");
  } else if (law.variant == LawVariant::MultiIntPartialIM && law.r >= 2) {
    law.c = default_interior_coefficients(law.r);
  }
  return law;
}

inline std::optional<GraphSpec> parse_graph(const Json& j, int N) {
  check_keys(j, "graph", {"kind", "p", "seed", "adjacency"});
  const std::string kind = as_string(require_key(j, "kind", "graph"),
                                     "graph.kind");
  if (kind == "complete") {
    check_keys(j, "graph", {"kind"});
    return complete_graph(N);
  }
  if (kind == "random") {
    check_keys(j, "graph", {"kind", "p", "seed"});
    const double p = as_double(require_key(j, "p", "graph"), "graph.p");
    const std::uint64_t seed = as_seed(require_key(j, "seed", "graph"),
                                       "graph.seed");
    return random_connected_graph(N, p, seed);
  }
  if (kind == "explicit") {
    check_keys(j, "graph", {"kind", "adjacency"});
    return build_graph(as_matrix(require_key(j, "adjacency", "graph"),
                                 "graph.adjacency"));
  }
  throw ConfigError("unknown graph.kind '" + kind +
                    "' (expected complete, random, or explicit)");
}

// Replaces every agent's disturbance generator. Scenario pole templates are
// dropped because they were tuned to the scenario's own generators; explicit
// observer_poles or the per-block defaults take over.
inline void apply_exosystem_override(const Json& j, Scenario& sc) {
  check_keys(j, "exosystem",
             {"type", "value", "bias", "amplitude", "frequency_hz", "omega",
              "channel", "S", "D", "w0"});
  const std::string type = as_string(require_key(j, "type", "exosystem"),
                                     "exosystem.type");
  const ActionLayout& layout = sc.game.layout();
  std::vector<Exosystem> exos;
  if (type == "none") {
    check_keys(j, "exosystem", {"type"});
    for (int i = 0; i < layout.players(); ++i) {
      exos.push_back(zero_disturbance(layout.dim(i)));
    }
  } else if (type == "constant") {
    check_keys(j, "exosystem", {"type", "value"});
    const Json& value = require_key(j, "value", "exosystem");
    for (int i = 0; i < layout.players(); ++i) {
      Eigen::VectorXd v;
      if (value.is_number()) {
        v = Eigen::VectorXd::Constant(layout.dim(i),
                                      as_double(value, "exosystem.value"));
      } else {
        v = as_vector(value, "exosystem.value");
        if (v.size() != layout.dim(i)) {
          throw ConfigError("exosystem.value has length " +
                            std::to_string(v.size()) + " but agent " +
                            std::to_string(i) + " has dimension " +
                            std::to_string(layout.dim(i)));
        }
      }
      exos.push_back(constant_disturbance(v));
    }
  } else if (type == "biased_sinusoid") {
    check_keys(j, "exosystem",
               {"type", "bias", "amplitude", "frequency_hz", "omega",
                "channel"});
    const double bias = as_double(require_key(j, "bias", "exosystem"),
                                  "exosystem.bias");
    const double amplitude = as_double(
        require_key(j, "amplitude", "exosystem"), "exosystem.amplitude");
    if (j.contains("frequency_hz") == j.contains("omega")) {
      throw ConfigError(
          "exosystem needs exactly one of 'frequency_hz' or 'omega'");
    }
    Exosystem proto =
        j.contains("omega")
            ? biased_sinusoid_rad(bias, amplitude,
                                  as_double(j["omega"], "exosystem.omega"))
            : biased_sinusoid(bias, amplitude,
                              as_double(j["frequency_hz"],
                                        "exosystem.frequency_hz"));
    const int channel =
        j.contains("channel") ? as_int(j["channel"], "exosystem.channel") : 0;
    for (int i = 0; i < layout.players(); ++i) {
      exos.push_back(layout.dim(i) == 1 && channel == 0
                         ? proto
                         : lift_output(proto, layout.dim(i), channel));
    }
  } else if (type == "custom") {
    check_keys(j, "exosystem", {"type", "S", "D", "w0"});
    const Eigen::MatrixXd S = as_matrix(require_key(j, "S", "exosystem"),
                                        "exosystem.S");
    const Eigen::MatrixXd D = as_matrix(require_key(j, "D", "exosystem"),
                                        "exosystem.D");
    const Eigen::VectorXd w0 = as_vector(require_key(j, "w0", "exosystem"),
                                         "exosystem.w0");
    for (int i = 0; i < layout.players(); ++i) {
      Exosystem exo(S, D, w0);
      if (exo.ny() != layout.dim(i)) {
        throw ConfigError("exosystem.D has " + std::to_string(exo.ny()) +
                          " output rows but agent " + std::to_string(i) +
                          " has dimension " + std::to_string(layout.dim(i)));
      }
      exos.push_back(std::move(exo));
    }
  } else {
    throw ConfigError("unknown exosystem.type '" + type +
                      "' (expected none, constant, biased_sinusoid, custom)");
  }
  sc.exos = std::move(exos);
  sc.pole_templates.clear();
}

inline std::vector<std::vector<double>> parse_pole_templates(const Json& j) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError("observer_poles must be a non-empty array");
  }
  std::vector<std::vector<double>> out;
  if (j[0].is_array()) {
    for (size_t i = 0; i < j.size(); ++i) {
      const Eigen::VectorXd v = as_vector(
          j[i], "observer_poles[" + std::to_string(i) + "]");
      out.emplace_back(v.data(), v.data() + v.size());
    }
  } else {
    const Eigen::VectorXd v = as_vector(j, "observer_poles");
    out.emplace_back(v.data(), v.data() + v.size());
  }
  return out;
}

inline SimConfig parse_sim(const Json& j) {
  check_keys(j, "sim",
             {"t_end", "dt", "method", "record_every", "rtol", "atol",
              "seed"});
  SimConfig sim;
  sim.t_end = as_double(require_key(j, "t_end", "sim"), "sim.t_end");
  if (j.contains("dt")) sim.dt = as_double(j["dt"], "sim.dt");
  if (j.contains("method")) {
    const std::string m = as_string(j["method"], "sim.method");
    if (m == "rk4") {
      sim.method = Method::RK4;
    } else if (m == "rk45") {
      sim.method = Method::RK45;
    } else {
      throw ConfigError("unknown sim.method '" + m +
                        "' (expected rk4 or rk45)");
    }
  }
  if (j.contains("record_every")) {
    sim.record_every = as_int(j["record_every"], "sim.record_every");
  }
  if (j.contains("rtol")) sim.rtol = as_double(j["rtol"], "sim.rtol");
  if (j.contains("atol")) sim.atol = as_double(j["atol"], "sim.atol");
  if (j.contains("seed")) sim.seed = as_seed(j["seed"], "sim.seed");
  sim.validate();
  return sim;
}

}  // namespace detail

inline Experiment parse_experiment(const Json& root) {
  detail::check_keys(root, "config",
                     {"scenario", "law", "graph", "exosystem",
                      "observer_poles", "sim", "init", "output"});
  Scenario scenario = detail::parse_scenario(
      detail::require_key(root, "scenario", "config"));
  Experiment exp{scenario.name,
                 std::move(scenario),
                 detail::parse_law(detail::require_key(root, "law", "config")),
                 std::nullopt,
                 detail::parse_sim(detail::require_key(root, "sim", "config")),
                 RunOptions{},
                 ""};

  if (root.contains("exosystem")) {
    detail::apply_exosystem_override(root["exosystem"], exp.scenario);
  }
  if (root.contains("graph")) {
    exp.graph = detail::parse_graph(root["graph"], exp.scenario.game.players());
  }
  if (is_partial(exp.law.variant) && !exp.graph) {
    throw ConfigError("law variant '" + to_string(exp.law.variant) +
                      "' needs a 'graph' section");
  }
  if (root.contains("observer_poles")) {
    if (!is_im(exp.law.variant)) {
      throw ConfigError(
          "observer_poles only applies to internal-model variants");
    }
    exp.options.pole_templates =
        detail::parse_pole_templates(root["observer_poles"]);
  }
  if (root.contains("init")) {
    const Json& init = root["init"];
    detail::check_keys(init, "init", {"x0", "estimates"});
    if (init.contains("x0")) {
      Eigen::VectorXd x0 = detail::as_vector(init["x0"], "init.x0");
      if (x0.size() != exp.scenario.game.n()) {
        throw ConfigError("init.x0 has length " + std::to_string(x0.size()) +
                          " but the stacked profile has length " +
                          std::to_string(exp.scenario.game.n()));
      }
      exp.options.x0 = std::move(x0);
    }
    if (init.contains("estimates")) {
      const std::string mode =
          detail::as_string(init["estimates"], "init.estimates");
      if (mode == "broadcast") {
        exp.options.broadcast_estimates = true;
      } else if (mode != "zeros") {
        throw ConfigError("init.estimates must be 'zeros' or 'broadcast'");
      }
    }
  }
  if (root.contains("output")) {
    const Json& output = root["output"];
    detail::check_keys(output, "output", {"dir", "tol"});
    if (output.contains("dir")) {
      exp.out_dir = detail::as_string(output["dir"], "output.dir");
    }
    if (output.contains("tol")) {
      exp.options.tol = detail::as_double(output["tol"], "output.tol");
      if (!(exp.options.tol > 0.0)) {
        throw ConfigError("output.tol must be positive");
      }
    }
  }
  return exp;
}

inline Experiment parse_experiment_text(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse_experiment(root);
}

// Sets `root[path] = value` where `path` is dot-separated ("sim.t_end").
// Used by the sweep driver to grid over one key. The leaf value is parsed as
// JSON when possible, else taken as a string.
inline void set_config_key(Json& root, const std::string& path,
                           const std::string& value) {
  Json* node = &root;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("empty key segment in '" + path + "'");
    if (dot == std::string::npos) {
      Json parsed = Json::parse(value, /*cb=*/nullptr,
                                /*allow_exceptions=*/false);
      (*node)[key] = parsed.is_discarded() ? Json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace neflow

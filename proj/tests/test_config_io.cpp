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

#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "neflow/csvio.hpp"
#include "neflow/svgplot.hpp"

namespace neflow {
namespace {

Json minimal_config() {
  return Json::parse(R"({
    "scenario": {"name": "sensor"},
    "law": {"variant": "gradient_play_full"},
    "sim": {"t_end": 1.0}
  })");
}

TEST_CASE("minimal config parses with defaults") {
  const Experiment exp = parse_experiment(minimal_config());
  REQUIRE(exp.scenario_name == "sensor");
  REQUIRE(exp.law.variant == LawVariant::GradientPlayFull);
  REQUIRE(exp.law.r == 1);
  REQUIRE(exp.sim.t_end == 1.0);
  REQUIRE(exp.sim.dt == 1e-3);
  REQUIRE(exp.sim.method == Method::RK4);
  REQUIRE_FALSE(exp.graph.has_value());
  REQUIRE(exp.options.tol == 1e-3);
  REQUIRE(exp.out_dir.empty());
}

TEST_CASE("unknown keys are rejected at every level") {
  Json j = minimal_config();
  j["extra"] = 1;
  REQUIRE_THROWS_WITH(parse_experiment(j),
                      Catch::Matchers::ContainsSubstring("extra"));

  j = minimal_config();
  j["sim"]["step"] = 0.1;
  REQUIRE_THROWS_WITH(parse_experiment(j),
                      Catch::Matchers::ContainsSubstring("step"));

  j = minimal_config();
  j["law"]["gain"] = 2.0;
  REQUIRE_THROWS_WITH(parse_experiment(j),
                      Catch::Matchers::ContainsSubstring("gain"));

  j = minimal_config();
  j["scenario"]["params"] = Json::object();
  j["scenario"]["params"]["foo"] = 1;
  REQUIRE_THROWS_WITH(parse_experiment(j),
                      Catch::Matchers::ContainsSubstring("foo"));
}

TEST_CASE("missing required keys are named in the error") {
  Json j = minimal_config();
  j.erase("sim");
  REQUIRE_THROWS_WITH(parse_experiment(j),
                      Catch::Matchers::ContainsSubstring("sim"));
  j = minimal_config();
  j["law"].erase("variant");
  REQUIRE_THROWS_WITH(parse_experiment(j),
                      Catch::Matchers::ContainsSubstring("variant"));
  REQUIRE_THROWS_AS(parse_experiment_text("{not json"), ConfigError);
}

TEST_CASE("graph section builds all three kinds") {
  Json j = minimal_config();
  j["graph"] = {{"kind", "complete"}};
  REQUIRE(parse_experiment(j).graph->lambda2 == Catch::Approx(5.0));

  j["graph"] = {{"kind", "random"}, {"p", 0.95}, {"seed", 7}};
  const Experiment r = parse_experiment(j);
  REQUIRE(r.graph->connected);
  REQUIRE(r.graph->N == 5);

  j["graph"] = {{"kind", "explicit"},
                {"adjacency",
                 Json::parse("[[0,1,0,0,1],[1,0,1,0,0],[0,1,0,1,0],"
                             "[0,0,1,0,1],[1,0,0,1,0]]")}};
  REQUIRE(parse_experiment(j).graph->lambda2 ==
          Catch::Approx(ring_graph(5).lambda2));

  j["graph"] = {{"kind", "random"}, {"p", 0.95}};
  REQUIRE_THROWS_WITH(parse_experiment(j),
                      Catch::Matchers::ContainsSubstring("seed"));
  j["graph"] = {{"kind", "mesh"}};
  REQUIRE_THROWS_AS(parse_experiment(j), ConfigError);
}

TEST_CASE("partial-information laws require a graph") {
  Json j = minimal_config();
  j["law"]["variant"] = "gradient_play_partial";
  REQUIRE_THROWS_WITH(parse_experiment(j),
                      Catch::Matchers::ContainsSubstring("graph"));
  j["graph"] = {{"kind", "complete"}};
  REQUIRE_NOTHROW(parse_experiment(j));
}

TEST_CASE("law variants round-trip through their names") {
  for (const char* name :
       {"gradient_play_full", "gradient_play_partial", "single_int_full_im",
        "single_int_partial_im", "double_int_full_im",
        "double_int_partial_im", "multi_int_partial_im"}) {
    REQUIRE(to_string(law_variant_from_string(name)) == name);
  }
  REQUIRE_THROWS_AS(law_variant_from_string("newton"), ConfigError);

  Json j = minimal_config();
  j["law"] = {{"variant", "multi_int_partial_im"}, {"r", 3}};
  j["graph"] = {{"kind", "complete"}};
  const Experiment exp = parse_experiment(j);
  REQUIRE(exp.law.r == 3);
  REQUIRE(exp.law.c.size() == 1);
  REQUIRE(exp.law.c(0) == Catch::Approx(2.0));

  j["law"] = {{"variant", "multi_int_partial_im"}};
  REQUIRE_THROWS_WITH(parse_experiment(j),
                      Catch::Matchers::ContainsSubstring("law.r"));
}

TEST_CASE("exosystem overrides replace the scenario generators") {
  Json j = minimal_config();
  j["exosystem"] = {{"type", "none"}};
  const Experiment none = parse_experiment(j);
  for (const Exosystem& exo : none.scenario.exos) REQUIRE(exo.q() == 0);

  j["exosystem"] = {{"type", "constant"}, {"value", 0.25}};
  const Experiment scalar = parse_experiment(j);
  REQUIRE(disturbance_at(scalar.scenario.exos[0], 0.0)(1) ==
          Catch::Approx(0.25));

  j["exosystem"] = {{"type", "constant"},
                    {"value", Json::parse("[0.5, 0.0]")}};
  const Experiment vec = parse_experiment(j);
  REQUIRE(disturbance_at(vec.scenario.exos[4], 0.0)(0) ==
          Catch::Approx(0.5));

  j["exosystem"] = {{"type", "constant"},
                    {"value", Json::parse("[1, 2, 3]")}};
  REQUIRE_THROWS_AS(parse_experiment(j), ConfigError);

  j["exosystem"] = {{"type", "biased_sinusoid"},
                    {"bias", 0.5},
                    {"amplitude", 0.5},
                    {"omega", 1.0}};
  const Experiment tone = parse_experiment(j);
  REQUIRE(tone.scenario.exos[0].q() == 3);
  REQUIRE(tone.scenario.exos[0].ny() == 2);  // lifted into channel 0
  REQUIRE(disturbance_at(tone.scenario.exos[0], 0.0)(1) == 0.0);

  j["exosystem"]["frequency_hz"] = 1.0;  // both forms at once
  REQUIRE_THROWS_AS(parse_experiment(j), ConfigError);

  j["exosystem"] = {{"type", "custom"},
                    {"S", Json::parse("[[0,1],[-1,0]]")},
                    {"D", Json::parse("[[1,0],[0,0]]")},
                    {"w0", Json::parse("[1,0]")}};
  const Experiment custom = parse_experiment(j);
  REQUIRE(custom.scenario.exos[0].q() == 2);
}

TEST_CASE("observer pole templates parse flat or per-agent") {
  Json j = minimal_config();
  j["law"]["variant"] = "single_int_full_im";
  j["observer_poles"] = Json::parse("[-1.0]");
  const Experiment flat = parse_experiment(j);
  REQUIRE(flat.options.pole_templates->size() == 1);
  REQUIRE((*flat.options.pole_templates)[0] == std::vector<double>{-1.0});

  j["observer_poles"] = Json::parse("[[-1.0],[-2.0],[-1.0],[-2.0],[-1.0]]");
  REQUIRE(parse_experiment(j).options.pole_templates->size() == 5);

  j["law"]["variant"] = "gradient_play_full";
  REQUIRE_THROWS_AS(parse_experiment(j), ConfigError);
}

TEST_CASE("initial conditions and output options are honored") {
  Json j = minimal_config();
  j["init"] = {{"x0", Json::parse("[1,0,0,0,0,0,0,0,0,0]")},
               {"estimates", "broadcast"}};
  j["output"] = {{"dir", "/tmp/somewhere"}, {"tol", 0.05}};
  const Experiment exp = parse_experiment(j);
  REQUIRE(exp.options.x0->size() == 10);
  REQUIRE((*exp.options.x0)(0) == 1.0);
  REQUIRE(exp.options.broadcast_estimates);
  REQUIRE(exp.options.tol == 0.05);
  REQUIRE(exp.out_dir == "/tmp/somewhere");

  j["init"]["x0"] = Json::parse("[1,2]");
  REQUIRE_THROWS_AS(parse_experiment(j), ConfigError);
  j = minimal_config();
  j["init"] = {{"estimates", "warm"}};
  REQUIRE_THROWS_AS(parse_experiment(j), ConfigError);
  j = minimal_config();
  j["output"] = {{"tol", -1.0}};
  REQUIRE_THROWS_AS(parse_experiment(j), ConfigError);
}

TEST_CASE("sweep key paths address nested values") {
  Json j = minimal_config();
  set_config_key(j, "sim.t_end", "2.5");
  REQUIRE(j["sim"]["t_end"] == 2.5);
  set_config_key(j, "law.variant", "single_int_full_im");
  REQUIRE(j["law"]["variant"] == "single_int_full_im");
  set_config_key(j, "graph.kind", "complete");
  REQUIRE(j["graph"]["kind"] == "complete");
  set_config_key(j, "init.estimates", "broadcast");
  REQUIRE(j["init"]["estimates"] == "broadcast");
  REQUIRE_THROWS_AS(set_config_key(j, "sim..dt", "1"), ConfigError);
}

Experiment tiny_run_config() {
  Json j = minimal_config();
  j["sim"] = {{"t_end", 0.05}, {"dt", 0.01}};
  return parse_experiment(j);
}

TEST_CASE("trajectory csv is deterministic and well-formed") {
  const Experiment exp = tiny_run_config();
  const RunResult a = run_experiment(exp.scenario, exp.law, std::nullopt,
                                     exp.sim, exp.options);
  const RunResult b = run_experiment(exp.scenario, exp.law, std::nullopt,
                                     exp.sim, exp.options);
  std::ostringstream csv_a, csv_b;
  write_trajectory_csv(csv_a, a.layout, a.traj);
  write_trajectory_csv(csv_b, b.layout, b.traj);
  REQUIRE(csv_a.str() == csv_b.str());

  std::istringstream lines(csv_a.str());
  std::string line;
  REQUIRE(std::getline(lines, line));
  REQUIRE(line == "t,agent,component,kind,value");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  // 6 samples x (10 action rows + 4 metric rows).
  REQUIRE(rows == 6 * 14);
  REQUIRE(csv_a.str().find("ne_error") != std::string::npos);
}

TEST_CASE("summary json carries the run verdict") {
  const Experiment exp = tiny_run_config();
  const RunResult res = run_experiment(exp.scenario, exp.law, std::nullopt,
                                       exp.sim, exp.options);
  const Json j = Json::parse(summary_to_json(exp, res).dump());
  REQUIRE(j["scenario"] == "sensor");
  REQUIRE(j["law"] == "gradient_play_full");
  REQUIRE(j["converged"] == false);  // 0.05 s is far too short
  REQUIRE(j["final_ne_error"].is_number());
  REQUIRE(j["time_to_1e-2"].is_null());  // NaN serializes to null
  REQUIRE(j["x_star"].size() == 10);
  REQUIRE(j["warnings"].is_array());
}

TEST_CASE("svg plots are emitted with axes and data") {
  const Experiment exp = tiny_run_config();
  const RunResult res = run_experiment(exp.scenario, exp.law, std::nullopt,
                                       exp.sim, exp.options);
  std::ostringstream actions, metrics;
  plot_actions(actions, res.layout, res.traj);
  plot_metrics(metrics, res.traj);
  for (const std::string& svg : {actions.str(), metrics.str()}) {
    REQUIRE(svg.find("<svg") == 0);
    REQUIRE(svg.find("<polyline") != std::string::npos);
    REQUIRE(svg.rfind("</svg>\n") == svg.size() - 7);
  }
  REQUIRE(actions.str().find("agent 0[0]") != std::string::npos);
  REQUIRE(metrics.str().find("|x - x*|") != std::string::npos);
}

}  // namespace
}  // namespace neflow

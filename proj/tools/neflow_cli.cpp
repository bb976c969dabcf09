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

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "neflow/csvio.hpp"
#include "neflow/neflow.hpp"
#include "neflow/svgplot.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw neflow::ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw neflow::Error("cannot write " + path.string());
  out << content;
}

// Output directory precedence: --out flag, NEFLOW_OUT, config output.dir,
// then a name derived from the run.
std::string resolve_out_dir(const std::string& flag_out,
                            const neflow::Experiment& exp) {
  if (!flag_out.empty()) return flag_out;
  if (const char* env = std::getenv("NEFLOW_OUT"); env != nullptr && *env) {
    return env;
  }
  if (!exp.out_dir.empty()) return exp.out_dir;
  return "neflow_out/" + exp.scenario_name + "_" +
         neflow::to_string(exp.law.variant);
}

struct RunArtifacts {
  neflow::RunResult result;
  fs::path dir;
};

RunArtifacts execute_and_write(const neflow::Experiment& exp,
                               const std::string& out_dir) {
  neflow::RunResult result = neflow::run_experiment(
      exp.scenario, exp.law, exp.graph, exp.sim, exp.options);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  {
    std::ostringstream csv;
    neflow::write_trajectory_csv(csv, result.layout, result.traj);
    write_file(dir / "trajectory.csv", csv.str());
  }
  write_file(dir / "summary.json",
             neflow::summary_to_json(exp, result).dump(2) + "\n");
  {
    std::ostringstream svg;
    neflow::plot_actions(svg, result.layout, result.traj);
    write_file(dir / "actions.svg", svg.str());
  }
  {
    std::ostringstream svg;
    neflow::plot_metrics(svg, result.traj);
    write_file(dir / "metrics.svg", svg.str());
  }
  return {std::move(result), dir};
}

void print_run_summary(const neflow::Experiment& exp,
                       const RunArtifacts& artifacts) {
  const neflow::RunSummary& sum = artifacts.result.summary;
  std::printf("scenario            %s\n", exp.scenario_name.c_str());
  std::printf("law                 %s\n",
              neflow::to_string(exp.law.variant).c_str());
  std::printf("final |x - x*|      %.6g\n", sum.final_ne_error);
  if (sum.final_consensus_error > 0) {
    std::printf("final consensus err %.6g\n", sum.final_consensus_error);
  }
  if (sum.final_observer_norm > 0) {
    std::printf("final observer err  %.6g\n", sum.final_observer_norm);
  }
  std::printf("final |F(x)|        %.6g\n", sum.final_grad_norm);
  std::printf("converged           %s (tol %.3g)\n",
              sum.converged ? "yes" : "no", sum.tol);
  for (const std::string& w : sum.warnings) {
    std::printf("warning: %s\n", w.c_str());
  }
  std::printf("wrote %s\n", (artifacts.dir / "trajectory.csv").c_str());
  std::printf("wrote %s\n", (artifacts.dir / "summary.json").c_str());
  std::printf("wrote %s\n", (artifacts.dir / "actions.svg").c_str());
  std::printf("wrote %s\n", (artifacts.dir / "metrics.svg").c_str());
}

int cmd_run(const std::string& config_path, const std::string& flag_out) {
  const neflow::Experiment exp =
      neflow::parse_experiment_text(read_file(config_path));
  const RunArtifacts artifacts =
      execute_and_write(exp, resolve_out_dir(flag_out, exp));
  print_run_summary(exp, artifacts);
  return artifacts.result.summary.converged ? 0 : 2;
}

int cmd_check(const std::string& config_path) {
  const neflow::Experiment exp =
      neflow::parse_experiment_text(read_file(config_path));
  const neflow::GameSpec& game = exp.scenario.game;
  std::printf("scenario        %s (%d players, %d actions)\n",
              exp.scenario_name.c_str(), game.players(), game.n());
  std::printf("law             %s\n",
              neflow::to_string(exp.law.variant).c_str());

  double mu, theta;
  if (game.mu() && game.theta()) {
    mu = *game.mu();
    theta = *game.theta();
    std::printf("mu              %.6g (exact)\n", mu);
    std::printf("theta           %.6g (exact)\n", theta);
  } else {
    const neflow::ConstantsEstimate est =
        neflow::certify_constants(game, 20000, exp.sim.seed);
    mu = est.mu;
    theta = est.theta;
    std::printf("mu              %.6g (sampled upper bound)\n", mu);
    std::printf("theta           %.6g (sampled lower bound)\n", theta);
  }
  if (exp.graph) {
    std::printf("lambda2         %.6g\n", exp.graph->lambda2);
    const neflow::ConditionReport rep =
        neflow::check_condition(mu, theta, exp.graph->lambda2);
    std::printf("margin          %.6g  [mu (lambda2 - theta) - theta^2]\n",
                rep.margin);
    std::printf("holds           %s\n", rep.holds ? "true" : "false");
    if (!rep.holds) {
      std::printf("note: the condition is sufficient only; the run may still "
                  "converge\n");
    }
  } else {
    std::printf("lambda2         n/a (no graph)\n");
  }

  for (int i = 0; i < game.players(); ++i) {
    const neflow::Exosystem& exo =
        exp.scenario.exos[static_cast<size_t>(i)];
    if (exo.q() == 0) {
      std::printf("exosystem %-5d q=0 (no disturbance)\n", i);
      continue;
    }
    const neflow::ExoCertificate cert = neflow::validate(exo);
    std::printf("exosystem %-5d q=%d marginally_stable=%s observable=%s\n", i,
                exo.q(), cert.marginally_stable ? "true" : "false",
                cert.observable ? "true" : "false");
    if (!cert.marginally_stable || !cert.observable) {
      throw neflow::ValidationError("exosystem " + std::to_string(i) +
                                    " fails validation");
    }
  }
  if (neflow::is_im(exp.law.variant)) {
    const std::vector<neflow::AgentLaw> laws =
        neflow::design_laws(exp.scenario, exp.law, exp.options);
    for (int i = 0; i < game.players(); ++i) {
      const neflow::AgentLaw& law = laws[static_cast<size_t>(i)];
      if (law.exo->q() == 0) continue;
      const Eigen::MatrixXd closed =
          law.exo->S() - law.exo->K() * law.exo->D();
      const Eigen::VectorXcd ev =
          Eigen::EigenSolver<Eigen::MatrixXd>(closed).eigenvalues();
      std::ostringstream line;
      for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (k) line << ", ";
        line << neflow::detail::fmt_double(ev(k).real());
        if (std::abs(ev(k).imag()) > 1e-12) {
          line << (ev(k).imag() >= 0 ? "+" : "-") << "i"
               << neflow::detail::fmt_double(std::abs(ev(k).imag()));
        }
      }
      std::printf("observer %-6d poles: %s\n", i, line.str().c_str());
    }
    std::printf("observer gains  ok\n");
  }
  std::printf("config          ok\n");
  return 0;
}

int cmd_ne(const std::string& scenario_name) {
  const auto make_scenario = [&]() -> neflow::Scenario {
    if (scenario_name == "sensor") return neflow::sensor_scenario();
    if (scenario_name == "osnr") return neflow::osnr_scenario();
    if (scenario_name == "synthetic") {
      return neflow::synthetic_scenario({2, 2, 2}, 10.0, 0);
    }
    throw neflow::ConfigError("unknown scenario '" + scenario_name +
                              "' (expected sensor, osnr, or synthetic)");
  };
  const neflow::Scenario sc = make_scenario();
  const Eigen::VectorXd x_star = neflow::solve_ne(sc.game);
  std::printf("scenario %s\n", sc.name.c_str());
  for (int i = 0; i < sc.game.players(); ++i) {
    const Eigen::VectorXd xi =
        neflow::select_action(sc.game.layout(), i, x_star);
    std::ostringstream line;
    for (Eigen::Index k = 0; k < xi.size(); ++k) {
      if (k) line << ' ';
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", xi(k));
      line << buf;
    }
    std::printf("x*_%d = [%s]\n", i, line.str().c_str());
  }
  std::printf("|F(x*)| = %.3g\n",
              neflow::pseudo_gradient(sc.game, x_star).norm());
  return 0;
}

std::string sanitize_for_path(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
            c == '-' || c == '_')
               ? c
               : '_';
  }
  return out;
}

int cmd_sweep(const std::string& config_path, const std::string& key,
              const std::string& values_csv, int jobs,
              const std::string& flag_out) {
  if (key.empty()) throw neflow::ConfigError("--key must not be empty");
  std::vector<std::string> values;
  std::stringstream ss(values_csv);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) values.push_back(item);
  }
  if (values.empty()) {
    throw neflow::ConfigError("--values must list at least one value");
  }
  neflow::Json base;
  try {
    base = neflow::Json::parse(read_file(config_path));
  } catch (const neflow::Json::exception& e) {
    throw neflow::ConfigError(std::string("invalid JSON: ") + e.what());
  }

  // Parse every grid point up front so schema errors abort before any run.
  struct Point {
    std::string value;
    neflow::Json config;
  };
  std::vector<Point> points;
  for (const std::string& v : values) {
    neflow::Json j = base;
    neflow::set_config_key(j, key, v);
    neflow::parse_experiment(j);  // validate only
    points.push_back({v, std::move(j)});
  }

  const neflow::Experiment base_exp = neflow::parse_experiment(base);
  const fs::path out_root(resolve_out_dir(flag_out, base_exp));
  fs::create_directories(out_root);

  std::mutex mu;
  std::vector<neflow::Json> rows(points.size());
  std::vector<std::string> errors;
  std::atomic<size_t> next{0};
  const int workers =
      std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
  auto worker = [&]() {
    while (true) {
      const size_t idx = next.fetch_add(1);
      if (idx >= points.size()) return;
      const Point& pt = points[idx];
      try {
        const neflow::Experiment exp = neflow::parse_experiment(pt.config);
        const std::string dir =
            (out_root / (sanitize_for_path(key) + "=" +
                         sanitize_for_path(pt.value)))
                .string();
        const RunArtifacts artifacts = execute_and_write(exp, dir);
        neflow::Json row = neflow::summary_to_json(exp, artifacts.result);
        row["sweep_key"] = key;
        row["sweep_value"] = pt.value;
        row["dir"] = dir;
        std::lock_guard<std::mutex> lock(mu);
        rows[idx] = std::move(row);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        errors.push_back(key + "=" + pt.value + ": " + e.what());
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < workers; ++k) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  neflow::Json summary;
  summary["key"] = key;
  summary["runs"] = neflow::Json::array();
  for (const neflow::Json& row : rows) {
    if (!row.is_null()) summary["runs"].push_back(row);
  }
  write_file(out_root / "sweep_summary.json", summary.dump(2) + "\n");

  for (const neflow::Json& row : rows) {
    if (row.is_null()) continue;
    std::printf("%s=%-12s final |x - x*| = %-12.6g converged=%s\n",
                key.c_str(), row["sweep_value"].get<std::string>().c_str(),
                row["final_ne_error"].get<double>(),
                row["converged"].get<bool>() ? "yes" : "no");
  }
  for (const std::string& e : errors) {
    std::fprintf(stderr, "error: %s\n", e.c_str());
  }
  std::printf("wrote %s\n", (out_root / "sweep_summary.json").c_str());
  return errors.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neflow: disturbance-rejecting Nash equilibrium seeking"};
  app.require_subcommand(1);

  std::string config_path, out_dir, scenario_name, sweep_key, sweep_values;
  int jobs = 1;

  CLI::App* run = app.add_subcommand("run", "simulate one experiment config");
  run->add_option("config", config_path, "JSON experiment config")
      ->required();
  run->add_option("--out", out_dir, "output directory");

  CLI::App* check = app.add_subcommand(
      "check", "validate a config and report the convergence condition");
  check->add_option("config", config_path, "JSON experiment config")
      ->required();

  CLI::App* ne = app.add_subcommand(
      "ne", "print the equilibrium of a built-in scenario");
  ne->add_option("scenario", scenario_name, "sensor | osnr | synthetic")
      ->required();

  CLI::App* sweep = app.add_subcommand(
      "sweep", "grid over one config key, one run per value");
  sweep->add_option("config", config_path, "JSON experiment config")
      ->required();
  sweep->add_option("--key", sweep_key, "dot-separated config key")
      ->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")
      ->required();
  sweep->add_option("--jobs", jobs, "parallel workers")->default_val(1);
  sweep->add_option("--out", out_dir, "output root directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (check->parsed()) return cmd_check(config_path);
    if (ne->parsed()) return cmd_ne(scenario_name);
    if (sweep->parsed()) {
      return cmd_sweep(config_path, sweep_key, sweep_values, jobs, out_dir);
    }
  } catch (const neflow::SimAbort& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

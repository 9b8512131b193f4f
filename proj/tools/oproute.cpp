// Copyright 2026 The oproute Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// oproute: command-line front end for the routing experiments.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "oproute/charts.hpp"
#include "oproute/errors.hpp"
#include "oproute/experiment.hpp"
#include "oproute/graphml.hpp"
#include "oproute/topology.hpp"

namespace {

using oproute::ExperimentConfig;
using oproute::ExperimentKind;

// Flags shared by the experiment subcommands. Unset flags leave the config
// file (or the defaults) alone.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> nodes;
  std::optional<std::size_t> flows;
  std::optional<double> arrival_mean;
  std::optional<std::string> checkpoint;
  std::vector<std::size_t> values;

  void add_to(CLI::App* app, bool all) {
    app->add_option("--config", config, "Experiment JSON (or a manifest.json to re-run)");
    app->add_option("--seed", seed, "Single seed for evaluation networks and training");
    app->add_option("--seeds", seeds, "Evaluation seeds");
    app->add_option("--out", out, "Output directory");
    app->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--epochs", epochs, "Training epochs, or solver iterations for compare");
    app->add_option("--nodes", nodes, "Network size")->check(CLI::Range(2, 100000));
    app->add_option("--flows", flows, "Number of flows")->check(CLI::PositiveNumber);
    app->add_option("--arrival-mean", arrival_mean, "Mean arrivals per node and flow");
    if (all) app->add_option("--checkpoint", checkpoint, "Policy checkpoint JSON");
  }

  ExperimentConfig apply(ExperimentKind kind, bool force_kind) const {
    ExperimentConfig cfg;
    if (!config.empty()) {
      cfg = oproute::load_config(config);
    }
    if (force_kind || config.empty()) cfg.kind = kind;
    if (seed) {
      cfg.seeds = {*seed};
      cfg.train.seed = *seed;
    }
    if (!seeds.empty()) cfg.seeds = seeds;
    if (out) cfg.output_dir = *out;
    if (threads) cfg.threads = *threads;
    if (epochs) {
      cfg.train.epochs = *epochs;
      cfg.dd.iters = *epochs;
      cfg.mom.outer_iters = *epochs;
    }
    if (nodes) cfg.topology.nodes = *nodes;
    if (flows) cfg.flows.count = *flows;
    if (arrival_mean) cfg.flows.arrival_mean = *arrival_mean;
    if (checkpoint) cfg.checkpoint = *checkpoint;
    if (!values.empty()) {
      if (cfg.kind == ExperimentKind::kScaleFlows) {
        cfg.sweep.flows = values;
      } else {
        cfg.sweep.nodes = values;
      }
    }
    oproute::validate_config(cfg);
    return cfg;
  }
};

int run(const ExperimentConfig& cfg) {
  const oproute::RunResult res = oproute::run_experiment(cfg);
  std::cout << fmt::format("{}: wrote {} files to {} ({:.1f} s)\n", oproute::to_string(cfg.kind),
                           res.manifest.outputs.size() + 1, res.output_dir.string(),
                           res.manifest.wall_clock_seconds);
  return 0;
}

std::pair<std::string, std::string> split_where(const std::string& where) {
  const auto eq = where.find('=');
  if (eq == std::string::npos) throw CLI::ValidationError("--where", "expected column=value");
  return {where.substr(0, eq), where.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opportunistic routing experiments: simulation, training and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", oproute::version_tag());

  // generate
  auto* gen = app.add_subcommand("generate", "Write a random k-nearest-neighbour topology");
  std::size_t gen_nodes = 10, gen_knn = 4;
  std::uint64_t gen_seed = 1;
  double gen_capacity = oproute::kDefaultCapacity;
  std::string gen_out;
  gen->add_option("--nodes", gen_nodes, "Number of nodes")->check(CLI::PositiveNumber);
  gen->add_option("--knn", gen_knn, "Neighbours per node")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Placement seed");
  gen->add_option("--capacity", gen_capacity, "Per-node capacity")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output file, .json or .graphml")->required();

  Overrides train_o, eval_o, compare_o, sweep_o, run_o;
  auto* train = app.add_subcommand("train", "Train a state-augmented policy (kind sa-train)");
  train_o.add_to(train, true);
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against baselines (kind sa-eval)");
  eval_o.add_to(eval, true);
  auto* compare = app.add_subcommand("compare", "Dual descent vs method of multipliers (kind unparam-compare)");
  compare_o.add_to(compare, false);
  auto* sweep = app.add_subcommand("sweep", "Size, flow, transfer or perturbation sweep");
  sweep_o.add_to(sweep, true);
  std::string sweep_kind = "scale-nodes";
  sweep->add_option("--kind", sweep_kind, "scale-nodes, scale-flows, transfer or perturb")
      ->check(CLI::IsMember({"scale-nodes", "scale-flows", "transfer", "perturb"}));
  sweep->add_option("--values", sweep_o.values, "Sizes (or flow counts) to sweep");
  auto* runc = app.add_subcommand("run", "Run any experiment kind from a config file");
  run_o.add_to(runc, true);
  runc->get_option("--config")->required();

  // plot
  auto* plot = app.add_subcommand("plot", "Render an SVG chart from CSV output");
  std::string plot_csv, plot_out, plot_x, plot_group, plot_where, plot_title, plot_edges;
  std::vector<std::string> plot_y;
  bool plot_log = false;
  plot->add_option("--csv", plot_csv, "Input CSV (nodes CSV for --route-map)")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "Output SVG")->required();
  plot->add_option("--x", plot_x, "X column");
  plot->add_option("--y", plot_y, "Y columns");
  plot->add_option("--group", plot_group, "One series per value of this column");
  plot->add_option("--where", plot_where, "Row filter column=value");
  plot->add_option("--title", plot_title, "Chart title");
  plot->add_flag("--log-y", plot_log, "Logarithmic y axis");
  plot->add_option("--route-map", plot_edges, "Edges CSV; draws a route map instead of a line chart")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const oproute::Topology topo = oproute::generate_knn(gen_nodes, gen_knn, gen_seed, gen_capacity);
      if (std::filesystem::path(gen_out).extension() == ".graphml") {
        oproute::save_graphml(topo, gen_out);
      } else {
        oproute::save_topology_json(topo, gen_out);
      }
      std::cout << fmt::format("wrote {} nodes, {} edges to {}\n", topo.size(), topo.edges.size(), gen_out);
      return 0;
    }
    if (*train) return run(train_o.apply(ExperimentKind::kSaTrain, true));
    if (*eval) return run(eval_o.apply(ExperimentKind::kSaEval, true));
    if (*compare) return run(compare_o.apply(ExperimentKind::kUnparamCompare, true));
    if (*sweep) return run(sweep_o.apply(oproute::experiment_kind_from_string(sweep_kind), true));
    if (*runc) return run(run_o.apply(ExperimentKind::kSaEval, false));
    if (*plot) {
      std::string where_col, where_val;
      if (!plot_where.empty()) std::tie(where_col, where_val) = split_where(plot_where);
      std::string svg;
      if (!plot_edges.empty()) {
        svg = oproute::route_map_svg(oproute::read_csv(plot_csv), oproute::read_csv(plot_edges),
                                     {.title = plot_title,
                                      .intensity = "normalized",
                                      .where_column = where_col,
                                      .where_value = where_val});
      } else {
        if (plot_x.empty() || plot_y.empty()) throw CLI::ValidationError("plot", "--x and --y are required");
        oproute::LineChartSpec spec;
        spec.title = plot_title;
        spec.x = plot_x;
        spec.y = plot_y;
        spec.group = plot_group;
        spec.where_column = where_col;
        spec.where_value = where_val;
        spec.log_y = plot_log;
        svg = oproute::line_chart_svg(oproute::read_csv(plot_csv), spec);
      }
      oproute::write_text_file(plot_out, svg);
      std::cout << "wrote " << plot_out << "\n";
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const oproute::SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const oproute::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

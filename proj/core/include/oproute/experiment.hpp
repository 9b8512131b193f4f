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

// Experiment configuration, orchestration and run manifests.
//
// An experiment reads one JSON document, writes CSV files into its output
// directory, renders SVG charts from those CSV files and finishes with
// manifest.json listing every emitted file and its SHA-256 digest. The
// document format is described in docs/config.md.

#ifndef OPROUTE_EXPERIMENT_HPP_
#define OPROUTE_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "oproute/state_aug.hpp"
#include "oproute/topology.hpp"
#include "oproute/unparam.hpp"

namespace oproute {

enum class ExperimentKind {
  kUnparamCompare,
  kSaTrain,
  kSaEval,
  kScaleNodes,
  kScaleFlows,
  kPerturb,
  kTransfer,
  kRouteMap,
  kDualTrace,
  kTopologyZoo,
};

std::string to_string(ExperimentKind kind);
// Throws SchemaError at path "kind" for unknown names.
ExperimentKind experiment_kind_from_string(const std::string& name);
const std::vector<std::string>& experiment_kind_names();

struct TopologyParams {
  std::size_t nodes = 10;
  std::size_t knn = 4;
  double cutoff = kDefaultCutoff;
  double capacity = kDefaultCapacity;
  std::vector<std::string> graphml;  // topology-zoo inputs

  bool operator==(const TopologyParams&) const = default;
};

struct FlowParams {
  std::size_t count = 4;
  std::vector<std::size_t> destinations;  // empty: drawn per seed
  double arrival_mean = 18.0;
  double spread = 0.8;
  ArrivalLaw law = ArrivalLaw::kExponential;

  bool operator==(const FlowParams&) const = default;
};

// Budget and model fields of TrainConfig. The network shape of training
// comes from the topology and flow sections.
struct TrainParams {
  std::size_t samples = 128;
  std::size_t batch = 16;
  std::size_t epochs = 30;
  std::size_t horizon = 100;
  std::size_t period = 5;
  double lr = 0.05;
  double rho = 3.0;
  double rho_decay = 0.98;
  double mu_low = 1.0;
  double mu_high = 5.0;
  std::uint64_t seed = 1;
  GnnArchitecture arch;

  bool operator==(const TrainParams&) const = default;
};

struct SweepParams {
  std::vector<std::size_t> nodes{10, 20, 30, 40, 50};
  std::vector<std::size_t> flows{2, 4, 6, 8};
  std::size_t train_nodes = 20;
  std::size_t train_flows = 5;
  bool native = false;           // transfer: also train at every size
  std::size_t native_batch = 16;
  double perturb_fraction = 0.5;
  double perturb_magnitude = 0.2;
  std::size_t growth_window = 50;
  bool per_step_dd = true;       // sa-eval and scale kinds

  bool operator==(const SweepParams&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kSaEval;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";
  std::string checkpoint;  // empty: train one from the train section
  std::size_t threads = 1;
  TopologyParams topology;
  FlowParams flows;
  DdConfig dd;
  MomConfig mom;
  TrainParams train;
  ExecConfig exec;
  SweepParams sweep;

  bool operator==(const ExperimentConfig&) const = default;
};

// Throws SchemaError with the dotted path of the first offending field.
// Unknown fields and wrong types are errors; missing fields keep their
// defaults. Value ranges are left to validate_config so that command-line
// flags can be applied first. A manifest document is accepted and its config
// snapshot is used.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Every field, so parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);
// Range and cross-field checks. run_experiment calls this first.
void validate_config(const ExperimentConfig& cfg);

TrainConfig training_config(const ExperimentConfig& cfg, std::size_t nodes, std::size_t flows);

// Topology and flows of evaluation seed `seed` at the given size.
struct EvalNetwork {
  Topology topo;
  ChannelMatrix channel;
  FlowSpec spec;
};
EvalNetwork eval_network(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t nodes,
                         std::size_t flows);

// Dual descent re-solved on each step's arrivals.
Policy per_step_dd_policy(const Topology& topo, const ChannelMatrix& channel,
                          const FlowSpec& spec, const DdConfig& dd);

struct ManifestEntry {
  std::string path;  // relative to the output directory, '/' separated
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  ExperimentConfig config;
  std::string version;
  std::string started_utc;
  double wall_clock_seconds = 0.0;
  std::vector<ManifestEntry> outputs;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);
std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);
// Source version tag compiled into the library.
std::string version_tag();

struct RunResult {
  std::filesystem::path output_dir;
  RunManifest manifest;
};

// Runs one experiment. Points of sweep kinds run on cfg.threads workers, each
// writing its own subdirectory.
RunResult run_experiment(const ExperimentConfig& cfg);

}  // namespace oproute

#endif  // OPROUTE_EXPERIMENT_HPP_

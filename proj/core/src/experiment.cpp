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

#include "oproute/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <type_traits>
#include <utility>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "oproute/baselines.hpp"
#include "oproute/charts.hpp"
#include "oproute/checkpoint.hpp"
#include "oproute/errors.hpp"
#include "oproute/graphml.hpp"

#ifndef OPROUTE_VERSION_TAG
#define OPROUTE_VERSION_TAG "unknown"
#endif

namespace oproute {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kKindNames[] = {"unparam-compare", "sa-train",  "sa-eval",   "scale-nodes",
                                      "scale-flows",     "perturb",   "transfer",  "route-map",
                                      "dual-trace",      "topology-zoo"};

// ---- schema reading ---------------------------------------------------------

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string indexed(const std::string& path, std::size_t i) {
  return fmt::format("{}[{}]", path, i);
}

void read(const json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) throw SchemaError(path, "expected true or false");
  out = j.get<bool>();
}

void read(const json& j, const std::string& path, double& out) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  out = j.get<double>();
  if (!std::isfinite(out)) throw SchemaError(path, "expected a finite number");
}

static_assert(std::is_same_v<std::size_t, std::uint64_t>,
              "size_t fields are read through the uint64_t overload");

void read(const json& j, const std::string& path, std::uint64_t& out) {
  if (!j.is_number_unsigned()) throw SchemaError(path, "expected a non-negative integer");
  out = j.get<std::uint64_t>();
}

void read(const json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  out = j.get<std::string>();
}

void read(const json& j, const std::string& path, ArrivalLaw& out) {
  std::string name;
  read(j, path, name);
  try {
    out = arrival_law_from_string(name);
  } catch (const Error&) {
    throw SchemaError(path, "unknown arrival law '" + name + "' (constant, uniform, exponential)");
  }
}

void read(const json& j, const std::string& path, Activation& out) {
  std::string name;
  read(j, path, name);
  try {
    out = activation_from_string(name);
  } catch (const Error&) {
    throw SchemaError(path, "unknown activation '" + name + "' (relu, tanh, identity)");
  }
}

void read(const json& j, const std::string& path, ExperimentKind& out) {
  std::string name;
  read(j, path, name);
  out = experiment_kind_from_string(name);
}

template <typename T>
void read(const json& j, const std::string& path, std::vector<T>& out) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  std::vector<T> v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) read(j[i], indexed(path, i), v[i]);
  out = std::move(v);
}

// Reads the fields of one object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_.empty() ? "$" : path_, "expected an object");
  }

  template <typename T>
  Section& field(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it != j_.end()) read(*it, join(path_, key), out);
    return *this;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw SchemaError(join(path_, key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json to_json(const ExperimentConfig& c) {
  const TrainParams& t = c.train;
  json j;
  j["kind"] = to_string(c.kind);
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  j["checkpoint"] = c.checkpoint;
  j["threads"] = c.threads;
  j["topology"] = {{"nodes", c.topology.nodes},
                   {"knn", c.topology.knn},
                   {"cutoff", c.topology.cutoff},
                   {"capacity", c.topology.capacity},
                   {"graphml", c.topology.graphml}};
  j["flows"] = {{"count", c.flows.count},
                {"destinations", c.flows.destinations},
                {"arrival_mean", c.flows.arrival_mean},
                {"spread", c.flows.spread},
                {"law", to_string(c.flows.law)}};
  j["dd"] = {{"iters", c.dd.iters},
             {"primal_rate", c.dd.primal_rate},
             {"dual_rate", c.dd.dual_rate},
             {"packet_logit", c.dd.packet_logit}};
  j["mom"] = {{"outer_iters", c.mom.outer_iters},
              {"inner_steps", c.mom.inner_steps},
              {"rho0", c.mom.rho0},
              {"decay", c.mom.decay},
              {"primal_rate", c.mom.primal_rate},
              {"max_halvings", c.mom.max_halvings},
              {"packet_logit", c.mom.packet_logit}};
  j["train"] = {{"samples", t.samples},
                {"batch", t.batch},
                {"epochs", t.epochs},
                {"horizon", t.horizon},
                {"period", t.period},
                {"lr", t.lr},
                {"rho", t.rho},
                {"rho_decay", t.rho_decay},
                {"mu_low", t.mu_low},
                {"mu_high", t.mu_high},
                {"seed", t.seed},
                {"widths", t.arch.widths},
                {"taps", t.arch.taps},
                {"activation", to_string(t.arch.activation)},
                {"normalize_gso", t.arch.normalize_gso}};
  j["exec"] = {{"horizon", c.exec.horizon},
               {"period", c.exec.period},
               {"dual_rate", c.exec.dual_rate},
               {"jitter", c.exec.jitter}};
  j["sweep"] = {{"nodes", c.sweep.nodes},
                {"flows", c.sweep.flows},
                {"train_nodes", c.sweep.train_nodes},
                {"train_flows", c.sweep.train_flows},
                {"native", c.sweep.native},
                {"native_batch", c.sweep.native_batch},
                {"perturb_fraction", c.sweep.perturb_fraction},
                {"perturb_magnitude", c.sweep.perturb_magnitude},
                {"growth_window", c.sweep.growth_window},
                {"per_step_dd", c.sweep.per_step_dd}};
  return j;
}

ExperimentConfig from_json(const json& doc) {
  ExperimentConfig c;
  Section root(doc, "");
  if (doc.is_object() && doc.contains("format")) {
    std::string format;
    root.field("format", format);
    if (format != "oproute-manifest") throw SchemaError("format", "expected oproute-manifest");
    const json* cfg = root.child("config");
    if (!cfg) throw SchemaError("config", "manifest has no config snapshot");
    return from_json(*cfg);
  }
  root.field("kind", c.kind)
      .field("seeds", c.seeds)
      .field("output_dir", c.output_dir)
      .field("checkpoint", c.checkpoint)
      .field("threads", c.threads);
  if (const json* s = root.child("topology")) {
    Section(*s, "topology")
        .field("nodes", c.topology.nodes)
        .field("knn", c.topology.knn)
        .field("cutoff", c.topology.cutoff)
        .field("capacity", c.topology.capacity)
        .field("graphml", c.topology.graphml)
        .finish();
  }
  if (const json* s = root.child("flows")) {
    Section(*s, "flows")
        .field("count", c.flows.count)
        .field("destinations", c.flows.destinations)
        .field("arrival_mean", c.flows.arrival_mean)
        .field("spread", c.flows.spread)
        .field("law", c.flows.law)
        .finish();
  }
  if (const json* s = root.child("dd")) {
    Section(*s, "dd")
        .field("iters", c.dd.iters)
        .field("primal_rate", c.dd.primal_rate)
        .field("dual_rate", c.dd.dual_rate)
        .field("packet_logit", c.dd.packet_logit)
        .finish();
  }
  if (const json* s = root.child("mom")) {
    Section(*s, "mom")
        .field("outer_iters", c.mom.outer_iters)
        .field("inner_steps", c.mom.inner_steps)
        .field("rho0", c.mom.rho0)
        .field("decay", c.mom.decay)
        .field("primal_rate", c.mom.primal_rate)
        .field("max_halvings", c.mom.max_halvings)
        .field("packet_logit", c.mom.packet_logit)
        .finish();
  }
  if (const json* s = root.child("train")) {
    TrainParams& t = c.train;
    Section(*s, "train")
        .field("samples", t.samples)
        .field("batch", t.batch)
        .field("epochs", t.epochs)
        .field("horizon", t.horizon)
        .field("period", t.period)
        .field("lr", t.lr)
        .field("rho", t.rho)
        .field("rho_decay", t.rho_decay)
        .field("mu_low", t.mu_low)
        .field("mu_high", t.mu_high)
        .field("seed", t.seed)
        .field("widths", t.arch.widths)
        .field("taps", t.arch.taps)
        .field("activation", t.arch.activation)
        .field("normalize_gso", t.arch.normalize_gso)
        .finish();
  }
  if (const json* s = root.child("exec")) {
    Section(*s, "exec")
        .field("horizon", c.exec.horizon)
        .field("period", c.exec.period)
        .field("dual_rate", c.exec.dual_rate)
        .field("jitter", c.exec.jitter)
        .finish();
  }
  if (const json* s = root.child("sweep")) {
    Section(*s, "sweep")
        .field("nodes", c.sweep.nodes)
        .field("flows", c.sweep.flows)
        .field("train_nodes", c.sweep.train_nodes)
        .field("train_flows", c.sweep.train_flows)
        .field("native", c.sweep.native)
        .field("native_batch", c.sweep.native_batch)
        .field("perturb_fraction", c.sweep.perturb_fraction)
        .field("perturb_magnitude", c.sweep.perturb_magnitude)
        .field("growth_window", c.sweep.growth_window)
        .field("per_step_dd", c.sweep.per_step_dd)
        .finish();
  }
  root.finish();
  return c;
}

// ---- small helpers ----------------------------------------------------------

std::uint64_t derive(std::uint64_t seed, std::uint32_t tag, std::uint64_t a = 0,
                     std::uint64_t b = 0) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), tag, lo(a), hi(a), lo(b), hi(b)};
  Rng rng(seq);
  return rng();
}

constexpr std::uint32_t kTagNetwork = 0x6e657477;
constexpr std::uint32_t kTagExec = 0x65786563;
constexpr std::uint32_t kTagPerturb = 0x70657274;
constexpr std::uint32_t kTagZoo = 0x7a6f6f31;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

// Prepends constant columns to every line of a CSV document.
std::string with_columns(const std::string& csv, const std::string& names,
                         const std::string& values) {
  std::istringstream in(csv);
  std::string line, out;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out += (header ? names : values) + "," + line + "\n";
    header = false;
  }
  return out;
}

// Drops the header of a CSV document.
std::string body(const std::string& csv) {
  const auto nl = csv.find('\n');
  return nl == std::string::npos ? std::string() : csv.substr(nl + 1);
}

std::string seed_list(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::uint64_t s : seeds) out += (out.empty() ? "" : ";") + std::to_string(s);
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct ChartJob {
  std::string csv;
  std::string svg;
  LineChartSpec spec;
};

struct RouteMapJob {
  std::string nodes_csv;
  std::string edges_csv;
  std::string svg;
  RouteMapSpec spec;
};

// Shared state of one run. Writers may be called from worker threads.
class RunContext {
 public:
  RunContext(const ExperimentConfig& cfg, fs::path out) : cfg_(cfg), out_(std::move(out)) {}

  const ExperimentConfig& cfg() const { return cfg_; }
  const fs::path& out() const { return out_; }

  void write(const std::string& rel, const std::string& text) {
    write_text_file(out_ / rel, text);
    std::lock_guard lock(mu_);
    files_.insert(rel);
  }

  void chart(std::string csv, std::string svg, LineChartSpec spec) {
    std::lock_guard lock(mu_);
    charts_.push_back({std::move(csv), std::move(svg), std::move(spec)});
  }

  void route_map(std::string nodes, std::string edges, std::string svg, RouteMapSpec spec) {
    std::lock_guard lock(mu_);
    maps_.push_back({std::move(nodes), std::move(edges), std::move(svg), std::move(spec)});
  }

  // Charts are rendered from the CSV files on disk, after all workers finish.
  void render_charts() {
    std::sort(charts_.begin(), charts_.end(),
              [](const ChartJob& a, const ChartJob& b) { return a.svg < b.svg; });
    for (const ChartJob& job : charts_)
      write(job.svg, line_chart_svg(read_csv(out_ / job.csv), job.spec));
    std::sort(maps_.begin(), maps_.end(),
              [](const RouteMapJob& a, const RouteMapJob& b) { return a.svg < b.svg; });
    for (const RouteMapJob& job : maps_)
      write(job.svg, route_map_svg(read_csv(out_ / job.nodes_csv), read_csv(out_ / job.edges_csv),
                                   job.spec));
  }

  std::vector<std::string> files() const { return {files_.begin(), files_.end()}; }

 private:
  const ExperimentConfig& cfg_;
  fs::path out_;
  std::mutex mu_;
  std::set<std::string> files_;
  std::vector<ChartJob> charts_;
  std::vector<RouteMapJob> maps_;
};

std::string rel_in(const std::string& dir, const std::string& name) {
  return dir.empty() ? name : dir + "/" + name;
}

GnnParams train_policy(RunContext& ctx, const TrainConfig& tc, const std::string& dir,
                       std::optional<GnnParams> init = std::nullopt) {
  TrainResult res;
  try {
    res = train(tc, knn_sampler(tc), std::move(init));
  } catch (const InvalidParameter& e) {
    throw SchemaError("train", e.what());
  }
  ctx.write(rel_in(dir, "checkpoint.json"), checkpoint_to_json(res.params));
  const std::string log_rel = rel_in(dir, "train_log.csv");
  ctx.write(log_rel, with_columns(train_log_csv(res.log), "seed,nodes,flows",
                                  fmt::format("{},{},{}", tc.seed, tc.nodes, tc.flows)));
  ctx.chart(log_rel, rel_in(dir, "train_utility.svg"),
            {.title = fmt::format("Training utility, n={} F={}", tc.nodes, tc.flows),
             .x = "epoch",
             .y = {"utility"}});
  ctx.chart(log_rel, rel_in(dir, "train_lagrangian.svg"),
            {.title = fmt::format("Training augmented Lagrangian, n={} F={}", tc.nodes, tc.flows),
             .x = "epoch",
             .y = {"lagrangian"}});
  return res.params;
}

// The configured checkpoint, or a policy trained for (nodes, flows).
GnnParams policy(RunContext& ctx, std::size_t nodes, std::size_t flows, const std::string& dir,
                 std::size_t threads) {
  if (!ctx.cfg().checkpoint.empty()) return load_checkpoint(ctx.cfg().checkpoint);
  TrainConfig tc = training_config(ctx.cfg(), nodes, flows);
  tc.threads = threads;
  return train_policy(ctx, tc, dir);
}

ExecResult run_sa(const ExperimentConfig& cfg, const GnnParams& params, const EvalNetwork& net,
                  std::uint64_t seed) {
  Rng rng(derive(seed, kTagExec));
  return execute(params, net.topo, net.channel, net.spec, cfg.exec, rng);
}

Trajectory run_exor_baseline(const ExperimentConfig& cfg, const EvalNetwork& net,
                             std::uint64_t seed) {
  Rng rng(derive(seed, kTagExec));
  return run_exor(net.topo, net.channel, net.spec, cfg.exec.horizon, rng);
}

Trajectory run_dd_baseline(const ExperimentConfig& cfg, const EvalNetwork& net,
                           std::uint64_t seed) {
  Rng rng(derive(seed, kTagExec));
  return simulate(net.topo, net.channel, net.spec, cfg.exec.horizon, rng,
                  per_step_dd_policy(net.topo, net.channel, net.spec, cfg.dd));
}

double growth(const ExperimentConfig& cfg, const Trajectory& traj) {
  return queue_growth_rate(traj, cfg.sweep.growth_window);
}

// ---- experiment kinds -------------------------------------------------------

void run_unparam_compare(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  std::string series =
      "seed,iter,dd_utility,mom_utility,dd_mean_violation,mom_mean_violation,"
      "dd_max_violation,mom_max_violation\n";
  std::string summary =
      "seed,dd_utility,mom_utility,dd_mean_violation,mom_mean_violation,dd_max_violation,"
      "mom_max_violation\n";
  for (std::uint64_t seed : cfg.seeds) {
    EvalNetwork net = eval_network(cfg, seed, cfg.topology.nodes, cfg.flows.count);
    const UnparamProblem problem = make_problem(net.topo, cfg.topology.cutoff, net.spec);
    const DdResult dd = dd_solve(problem, cfg.dd);
    const MomResult mom = mom_solve(problem, cfg.mom);
    std::map<std::size_t, std::pair<const IterMetrics*, const IterMetrics*>> by_iter;
    for (const auto& m : dd.history) by_iter[m.iter].first = &m;
    for (const auto& m : mom.history) by_iter[m.iter].second = &m;
    auto cell = [](const IterMetrics* m, double IterMetrics::*f) {
      return m ? fmt::format("{}", m->*f) : std::string();
    };
    for (const auto& [iter, p] : by_iter) {
      series += fmt::format("{},{},{},{},{},{},{},{}\n", seed, iter,
                            cell(p.first, &IterMetrics::utility),
                            cell(p.second, &IterMetrics::utility),
                            cell(p.first, &IterMetrics::mean_violation),
                            cell(p.second, &IterMetrics::mean_violation),
                            cell(p.first, &IterMetrics::max_violation),
                            cell(p.second, &IterMetrics::max_violation));
    }
    const IterMetrics& d = dd.history.back();
    const IterMetrics& m = mom.history.back();
    summary += fmt::format("{},{},{},{},{},{},{}\n", seed, d.utility, m.utility, d.mean_violation,
                           m.mean_violation, d.max_violation, m.max_violation);
  }
  ctx.write("unparam_compare.csv", series);
  ctx.write("unparam_summary.csv", summary);
  const std::string first = std::to_string(cfg.seeds.front());
  ctx.chart("unparam_compare.csv", "unparam_utility.svg",
            {.title = "Utility per iteration, seed " + first,
             .x = "iter",
             .y = {"dd_utility", "mom_utility"},
             .where_column = "seed",
             .where_value = first,
             .y_label = "utility"});
  ctx.chart("unparam_compare.csv", "unparam_violation.svg",
            {.title = "Mean constraint violation per iteration, seed " + first,
             .x = "iter",
             .y = {"dd_mean_violation", "mom_mean_violation"},
             .where_column = "seed",
             .where_value = first,
             .y_label = "mean violation"});
}

void run_sa_train(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  TrainConfig tc = training_config(cfg, cfg.topology.nodes, cfg.flows.count);
  tc.threads = cfg.threads;
  std::optional<GnnParams> init;
  if (!cfg.checkpoint.empty()) init = load_checkpoint(cfg.checkpoint);
  train_policy(ctx, tc, "", std::move(init));
}

void run_sa_eval(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  const GnnParams params = load_checkpoint(cfg.checkpoint);
  const bool dd = cfg.sweep.per_step_dd;
  std::string queues = dd ? "seed,t,sa_mean_queue,dd_mean_queue,exor_mean_queue\n"
                          : "seed,t,sa_mean_queue,exor_mean_queue\n";
  std::string summary = "seed,policy,utility,growth,final_mean_queue\n";
  std::string sa_log;
  for (std::uint64_t seed : cfg.seeds) {
    const EvalNetwork net = eval_network(cfg, seed, cfg.topology.nodes, cfg.flows.count);
    const ExecResult sa = run_sa(cfg, params, net, seed);
    const Trajectory exor = run_exor_baseline(cfg, net, seed);
    Trajectory ddt;
    if (dd) ddt = run_dd_baseline(cfg, net, seed);
    const auto qs = sa.traj.mean_queue();
    const auto qe = exor.mean_queue();
    const auto qd = dd ? ddt.mean_queue() : std::vector<double>();
    for (std::size_t t = 0; t < qs.size(); ++t) {
      queues += dd ? fmt::format("{},{},{},{},{}\n", seed, t, qs[t], qd[t], qe[t])
                   : fmt::format("{},{},{},{}\n", seed, t, qs[t], qe[t]);
    }
    auto row = [&](const char* name, const Trajectory& traj) {
      summary += fmt::format("{},{},{},{},{}\n", seed, name, utility(traj), growth(cfg, traj),
                             traj.mean_queue().back());
    };
    row("sa", sa.traj);
    if (dd) row("dd", ddt);
    row("exor", exor);
    const std::string log = with_columns(execution_log_csv(sa), "seed", std::to_string(seed));
    sa_log += sa_log.empty() ? log : body(log);
  }
  ctx.write("eval_queues.csv", queues);
  ctx.write("eval_summary.csv", summary);
  ctx.write("eval_sa_log.csv", sa_log);
  const std::string first = std::to_string(cfg.seeds.front());
  LineChartSpec q{.title = "Mean queue length, seed " + first,
                  .x = "t",
                  .y = {"sa_mean_queue", "exor_mean_queue"},
                  .where_column = "seed",
                  .where_value = first,
                  .x_label = "time step",
                  .y_label = "mean queue"};
  if (dd) q.y.insert(q.y.begin() + 1, "dd_mean_queue");
  ctx.chart("eval_queues.csv", "eval_queues.svg", q);
  ctx.chart("eval_sa_log.csv", "eval_sa_utility.svg",
            {.title = "State-augmented utility of the running average",
             .x = "t",
             .y = {"utility_so_far"},
             .group = "seed",
             .x_label = "time step",
             .y_label = "utility"});
}

void run_scale(RunContext& ctx, bool nodes_axis) {
  const ExperimentConfig& cfg = ctx.cfg();
  const auto& points = nodes_axis ? cfg.sweep.nodes : cfg.sweep.flows;
  const char* axis = nodes_axis ? "nodes" : "flows";
  const bool dd = cfg.sweep.per_step_dd;
  const std::string header =
      fmt::format("{},seed,sa_utility,exor_utility,sa_growth,exor_growth,relative_exor{}\n", axis,
                  dd ? ",dd_utility,dd_growth,relative_dd" : "");
  std::vector<std::string> rows(points.size());
  const std::size_t inner_threads = points.size() > 1 ? 1 : cfg.threads;
  parallel_for(points.size(), cfg.threads, [&](std::size_t p) {
    const std::size_t n = nodes_axis ? points[p] : cfg.topology.nodes;
    const std::size_t f = nodes_axis ? cfg.flows.count : points[p];
    const std::string dir = fmt::format("{}_{}", axis, points[p]);
    const GnnParams params = policy(ctx, n, f, dir, inner_threads);
    std::string out;
    for (std::uint64_t seed : cfg.seeds) {
      const EvalNetwork net = eval_network(cfg, seed, n, f);
      const ExecResult sa = run_sa(cfg, params, net, seed);
      const Trajectory exor = run_exor_baseline(cfg, net, seed);
      const double us = utility(sa.traj);
      const double ue = utility(exor);
      out += fmt::format("{},{},{},{},{},{},{}", points[p], seed, us, ue, growth(cfg, sa.traj),
                         growth(cfg, exor), us / ue);
      if (dd) {
        const Trajectory ddt = run_dd_baseline(cfg, net, seed);
        const double ud = utility(ddt);
        out += fmt::format(",{},{},{}", ud, growth(cfg, ddt), us / ud);
      }
      out += "\n";
    }
    ctx.write(dir + "/points.csv", header + out);
    rows[p] = std::move(out);
  });
  std::string all = header;
  for (const auto& r : rows) all += r;
  ctx.write("scale_summary.csv", all);

  const CsvTable table = parse_csv(all);
  std::vector<std::string> cols{"sa_utility", "exor_utility", "sa_growth", "exor_growth",
                                "relative_exor"};
  if (dd) cols.insert(cols.end(), {"dd_utility", "dd_growth", "relative_dd"});
  std::string means = std::string(axis) + ",seeds";
  for (const auto& c : cols) means += "," + c;
  means += "\n";
  for (std::size_t p = 0; p < points.size(); ++p) {
    means += std::to_string(points[p]) + "," + seed_list(cfg.seeds);
    for (const auto& c : cols) {
      std::vector<double> v;
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r][0] == std::to_string(points[p])) v.push_back(*table.number(r, table.column(c)));
      }
      means += fmt::format(",{}", mean(v));
    }
    means += "\n";
  }
  ctx.write("scale_mean.csv", means);
  ctx.chart("scale_mean.csv", "scale_relative.svg",
            {.title = fmt::format("Relative utility of state augmentation vs {}", axis),
             .x = axis,
             .y = dd ? std::vector<std::string>{"relative_dd", "relative_exor"}
                     : std::vector<std::string>{"relative_exor"},
             .y_label = "utility ratio"});
  ctx.chart("scale_mean.csv", "scale_growth.svg",
            {.title = fmt::format("Queue growth rate vs {}", axis),
             .x = axis,
             .y = dd ? std::vector<std::string>{"sa_growth", "dd_growth", "exor_growth"}
                     : std::vector<std::string>{"sa_growth", "exor_growth"},
             .y_label = "packets / step"});
}

void run_perturb(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  const GnnParams params = policy(ctx, cfg.topology.nodes, cfg.flows.count, "", cfg.threads);
  std::string summary =
      "seed,fraction,magnitude,utility,perturbed_utility,degradation,growth,perturbed_growth\n";
  std::string queues = "seed,t,mean_queue,perturbed_mean_queue\n";
  for (std::uint64_t seed : cfg.seeds) {
    const EvalNetwork net = eval_network(cfg, seed, cfg.topology.nodes, cfg.flows.count);
    EvalNetwork moved = net;
    moved.topo = perturb(net.topo, cfg.sweep.perturb_fraction, cfg.sweep.perturb_magnitude,
                         derive(seed, kTagPerturb));
    moved.channel = channel_from_distance(moved.topo, cfg.topology.cutoff);
    const ExecResult base = run_sa(cfg, params, net, seed);
    const ExecResult pert = run_sa(cfg, params, moved, seed);
    const double u0 = utility(base.traj);
    const double u1 = utility(pert.traj);
    summary += fmt::format("{},{},{},{},{},{},{},{}\n", seed, cfg.sweep.perturb_fraction,
                           cfg.sweep.perturb_magnitude, u0, u1, (u0 - u1) / std::abs(u0),
                           growth(cfg, base.traj), growth(cfg, pert.traj));
    const auto q0 = base.traj.mean_queue();
    const auto q1 = pert.traj.mean_queue();
    for (std::size_t t = 0; t < q0.size(); ++t)
      queues += fmt::format("{},{},{},{}\n", seed, t, q0[t], q1[t]);
  }
  ctx.write("perturb_summary.csv", summary);
  ctx.write("perturb_queues.csv", queues);
  const std::string first = std::to_string(cfg.seeds.front());
  ctx.chart("perturb_queues.csv", "perturb_queues.svg",
            {.title = "Mean queue before and after displacement, seed " + first,
             .x = "t",
             .y = {"mean_queue", "perturbed_mean_queue"},
             .where_column = "seed",
             .where_value = first,
             .x_label = "time step",
             .y_label = "mean queue"});
}

void run_transfer(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  const std::size_t flows = cfg.sweep.train_flows;
  const GnnParams source = policy(ctx, cfg.sweep.train_nodes, flows, "source", cfg.threads);
  const bool native = cfg.sweep.native;
  const auto& sizes = cfg.sweep.nodes;
  const std::string header = native
      ? "nodes,seed,transfer_utility,transfer_growth,native_utility,native_growth\n"
      : "nodes,seed,transfer_utility,transfer_growth\n";
  std::vector<std::string> detail(sizes.size());
  std::vector<std::string> summary(sizes.size());
  const std::size_t inner_threads = sizes.size() > 1 ? 1 : cfg.threads;
  parallel_for(sizes.size(), cfg.threads, [&](std::size_t p) {
    const std::size_t n = sizes[p];
    std::optional<GnnParams> own;
    if (native) {
      TrainConfig tc = training_config(cfg, n, flows);
      tc.batch = cfg.sweep.native_batch;
      tc.samples = std::max<std::size_t>(1, cfg.train.samples * tc.batch / cfg.train.batch);
      tc.threads = inner_threads;
      own = train_policy(ctx, tc, fmt::format("nodes_{}", n));
    }
    std::vector<double> tu, tg, nu, ng;
    for (std::uint64_t seed : cfg.seeds) {
      const EvalNetwork net = eval_network(cfg, seed, n, flows);
      const ExecResult tr = run_sa(cfg, source, net, seed);
      tu.push_back(utility(tr.traj));
      tg.push_back(growth(cfg, tr.traj));
      detail[p] += fmt::format("{},{},{},{}", n, seed, tu.back(), tg.back());
      if (own) {
        const ExecResult nr = run_sa(cfg, *own, net, seed);
        nu.push_back(utility(nr.traj));
        ng.push_back(growth(cfg, nr.traj));
        detail[p] += fmt::format(",{},{}", nu.back(), ng.back());
      }
      detail[p] += "\n";
    }
    summary[p] = fmt::format("{},{},{},{}", n, seed_list(cfg.seeds), mean(tu), mean(tg));
    if (own) summary[p] += fmt::format(",{},{}", mean(nu), mean(ng));
    summary[p] += "\n";
  });
  std::string d = header, s = native ? "nodes,seeds,transfer_utility,transfer_growth,native_utility,native_growth\n"
                                     : "nodes,seeds,transfer_utility,transfer_growth\n";
  for (std::size_t p = 0; p < sizes.size(); ++p) {
    d += detail[p];
    s += summary[p];
  }
  ctx.write("transfer_detail.csv", with_columns(d, "train_nodes,train_flows",
                                                fmt::format("{},{}", cfg.sweep.train_nodes, flows)));
  ctx.write("transfer_summary.csv", with_columns(s, "train_nodes,train_flows",
                                                 fmt::format("{},{}", cfg.sweep.train_nodes, flows)));
  ctx.chart("transfer_summary.csv", "transfer_growth.svg",
            {.title = fmt::format("Queue growth of a policy trained at n={}", cfg.sweep.train_nodes),
             .x = "nodes",
             .y = native ? std::vector<std::string>{"transfer_growth", "native_growth"}
                         : std::vector<std::string>{"transfer_growth"},
             .y_label = "packets / step"});
  ctx.chart("transfer_summary.csv", "transfer_utility.svg",
            {.title = fmt::format("Utility of a policy trained at n={}", cfg.sweep.train_nodes),
             .x = "nodes",
             .y = native ? std::vector<std::string>{"transfer_utility", "native_utility"}
                         : std::vector<std::string>{"transfer_utility"},
             .y_label = "utility"});
}

void run_route_map(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  const GnnParams params = policy(ctx, cfg.topology.nodes, cfg.flows.count, "", cfg.threads);
  for (std::uint64_t seed : cfg.seeds) {
    const EvalNetwork net = eval_network(cfg, seed, cfg.topology.nodes, cfg.flows.count);
    const ExecResult res = run_sa(cfg, params, net, seed);
    const std::size_t n = net.topo.size();
    const std::size_t flows = net.spec.flows();
    Tensor handled({n, flows});
    for (const TrajectoryStep& s : res.traj.steps)
      for (std::size_t i = 0; i < handled.size(); ++i) handled[i] += s.packets[i] + s.received[i];
    std::string nodes = "seed,flow,node,x,y,destination,handled,normalized\n";
    for (std::size_t k = 0; k < flows; ++k) {
      double peak = 0.0;
      for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, handled(i, k));
      for (std::size_t i = 0; i < n; ++i) {
        nodes += fmt::format("{},{},{},{},{},{},{},{}\n", seed, k, i, net.topo.positions[i].x,
                             net.topo.positions[i].y, net.spec.destination[k] == i ? 1 : 0,
                             handled(i, k), peak > 0.0 ? handled(i, k) / peak : 0.0);
      }
    }
    std::string edges = "seed,from,to,prob\n";
    for (const auto& [i, j] : net.topo.edges) {
      if (i < j || !net.topo.has_edge(j, i))
        edges += fmt::format("{},{},{},{}\n", seed, i, j, net.channel.probs(j, i));
    }
    const std::string base = fmt::format("route_map/seed_{}", seed);
    ctx.write(base + "_nodes.csv", nodes);
    ctx.write(base + "_edges.csv", edges);
    for (std::size_t k = 0; k < flows; ++k) {
      ctx.route_map(base + "_nodes.csv", base + "_edges.csv", fmt::format("{}_flow_{}.svg", base, k),
                    {.title = fmt::format("Normalized packets handled, flow {} to node {}, seed {}",
                                          k, net.spec.destination[k], seed),
                     .where_column = "flow",
                     .where_value = std::to_string(k)});
    }
  }
}

void run_dual_trace(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  const GnnParams params = policy(ctx, cfg.topology.nodes, cfg.flows.count, "", cfg.threads);
  for (std::uint64_t seed : cfg.seeds) {
    const EvalNetwork net = eval_network(cfg, seed, cfg.topology.nodes, cfg.flows.count);
    const ExecResult res = run_sa(cfg, params, net, seed);
    const std::string rel = fmt::format("dual_trace/seed_{}.csv", seed);
    ctx.write(rel, with_columns(dual_trace_csv(res), "seed", std::to_string(seed)));
    for (std::size_t k = 0; k < net.spec.flows(); ++k) {
      ctx.chart(rel, fmt::format("dual_trace/seed_{}_flow_{}.svg", seed, k),
                {.title = fmt::format("Multipliers of flow {}, seed {}", k, seed),
                 .x = "t",
                 .y = {"mu"},
                 .group = "node",
                 .where_column = "flow",
                 .where_value = std::to_string(k),
                 .x_label = "time step",
                 .y_label = "mu"});
    }
  }
}

void run_topology_zoo(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  const GnnParams params = policy(ctx, cfg.topology.nodes, cfg.flows.count, "", cfg.threads);
  std::string summary = "name,seed,nodes,directed_edges,flows,sa_utility,sa_growth,exor_utility,exor_growth\n";
  for (const std::string& file : cfg.topology.graphml) {
    auto [topo, channel] = load_graphml(file, cfg.topology.cutoff, cfg.topology.capacity);
    const std::string name = topo.name;
    const std::size_t flows = std::min(cfg.flows.count, topo.size());
    std::string queues = "name,seed,t,sa_mean_queue,exor_mean_queue\n";
    for (std::uint64_t seed : cfg.seeds) {
      EvalNetwork net{topo, channel,
                      make_flows(topo.size(), flows, cfg.flows.arrival_mean,
                                 derive(seed, kTagZoo, fnv1a(name)),
                                 cfg.flows.law, cfg.flows.spread)};
      const ExecResult sa = run_sa(cfg, params, net, seed);
      const Trajectory exor = run_exor_baseline(cfg, net, seed);
      summary += fmt::format("{},{},{},{},{},{},{},{},{}\n", name, seed, topo.size(),
                             topo.edges.size(), flows, utility(sa.traj), growth(cfg, sa.traj),
                             utility(exor), growth(cfg, exor));
      const auto qs = sa.traj.mean_queue();
      const auto qe = exor.mean_queue();
      for (std::size_t t = 0; t < qs.size(); ++t)
        queues += fmt::format("{},{},{},{},{}\n", name, seed, t, qs[t], qe[t]);
    }
    const std::string rel = fmt::format("zoo/{}_queues.csv", name);
    ctx.write(rel, queues);
    const std::string first = std::to_string(cfg.seeds.front());
    ctx.chart(rel, fmt::format("zoo/{}_queues.svg", name),
              {.title = fmt::format("{}: mean queue, seed {}", name, first),
               .x = "t",
               .y = {"sa_mean_queue", "exor_mean_queue"},
               .where_column = "seed",
               .where_value = first,
               .x_label = "time step",
               .y_label = "mean queue"});
  }
  ctx.write("zoo_summary.csv", summary);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(t));
}

}  // namespace

// ---- public API -------------------------------------------------------------

std::string to_string(ExperimentKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

const std::vector<std::string>& experiment_kind_names() {
  static const std::vector<std::string> names(std::begin(kKindNames), std::end(kKindNames));
  return names;
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i)
    if (name == kKindNames[i]) return static_cast<ExperimentKind>(i);
  std::string all;
  for (const char* k : kKindNames) all += all.empty() ? k : std::string(", ") + k;
  throw SchemaError("kind", "unknown experiment kind '" + name + "' (" + all + ")");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), 0);
  }
  return from_json(doc);
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

void validate_config(const ExperimentConfig& c) {
  auto require = [](bool ok, const char* path, const std::string& what) {
    if (!ok) throw SchemaError(path, what);
  };
  require(!c.seeds.empty(), "seeds", "at least one seed is required");
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
  require(c.threads >= 1, "threads", "must be at least 1");
  require(c.topology.nodes >= 2, "topology.nodes", "must be at least 2");
  require(c.topology.knn >= 1, "topology.knn", "must be at least 1");
  require(c.topology.cutoff > 0.0, "topology.cutoff", "must be positive");
  require(c.topology.capacity > 0.0, "topology.capacity", "must be positive");
  require(c.flows.count >= 1, "flows.count", "must be at least 1");
  require(c.flows.count <= c.topology.nodes, "flows.count", "cannot exceed topology.nodes");
  require(c.flows.destinations.empty() || c.flows.destinations.size() == c.flows.count,
          "flows.destinations", "must be empty or list flows.count nodes");
  for (std::size_t d : c.flows.destinations)
    require(d < c.topology.nodes, "flows.destinations", fmt::format("node {} is out of range", d));
  require(c.flows.arrival_mean > 0.0, "flows.arrival_mean", "must be positive");
  require(c.flows.spread >= 0.0 && c.flows.spread <= 1.0, "flows.spread", "must lie in [0, 1]");
  require(c.dd.iters >= 1, "dd.iters", "must be at least 1");
  require(c.dd.primal_rate > 0.0, "dd.primal_rate", "must be positive");
  require(c.dd.dual_rate >= 0.0, "dd.dual_rate", "must be non-negative");
  require(c.mom.outer_iters >= 1, "mom.outer_iters", "must be at least 1");
  require(c.mom.inner_steps >= 1, "mom.inner_steps", "must be at least 1");
  require(c.mom.rho0 > 0.0, "mom.rho0", "must be positive");
  require(c.mom.decay > 0.0 && c.mom.decay <= 1.0, "mom.decay", "must lie in (0, 1]");
  require(c.mom.primal_rate > 0.0, "mom.primal_rate", "must be positive");
  const TrainParams& t = c.train;
  require(t.samples >= 1, "train.samples", "must be at least 1");
  require(t.batch >= 1, "train.batch", "must be at least 1");
  require(t.horizon >= 1, "train.horizon", "must be at least 1");
  require(t.period >= 1, "train.period", "must be at least 1");
  require(t.lr > 0.0, "train.lr", "must be positive");
  require(t.rho >= 0.0, "train.rho", "must be non-negative");
  require(t.rho_decay > 0.0 && t.rho_decay <= 1.0, "train.rho_decay", "must lie in (0, 1]");
  require(t.mu_low >= 0.0 && t.mu_low <= t.mu_high, "train.mu_low",
          "must satisfy 0 <= mu_low <= mu_high");
  try {
    t.arch.validate();
  } catch (const Error& e) {
    throw SchemaError("train.widths", e.what());
  }
  require(t.arch.widths.front() == 2, "train.widths", "the first width must be 2 (arrivals, multipliers)");
  require(c.exec.horizon >= 1, "exec.horizon", "must be at least 1");
  require(c.exec.period >= 1, "exec.period", "must be at least 1");
  require(c.exec.dual_rate >= 0.0, "exec.dual_rate", "must be non-negative");
  require(c.exec.jitter >= 0.0, "exec.jitter", "must be non-negative");
  require(c.sweep.growth_window >= 2, "sweep.growth_window", "must be at least 2");
  require(c.sweep.growth_window <= c.exec.horizon, "sweep.growth_window",
          "cannot exceed exec.horizon");
  require(c.sweep.perturb_fraction >= 0.0 && c.sweep.perturb_fraction <= 1.0,
          "sweep.perturb_fraction", "must lie in [0, 1]");
  require(c.sweep.perturb_magnitude >= 0.0, "sweep.perturb_magnitude", "must be non-negative");
  require(c.sweep.native_batch >= 1, "sweep.native_batch", "must be at least 1");
  require(c.sweep.train_nodes >= 2, "sweep.train_nodes", "must be at least 2");
  require(c.sweep.train_flows >= 1 && c.sweep.train_flows <= c.sweep.train_nodes,
          "sweep.train_flows", "must lie in [1, sweep.train_nodes]");

  const bool sweeps_nodes = c.kind == ExperimentKind::kScaleNodes || c.kind == ExperimentKind::kTransfer;
  if (sweeps_nodes) {
    require(!c.sweep.nodes.empty(), "sweep.nodes", "needs at least one size");
    for (std::size_t i = 0; i < c.sweep.nodes.size(); ++i) {
      const std::size_t f = c.kind == ExperimentKind::kTransfer ? c.sweep.train_flows : c.flows.count;
      if (c.sweep.nodes[i] < 2 || c.sweep.nodes[i] < f)
        throw SchemaError(indexed("sweep.nodes", i), "must be at least 2 and at least the flow count");
    }
  }
  if (c.kind == ExperimentKind::kScaleFlows) {
    require(!c.sweep.flows.empty(), "sweep.flows", "needs at least one flow count");
    for (std::size_t i = 0; i < c.sweep.flows.size(); ++i)
      if (c.sweep.flows[i] < 1 || c.sweep.flows[i] > c.topology.nodes)
        throw SchemaError(indexed("sweep.flows", i), "must lie in [1, topology.nodes]");
  }
  if (sweeps_nodes || c.kind == ExperimentKind::kScaleFlows || c.kind == ExperimentKind::kTopologyZoo)
    require(c.flows.destinations.empty(), "flows.destinations",
            "fixed destinations only apply to single-size kinds");
  if (c.kind == ExperimentKind::kTopologyZoo)
    require(!c.topology.graphml.empty(), "topology.graphml", "topology-zoo needs GraphML files");
  if (c.kind == ExperimentKind::kSaEval)
    require(!c.checkpoint.empty(), "checkpoint",
            "sa-eval needs a checkpoint; run an sa-train experiment first and point checkpoint at "
            "its checkpoint.json");
}

TrainConfig training_config(const ExperimentConfig& cfg, std::size_t nodes, std::size_t flows) {
  TrainConfig tc;
  tc.nodes = nodes;
  tc.flows = flows;
  tc.knn = cfg.topology.knn;
  tc.cutoff = cfg.topology.cutoff;
  tc.capacity = cfg.topology.capacity;
  tc.arrival_mean = cfg.flows.arrival_mean;
  tc.arrival_spread = cfg.flows.spread;
  tc.law = cfg.flows.law;
  const TrainParams& t = cfg.train;
  tc.samples = t.samples;
  tc.horizon = t.horizon;
  tc.period = t.period;
  tc.batch = t.batch;
  tc.epochs = t.epochs;
  tc.lr = t.lr;
  tc.rho = t.rho;
  tc.rho_decay = t.rho_decay;
  tc.mu_low = t.mu_low;
  tc.mu_high = t.mu_high;
  tc.seed = t.seed;
  tc.arch = t.arch;
  tc.threads = 1;
  return tc;
}

EvalNetwork eval_network(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t nodes,
                         std::size_t flows) {
  EvalNetwork net;
  net.topo = generate_knn(nodes, cfg.topology.knn, derive(seed, kTagNetwork, nodes, flows),
                          cfg.topology.capacity);
  net.channel = channel_from_distance(net.topo, cfg.topology.cutoff);
  if (!cfg.flows.destinations.empty() && flows == cfg.flows.count && nodes == cfg.topology.nodes) {
    net.spec = make_flows(nodes, cfg.flows.destinations, cfg.flows.arrival_mean, cfg.flows.law);
  } else {
    net.spec = make_flows(nodes, flows, cfg.flows.arrival_mean,
                          derive(seed, kTagNetwork + 1, nodes, flows), cfg.flows.law,
                          cfg.flows.spread);
  }
  return net;
}

Policy per_step_dd_policy(const Topology& topo, const ChannelMatrix& channel,
                          const FlowSpec& spec, const DdConfig& dd) {
  return [topo, channel, spec, dd](std::size_t, const Tensor& a0, const QueueState&) {
    const UnparamProblem problem{topo, channel, spec, a0};
    return dd_solve(problem, dd).primal.decision(problem);
  };
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text_file(path)); }

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["format"] = "oproute-manifest";
  j["format_version"] = 1;
  j["version"] = m.version;
  j["started_utc"] = m.started_utc;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  j["config"] = to_json(m.config);
  json outputs = json::array();
  for (const auto& e : m.outputs)
    outputs.push_back({{"path", e.path}, {"bytes", e.bytes}, {"sha256", e.sha256}});
  j["outputs"] = std::move(outputs);
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what(), 0);
  }
  if (!j.is_object() || j.value("format", "") != "oproute-manifest")
    throw SchemaError("format", "expected oproute-manifest");
  RunManifest m;
  try {
    m.version = j.at("version").get<std::string>();
    m.started_utc = j.at("started_utc").get<std::string>();
    m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    m.config = from_json(j.at("config"));
    for (const auto& e : j.at("outputs"))
      m.outputs.push_back({e.at("path").get<std::string>(), e.at("bytes").get<std::uintmax_t>(),
                           e.at("sha256").get<std::string>()});
  } catch (const json::exception& e) {
    throw SchemaError("outputs", e.what());
  }
  return m;
}

std::string version_tag() { return OPROUTE_VERSION_TAG; }

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (!cfg.checkpoint.empty() && !fs::is_regular_file(cfg.checkpoint)) {
    throw SchemaError("checkpoint", "file '" + cfg.checkpoint +
                                        "' does not exist; run an sa-train experiment first or "
                                        "point checkpoint at an existing checkpoint.json");
  }
  for (std::size_t i = 0; i < cfg.topology.graphml.size(); ++i) {
    if (!fs::is_regular_file(cfg.topology.graphml[i]))
      throw SchemaError(indexed("topology.graphml", i),
                        "file '" + cfg.topology.graphml[i] + "' does not exist");
  }
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.output_dir = cfg.output_dir;
  result.manifest.config = cfg;
  result.manifest.version = version_tag();
  result.manifest.started_utc = utc_now();
  fs::create_directories(result.output_dir);

  RunContext ctx(cfg, result.output_dir);
  switch (cfg.kind) {
    case ExperimentKind::kUnparamCompare: run_unparam_compare(ctx); break;
    case ExperimentKind::kSaTrain: run_sa_train(ctx); break;
    case ExperimentKind::kSaEval: run_sa_eval(ctx); break;
    case ExperimentKind::kScaleNodes: run_scale(ctx, true); break;
    case ExperimentKind::kScaleFlows: run_scale(ctx, false); break;
    case ExperimentKind::kPerturb: run_perturb(ctx); break;
    case ExperimentKind::kTransfer: run_transfer(ctx); break;
    case ExperimentKind::kRouteMap: run_route_map(ctx); break;
    case ExperimentKind::kDualTrace: run_dual_trace(ctx); break;
    case ExperimentKind::kTopologyZoo: run_topology_zoo(ctx); break;
  }
  ctx.render_charts();

  for (const std::string& rel : ctx.files()) {
    const fs::path p = result.output_dir / rel;
    result.manifest.outputs.push_back({rel, fs::file_size(p), sha256_file(p)});
  }
  result.manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text_file(result.output_dir / "manifest.json", manifest_to_json(result.manifest));
  return result;
}

}  // namespace oproute

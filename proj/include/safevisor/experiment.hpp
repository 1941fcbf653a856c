// Copyright 2026 The safevisor Authors
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


#ifndef SAFEVISOR_EXPERIMENT_HPP_
#define SAFEVISOR_EXPERIMENT_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "safevisor/abstraction.hpp"
#include "safevisor/advisor.hpp"
#include "safevisor/config.hpp"
#include "safevisor/runtime.hpp"

namespace safevisor {

// Everything an experiment needs, built once and shared read-only by all
// episodes.
struct Pipeline {
  ExperimentConfig config;
  Grid grid;
  DfaFile spec;
  AbstractModel model;
  ValueTables tables;
  CellIndex x0_hat = 0;
  int q0_bar = 0;
  double guarantee = 1.0;  // v = V̄_H(x̂0, q̄0)

  // Copies of the setup point into this object: keep it at a stable
  // address (the factory returns a unique_ptr).
  Runtime runtime(RunMode mode) const;
};

struct PipelineOptions {
  // Read instead of recomputing when set.
  std::optional<std::filesystem::path> kernel_file;
  std::optional<std::filesystem::path> tables_file;
  int workers = 0;
};

// Grid and relation validation, kernel, value iteration and the related
// initial product state.
std::unique_ptr<Pipeline> build_pipeline(const ExperimentConfig& config,
                                         const PipelineOptions& options = {});

// Grid, relation and kernel only (no value iteration).
AbstractModel build_model(const ExperimentConfig& config, const Grid& grid,
                          const DfaFile& spec);
Grid build_experiment_grid(const ExperimentConfig& config);

struct EpisodeSummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  int length = 0;
  bool violated = false;
  int violation_step = -1;
  int accepted = 0;
  int rejected_risk = 0;
  int rejected_relation = 0;
  int malformed_inputs = 0;
  int relation_violations = 0;
  bool entered_sink = false;
  double latency_sum_us = 0.0;
  double latency_sq_sum_us = 0.0;
};

struct MetricsSummary {
  std::size_t episodes = 0;
  std::size_t violations = 0;
  double satisfaction_rate = 0.0;
  // Mean over episodes of accepted / decisions.
  double acceptance_rate = 0.0;
  std::size_t decisions = 0;
  std::size_t accepted = 0;
  std::size_t rejected_risk = 0;
  std::size_t rejected_relation = 0;
  std::size_t malformed_inputs = 0;
  std::size_t relation_violations = 0;
  std::size_t sink_entries = 0;
  double latency_mean_us = 0.0;
  double latency_std_us = 0.0;
  std::string config_digest;
  bool interrupted = false;
};

struct MonteCarloOptions {
  RunMode mode = RunMode::kSupervised;
  std::size_t episodes = 0;   // 0: config value
  int workers = 0;            // 0: default_worker_count()
  int horizon = -1;           // -1: synthesized horizon
  // Set from a signal handler to stop launching episodes; finished episodes
  // are still aggregated.
  const std::atomic<bool>* stop = nullptr;
};

struct MonteCarloResult {
  MetricsSummary summary;
  std::vector<EpisodeSummary> episodes;
};

// Episode i uses seed derive_seed(config.seed, i) and independent controller,
// adversary and noise streams derived from it.
MonteCarloResult monte_carlo(const Pipeline& pipeline,
                             const MonteCarloOptions& options = {});

// Deterministic per-episode CSV (no timing columns).
void write_metrics_csv(const MonteCarloResult& result, std::ostream& os);
// Latency statistics, kept apart because wall-clock time is not reproducible.
void write_timing_csv(const MonteCarloResult& result, std::ostream& os);
std::string format_summary(const MetricsSummary& summary);

// Single episode with full step records, same seeding as monte_carlo.
EpisodeTrace simulate_episode(const Pipeline& pipeline, RunMode mode,
                              std::size_t index, int horizon = -1);

}  // namespace safevisor

#endif  // SAFEVISOR_EXPERIMENT_HPP_

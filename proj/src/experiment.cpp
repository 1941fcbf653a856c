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


#include "safevisor/experiment.hpp"

#include <cmath>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "safevisor/controllers.hpp"
#include "safevisor/error.hpp"
#include "safevisor/kernel_io.hpp"
#include "safevisor/parallel.hpp"
#include "safevisor/relation.hpp"

namespace safevisor {

Runtime Pipeline::runtime(RunMode mode) const {
  Runtime rt;
  rt.supervisor.game = &config.game;
  rt.supervisor.grid = &grid;
  rt.supervisor.relation = &config.relation;
  rt.supervisor.model = &model;
  rt.supervisor.tables = &tables;
  rt.supervisor.eta = config.eta;
  rt.supervisor.mode = config.companion_mode;
  rt.labelling = &spec.labelling;
  rt.mode = mode;
  return rt;
}

Grid build_experiment_grid(const ExperimentConfig& config) {
  const Diagnostic diag = validate_game(config.game);
  if (!diag.ok) {
    std::ostringstream os;
    os << "invalid game:";
    for (const auto& m : diag.messages) os << ' ' << m << ';';
    throw ConfigError(os.str());
  }
  return build_grid(config.game.x_bounds, config.game.u_bounds,
                    config.game.w_bounds, config.grid);
}

AbstractModel build_model(const ExperimentConfig& config, const Grid& grid,
                          const DfaFile& spec) {
  validate_relation(config.game, grid, config.relation);
  AbstractModel m;
  KernelOptions ko;
  ko.memory_cap_bytes = config.memory_cap_bytes;
  m.kernel = build_kernel(config.game, grid, ko);
  m.dfa = spec.dfa;
  m.lift = EpsilonLift(spec.dfa, spec.labelling, cell_outputs(grid, config.game),
                       config.relation.eps);
  m.delta = config.relation.delta;
  return m;
}

std::unique_ptr<Pipeline> build_pipeline(const ExperimentConfig& config,
                                         const PipelineOptions& options) {
  auto p = std::make_unique<Pipeline>();
  p->config = config;
  p->grid = build_experiment_grid(p->config);
  p->spec = load_dfa(p->config.dfa_path);
  check_compatible(p->spec.dfa, p->spec.labelling);
  if (p->config.horizon < 1) throw ConfigError("spec.horizon must be at least 1");

  if (options.kernel_file) {
    validate_relation(p->config.game, p->grid, p->config.relation);
    p->model.kernel = load_kernel(*options.kernel_file);
    if (p->model.kernel.num_states() != p->grid.num_cells() ||
        p->model.kernel.num_u() != p->grid.u_hat.size() ||
        p->model.kernel.num_w() != p->grid.w_hat.size()) {
      throw ConfigError("kernel file does not match the configured grid");
    }
    p->model.dfa = p->spec.dfa;
    p->model.lift = EpsilonLift(p->spec.dfa, p->spec.labelling,
                                cell_outputs(p->grid, p->config.game),
                                p->config.relation.eps);
    p->model.delta = p->config.relation.delta;
  } else {
    p->model = build_model(p->config, p->grid, p->spec);
  }

  if (options.tables_file) {
    p->tables = load_tables(*options.tables_file);
    if (p->tables.num_cells() != p->grid.num_cells() ||
        p->tables.num_q() != p->spec.dfa.num_states() ||
        p->tables.num_u() != p->grid.u_hat.size() ||
        p->tables.horizon() != p->config.horizon) {
      throw ConfigError("value table file does not match the configuration");
    }
  } else {
    ValueIterationOptions vo;
    vo.memory_cap_bytes = p->config.memory_cap_bytes;
    vo.workers = options.workers;
    p->tables = value_iteration(p->model, p->config.horizon, vo);
  }

  const auto cell = find_related_cell(p->grid, p->config.relation, p->config.x0);
  if (!cell) throw RelationInfeasible("no abstract state is related to x0");
  p->x0_hat = *cell;
  const double y0 = output(p->config.game, p->config.x0)(0);
  p->q0_bar = p->spec.dfa.step(p->spec.dfa.initial(), p->spec.labelling.label(y0));
  p->guarantee = advisor_guarantee(p->tables, p->x0_hat, p->q0_bar);
  return p;
}

namespace {

struct EpisodeStreams {
  ControllerFn controller;
  AdversaryFn adversary;
  NoiseFn noise;
};

EpisodeStreams make_streams(const Pipeline& p, const Runtime& rt,
                            std::uint64_t seed,
                            const std::shared_ptr<const std::vector<Vector>>& script) {
  const ExperimentConfig& c = p.config;
  EpisodeStreams s;
  switch (c.controller) {
    case ControllerKind::kUniform:
      s.controller = uniform_random_controller(c.game.u_bounds, derive_seed(seed, 1));
      break;
    case ControllerKind::kScripted:
      s.controller = scripted_controller(*script);
      break;
    case ControllerKind::kAdvisor:
      s.controller = advisor_controller(rt);
      break;
  }
  switch (c.adversary) {
    case AdversaryKind::kUniform:
      s.adversary = uniform_random_adversary(c.game.w_bounds, derive_seed(seed, 2));
      break;
    case AdversaryKind::kZero:
      s.adversary = zero_adversary(c.game.adversary_dim());
      break;
  }
  s.noise = gaussian_noise(derive_seed(seed, 3), c.game.R_noise.cols());
  return s;
}

std::shared_ptr<const std::vector<Vector>> load_script(const Pipeline& p) {
  if (p.config.controller != ControllerKind::kScripted) return nullptr;
  return std::make_shared<const std::vector<Vector>>(load_input_script(
      p.config.controller_file, p.config.game.input_dim(), p.config.horizon));
}

EpisodeSummary summarize(std::size_t index, const EpisodeTrace& t) {
  EpisodeSummary e;
  e.index = index;
  e.seed = t.seed;
  e.length = t.length;
  e.violated = t.violated;
  e.violation_step = t.violation_step;
  e.accepted = t.accepted;
  e.rejected_risk = t.rejected_risk;
  e.rejected_relation = t.rejected_relation;
  e.malformed_inputs = t.malformed_inputs;
  e.relation_violations = t.relation_violations;
  e.entered_sink = t.entered_sink;
  e.latency_sum_us = t.latency_sum_us;
  e.latency_sq_sum_us = t.latency_sq_sum_us;
  return e;
}

}  // namespace

EpisodeTrace simulate_episode(const Pipeline& pipeline, RunMode mode,
                              std::size_t index, int horizon) {
  const Runtime rt = pipeline.runtime(mode);
  const std::uint64_t seed = derive_seed(pipeline.config.seed, index);
  const auto script = load_script(pipeline);
  EpisodeStreams s = make_streams(pipeline, rt, seed, script);
  EpisodeOptions eo;
  eo.horizon = horizon;
  eo.record_steps = true;
  return run_episode(rt, pipeline.config.x0, s.controller, s.adversary, s.noise,
                     seed, eo);
}

MonteCarloResult monte_carlo(const Pipeline& pipeline,
                             const MonteCarloOptions& options) {
  if (options.mode == RunMode::kSupervised) {
    require_budget(pipeline.guarantee, pipeline.config.eta);
  }
  const std::size_t n = options.episodes ? options.episodes : pipeline.config.episodes;
  const Runtime rt = pipeline.runtime(options.mode);
  const auto script = load_script(pipeline);

  std::vector<EpisodeSummary> done(n);
  std::vector<char> finished(n, 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    while (true) {
      if (options.stop && options.stop->load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        const std::uint64_t seed = derive_seed(pipeline.config.seed, i);
        EpisodeStreams s = make_streams(pipeline, rt, seed, script);
        EpisodeOptions eo;
        eo.horizon = options.horizon;
        const EpisodeTrace t = run_episode(rt, pipeline.config.x0, s.controller,
                                           s.adversary, s.noise, seed, eo);
        done[i] = summarize(i, t);
        finished[i] = 1;
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const int workers = std::max<int>(
      1, std::min<std::size_t>(n, options.workers > 0 ? options.workers
                                                      : default_worker_count()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  MonteCarloResult r;
  MetricsSummary& m = r.summary;
  m.config_digest = pipeline.config.digest;
  double acceptance_sum = 0.0;
  double lat_sum = 0.0;
  double lat_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!finished[i]) {
      m.interrupted = true;
      continue;
    }
    const EpisodeSummary& e = done[i];
    r.episodes.push_back(e);
    ++m.episodes;
    if (e.violated) ++m.violations;
    const std::size_t decisions =
        static_cast<std::size_t>(e.accepted + e.rejected_risk + e.rejected_relation);
    m.decisions += decisions;
    m.accepted += e.accepted;
    m.rejected_risk += e.rejected_risk;
    m.rejected_relation += e.rejected_relation;
    m.malformed_inputs += e.malformed_inputs;
    m.relation_violations += e.relation_violations;
    if (e.entered_sink) ++m.sink_entries;
    if (decisions > 0) acceptance_sum += static_cast<double>(e.accepted) / decisions;
    lat_sum += e.latency_sum_us;
    lat_sq += e.latency_sq_sum_us;
  }
  if (m.episodes > 0) {
    m.satisfaction_rate = 1.0 - static_cast<double>(m.violations) / m.episodes;
    m.acceptance_rate = acceptance_sum / m.episodes;
  }
  if (m.decisions > 0) {
    m.latency_mean_us = lat_sum / m.decisions;
    m.latency_std_us = std::sqrt(
        std::max(0.0, lat_sq / m.decisions - m.latency_mean_us * m.latency_mean_us));
  }
  return r;
}

void write_metrics_csv(const MonteCarloResult& result, std::ostream& os) {
  os << "episode,seed,length,violated,violation_step,accepted,rejected_risk,"
        "rejected_relation,malformed_inputs,relation_violations,entered_sink,"
        "acceptance_rate\n";
  os << std::setprecision(17);
  for (const EpisodeSummary& e : result.episodes) {
    const int decisions = e.accepted + e.rejected_risk + e.rejected_relation;
    os << e.index << ',' << e.seed << ',' << e.length << ',' << (e.violated ? 1 : 0)
       << ',' << e.violation_step << ',' << e.accepted << ',' << e.rejected_risk << ','
       << e.rejected_relation << ',' << e.malformed_inputs << ','
       << e.relation_violations << ',' << (e.entered_sink ? 1 : 0) << ','
       << (decisions > 0 ? static_cast<double>(e.accepted) / decisions : 0.0) << '\n';
  }
}

void write_timing_csv(const MonteCarloResult& result, std::ostream& os) {
  os << "episode,decisions,latency_mean_us\n";
  for (const EpisodeSummary& e : result.episodes) {
    const int decisions = e.accepted + e.rejected_risk + e.rejected_relation;
    os << e.index << ',' << decisions << ','
       << (decisions > 0 ? e.latency_sum_us / decisions : 0.0) << '\n';
  }
  os << "all," << result.summary.decisions << ',' << result.summary.latency_mean_us
     << '\n';
}

std::string format_summary(const MetricsSummary& m) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "episodes            " << m.episodes << (m.interrupted ? " (interrupted)" : "")
     << "\n"
     << "violations          " << m.violations << "\n"
     << "satisfaction rate   " << m.satisfaction_rate << "\n"
     << "acceptance rate     " << m.acceptance_rate << "\n"
     << "decisions           " << m.decisions << " (accepted " << m.accepted
     << ", risk rejects " << m.rejected_risk << ", relation rejects "
     << m.rejected_relation << ", malformed " << m.malformed_inputs << ")\n"
     << "relation violations " << m.relation_violations << "\n"
     << "sink entries        " << m.sink_entries << "\n"
     << "latency             " << m.latency_mean_us << " us mean, " << m.latency_std_us
     << " us std\n"
     << "config digest       " << m.config_digest << "\n";
  return os.str();
}

}  // namespace safevisor

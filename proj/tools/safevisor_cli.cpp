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


// Command-line front end: abstraction, synthesis, simulation and checks.

#include <atomic>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "safevisor/advisor.hpp"
#include "safevisor/config.hpp"
#include "safevisor/error.hpp"
#include "safevisor/experiment.hpp"
#include "safevisor/kernel_io.hpp"
#include "safevisor/oracle.hpp"
#include "safevisor/relation.hpp"

namespace {

namespace fs = std::filesystem;
using namespace safevisor;

std::atomic<bool> g_stop{false};

void on_interrupt(int) { g_stop.store(true); }

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> episodes;
  std::string out;
  bool baseline = false;
  std::string companion_mode;
  std::string kernel_file;
  std::string tables_file;
};

ExperimentConfig load_with_overrides(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.episodes) cfg.episodes = *c.episodes;
  if (c.baseline) cfg.baseline = true;
  if (!c.companion_mode.empty()) cfg.companion_mode = parse_companion_mode(c.companion_mode);
  return cfg;
}

PipelineOptions pipeline_options(const Common& c) {
  PipelineOptions o;
  if (!c.kernel_file.empty()) o.kernel_file = c.kernel_file;
  if (!c.tables_file.empty()) o.tables_file = c.tables_file;
  return o;
}

int cmd_build_abstraction(const Common& c, const std::string& format) {
  const ExperimentConfig cfg = load_with_overrides(c);
  const Grid grid = build_experiment_grid(cfg);
  const DfaFile spec = load_dfa(cfg.dfa_path);
  const AbstractModel model = build_model(cfg, grid, spec);
  const fs::path out = c.out.empty() ? fs::path("kernel.svkn") : fs::path(c.out);
  KernelFileFormat f = KernelFileFormat::kAuto;
  if (format == "dense") f = KernelFileFormat::kDense;
  if (format == "sparse") f = KernelFileFormat::kSparse;
  save_kernel(model.kernel, out, f);
  std::cout << "cells " << grid.num_cells() << ", abstract inputs " << grid.u_hat.size()
            << ", abstract adversary inputs " << grid.w_hat.size() << ", rows "
            << model.kernel.num_rows() << "\n"
            << "gamma (recomputed) " << compute_gamma(cfg.game, grid, cfg.relation)
            << ", configured " << cfg.relation.gamma << "\n"
            << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_synthesize(const Common& c) {
  const ExperimentConfig cfg = load_with_overrides(c);
  Common no_tables = c;
  no_tables.tables_file.clear();
  const auto p = build_pipeline(cfg, pipeline_options(no_tables));
  const fs::path out = c.out.empty() ? fs::path("tables.svvt") : fs::path(c.out);
  save_tables(p->tables, out);
  std::cout << std::setprecision(10) << "advisor guarantee v = " << p->guarantee
            << " at cell " << p->x0_hat << ", automaton state "
            << p->spec.dfa.state_name(p->q0_bar) << "\n";
  if (p->guarantee > cfg.eta) {
    std::cout << "warning: eta = " << cfg.eta << " < v; simulation will refuse this budget\n";
  }
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_simulate(const Common& c, int trace_episodes) {
  const ExperimentConfig cfg = load_with_overrides(c);
  const auto p = build_pipeline(cfg, pipeline_options(c));
  const RunMode mode = cfg.baseline ? RunMode::kBaseline : RunMode::kSupervised;
  if (mode == RunMode::kSupervised) require_budget(p->guarantee, cfg.eta);

  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);
  MonteCarloOptions mo;
  mo.mode = mode;
  mo.stop = &g_stop;
  const MonteCarloResult r = monte_carlo(*p, mo);

  const fs::path dir = c.out.empty() ? cfg.output_dir : fs::path(c.out);
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "metrics.csv");
    write_metrics_csv(r, os);
  }
  {
    std::ofstream os(dir / "timing.csv");
    write_timing_csv(r, os);
  }
  {
    std::ofstream os(dir / "summary.txt");
    os << format_summary(r.summary);
  }
  for (int i = 0; i < trace_episodes && static_cast<std::size_t>(i) < cfg.episodes; ++i) {
    const EpisodeTrace t = simulate_episode(*p, mode, static_cast<std::size_t>(i));
    std::ofstream os(dir / ("trace_" + std::to_string(i) + ".csv"));
    write_trace_csv(t, p->spec.dfa, os);
  }
  std::cout << std::setprecision(10) << "advisor guarantee v = " << p->guarantee << "\n"
            << format_summary(r.summary) << "wrote " << (dir / "metrics.csv").string()
            << "\n";
  return r.summary.interrupted ? 130 : 0;
}

int cmd_verify_relation(const Common& c, std::size_t samples) {
  const ExperimentConfig cfg = load_with_overrides(c);
  const Grid grid = build_experiment_grid(cfg);
  validate_relation(cfg.game, grid, cfg.relation);
  const RelationReport r =
      verify_relation_empirically(cfg.game, grid, cfg.relation, samples, cfg.seed);
  std::cout << std::setprecision(10) << "samples " << r.samples << "\n"
            << "violations " << r.violations << "\n"
            << "interface infeasible " << r.interface_infeasible << "\n"
            << "abstract successor outside X " << r.left_domain << "\n"
            << "max successor distance " << r.max_distance << " (eps "
            << cfg.relation.eps << ")\n"
            << "frequency " << r.frequency << " (required " << r.required << ")\n"
            << (r.passed() ? "PASS" : "FAIL") << "\n";
  return r.passed() ? 0 : 1;
}

int cmd_oracle_check(const std::string& instance) {
  const FiniteInstance inst = load_finite_instance(instance);
  const OracleReport r = exhaustive_violation_bound_check(inst);
  std::cout << format_report(r);
  return r.passed() ? 0 : 1;
}

int cmd_inspect(const std::string& file, int slice, int max_rows) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error("cannot open " + file);
  char magic[5] = {};
  is.read(magic, 4);
  is.close();
  if (std::string(magic) == "SVVT") {
    const ValueTables t = load_tables(file);
    std::cout << "SVVT rows " << t.rows() << " (cells " << t.num_cells() << " + SINK), "
              << "automaton states " << t.num_q() << ", abstract inputs " << t.num_u()
              << ", horizon " << t.horizon() << "\n";
    const int n = slice < 0 ? t.horizon() : std::min(slice, t.horizon());
    std::cout << "slice n = " << n << " (first " << max_rows << " rows)\n";
    std::cout << std::setprecision(10);
    for (std::size_t x = 0; x < std::min<std::size_t>(t.rows(), max_rows); ++x) {
      std::cout << "  " << x;
      for (int q = 0; q < t.num_q(); ++q) {
        std::cout << ' ' << t.value(n, static_cast<CellIndex>(x), q);
        if (n > 0) std::cout << '/' << t.policy(n, static_cast<CellIndex>(x), q);
      }
      std::cout << "\n";
    }
    return 0;
  }
  if (std::string(magic) == "SVKN") {
    const AbstractKernel k = load_kernel(file);
    std::cout << "SVKN cells " << k.num_states() << ", abstract inputs " << k.num_u()
              << ", abstract adversary inputs " << k.num_w() << ", rows " << k.num_rows()
              << "\n";
    double worst = 0.0;
    for (std::size_t r = 0; r < k.num_rows(); ++r) {
      double s = k.sink_mass(r);
      k.for_each(r, [&](CellIndex, double p) { s += p; });
      worst = std::max(worst, std::abs(s - 1.0));
    }
    std::cout << "max |row sum - 1| " << worst << "\n";
    return 0;
  }
  throw FormatError("unknown file type (expected SVVT or SVKN)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supervised execution of unverified controllers with a verified advisor"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* sub, bool config_required = true) {
    auto* opt = sub->add_option("--config", c.config, "experiment configuration (JSON)");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "master seed override");
    sub->add_option("--episodes", c.episodes, "episode count override")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", c.out, "output file or directory");
    sub->add_flag("--baseline", c.baseline, "apply unverified inputs without supervision");
    sub->add_option("--companion-mode", c.companion_mode, "max-safety or max-risk")
        ->check(CLI::IsMember({"max-safety", "max-risk"}));
  };

  std::string format = "auto";
  auto* build = app.add_subcommand("build-abstraction", "grid and kernel to an SVKN file");
  add_common(build);
  build->add_option("--format", format, "auto, dense or sparse")
      ->check(CLI::IsMember({"auto", "dense", "sparse"}));

  auto* synth = app.add_subcommand("synthesize", "value iteration to an SVVT file");
  add_common(synth);
  synth->add_option("--kernel", c.kernel_file, "precomputed SVKN kernel")
      ->check(CLI::ExistingFile);

  int traces = 0;
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo episodes and metrics");
  add_common(sim);
  sim->add_option("--kernel", c.kernel_file, "precomputed SVKN kernel")
      ->check(CLI::ExistingFile);
  sim->add_option("--tables", c.tables_file, "precomputed SVVT tables")
      ->check(CLI::ExistingFile);
  sim->add_option("--traces", traces, "write step traces for the first N episodes")
      ->check(CLI::NonNegativeNumber);

  std::size_t samples = 100000;
  auto* verify = app.add_subcommand("verify-relation", "empirical one-step relation test");
  add_common(verify);
  verify->add_option("--samples", samples, "number of sampled state pairs");

  std::string instance;
  auto* oracle = app.add_subcommand("oracle-check", "exhaustive check on a finite instance");
  oracle->add_option("--config,instance", instance, "finite instance file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  std::string file;
  int slice = -1;
  int rows = 10;
  auto* inspect = app.add_subcommand("inspect", "print SVVT/SVKN metadata");
  inspect->add_option("file", file, "SVVT or SVKN file")->required()->check(CLI::ExistingFile);
  inspect->add_option("--slice", slice, "value slice to print (default H)");
  inspect->add_option("--rows", rows, "rows to print")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*build) return cmd_build_abstraction(c, format);
    if (*synth) return cmd_synthesize(c);
    if (*sim) return cmd_simulate(c, traces);
    if (*verify) return cmd_verify_relation(c, samples);
    if (*oracle) return cmd_oracle_check(instance);
    if (*inspect) return cmd_inspect(file, slice, rows);
  } catch (const InfeasibleBudget& e) {
    std::cerr << "refusing to run: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

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

// Acceptance run over the quadrotor E-axis configuration and the bundled toy
// instances. Prints one PASS/FAIL line per criterion.
//
// Usage: acceptance_test [--known-failure N]... [--report FILE]
//
// A criterion listed with --known-failure is still evaluated and printed. The
// exit status is 0 when every other criterion passes and every listed one
// still fails, so an unexpected pass is reported as well.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "safevisor/advisor.hpp"
#include "safevisor/error.hpp"
#include "safevisor/experiment.hpp"
#include "safevisor/oracle.hpp"
#include "support/fixtures.hpp"

namespace {

using namespace safevisor;
using safevisor::testing::source_path;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::map<int, Outcome> g_results;

// Copies everything written to one stream buffer into a second one.
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int c) override {
    if (c == traits_type::eof()) return traits_type::not_eof(c);
    const auto ch = traits_type::to_char_type(c);
    if (a_->sputc(ch) == traits_type::eof() || b_->sputc(ch) == traits_type::eof()) {
      return traits_type::eof();
    }
    return c;
  }
  int sync() override { return (a_->pubsync() == 0 && b_->pubsync() == 0) ? 0 : -1; }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void record(int id, bool pass, const std::string& detail) {
  g_results[id] = {pass, detail};
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << detail
            << std::endl;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

std::vector<FiniteInstance> toys() {
  std::vector<FiniteInstance> out;
  for (const char* name : {"escape", "corridor", "harbor", "delayed_risk"}) {
    out.push_back(testing::toy(name));
  }
  return out;
}

using Policy = std::vector<std::vector<std::size_t>>;

// Minimum over all Markov Player-I policies (enumerated on non-accepting
// states) of the worst-case value; nullopt when the enumeration is too big.
std::optional<std::vector<double>> enumerated_minimax(const FiniteInstance& inst) {
  const auto& m = inst.model;
  const int nq = m.num_q();
  const std::size_t states = m.num_cells() * nq;
  std::vector<std::size_t> free;
  for (std::size_t s = 0; s < states; ++s) {
    if (!m.dfa.is_accepting(static_cast<int>(s % nq))) free.push_back(s);
  }
  const std::size_t nu = m.kernel.num_u();
  double total = 1.0;
  for (std::size_t i = 0; i < free.size() * inst.horizon; ++i) total *= nu;
  if (total > 1e6) return std::nullopt;
  std::vector<double> best(states, std::numeric_limits<double>::infinity());
  for (std::size_t code = 0; code < static_cast<std::size_t>(total); ++code) {
    Policy rho(inst.horizon, std::vector<std::size_t>(states, 0));
    std::size_t c = code;
    for (int k = 0; k < inst.horizon; ++k) {
      for (std::size_t s : free) {
        rho[k][s] = c % nu;
        c /= nu;
      }
    }
    const auto adv = worst_case_adversary(m, rho, inst.horizon);
    for (std::size_t s = 0; s < states; ++s) {
      best[s] = std::min(best[s], adv.values[inst.horizon][s]);
    }
  }
  return best;
}

void advisor_correctness(const ValueTables& quad, const AbstractModel& quad_model) {
  double gap = 0.0;
  std::size_t enumerated = 0;
  for (const auto& inst : toys()) {
    const auto& m = inst.model;
    const int nq = m.num_q();
    const ValueTables t = value_iteration(m, inst.horizon);
    const auto adv = worst_case_adversary(m, advisor_policy(m, t), inst.horizon);
    const auto dp = testing::direct_dp(inst, inst.horizon);
    const auto brute = enumerated_minimax(inst);
    if (brute) ++enumerated;
    for (int n = 0; n <= inst.horizon; ++n) {
      for (std::size_t s = 0; s < m.num_cells() * nq; ++s) {
        const auto x = static_cast<CellIndex>(s / nq);
        const int q = static_cast<int>(s % nq);
        const double v = t.value(n, x, q);
        gap = std::max(gap, std::abs(v - adv.values[n][s]));
        gap = std::max(gap, std::abs(v - dp.v[n][s]));
        if (brute && n == inst.horizon) gap = std::max(gap, std::abs(v - (*brute)[s]));
      }
    }
  }

  // Structural properties on the quadrotor tables.
  bool monotone = true, bounded = true, one_on_f = true;
  for (int q = 0; q < quad.num_q(); ++q) {
    const bool accepting = quad_model.dfa.is_accepting(q);
    for (int n = 0; n <= quad.horizon(); ++n) {
      const auto slice = quad.slice(n, q);
      const auto prev = n > 0 ? quad.slice(n - 1, q) : slice;
      for (std::size_t x = 0; x < slice.size(); ++x) {
        const double v = slice[x];
        if (!(v >= 0.0 && v <= 1.0)) bounded = false;
        if (v < prev[x]) monotone = false;
        if ((accepting || x + 1 == slice.size()) && v != 1.0) one_on_f = false;
      }
    }
  }
  const bool pass = gap <= 1e-12 && monotone && bounded && one_on_f;
  record(6, pass,
         "toy tables vs policy_value/worst_case_adversary replay, direct DP and " +
             std::to_string(enumerated) + " exhaustive policy enumerations: max gap " +
             fmt(gap, 3) + "; quadrotor tables monotone " + (monotone ? "yes" : "no") +
             ", in [0,1] " + (bounded ? "yes" : "no") + ", 1 on F and SINK " +
             (one_on_f ? "yes" : "no"));
}

void kernel_numerics(const Pipeline& p) {
  const AbstractKernel& k = p.model.kernel;
  double worst_sum = 0.0;
  for (std::size_t r = 0; r < k.num_rows(); ++r) {
    double s = k.sink_mass(r);
    k.for_each(r, [&](CellIndex, double v) { s += v; });
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
  }
  std::mt19937_64 rng(20260101);
  std::uniform_int_distribution<CellIndex> cell(0, static_cast<CellIndex>(k.num_states() - 1));
  std::uniform_int_distribution<std::size_t> u(0, k.num_u() - 1), w(0, k.num_w() - 1);
  double worst_entry = 0.0;
  for (int i = 0; i < 10; ++i) {
    const CellIndex x = cell(rng);
    const std::size_t ui = u(rng), wi = w(rng);
    const auto oracle = testing::integrate_row(p.config.game, p.grid, x, ui, wi);
    const auto row = k.dense_row(k.row_index(x, ui, wi));
    for (std::size_t c = 0; c < row.size(); ++c) {
      worst_entry = std::max(worst_entry, std::abs(row[c] - oracle[c]));
    }
  }
  record(7, worst_sum <= 1e-9 && worst_entry <= 1e-6,
         std::to_string(k.num_rows()) + " rows, max |row sum - 1| " + fmt(worst_sum, 3) +
             "; 10 random rows vs 2-D Simpson integration, max |diff| " +
             fmt(worst_entry, 3));
}

void oracle_soundness() {
  std::size_t instances = 0, passed = 0;
  std::ostringstream reports;
  for (const auto& inst : toys()) {
    const OracleReport r = exhaustive_violation_bound_check(inst);
    ++instances;
    if (r.passed()) ++passed;
    reports << format_report(r);
  }
  record(5, instances >= 3 && passed == instances,
         std::to_string(passed) + " of " + std::to_string(instances) +
             " toy instances pass the exhaustive check");
  std::cout << reports.str();
  if (passed != instances) {
    std::cout
        << "  analysis: C1 multiplies only the one-step probability of not entering an\n"
           "  accepting automaton state. Mass that moves into states from which a\n"
           "  violation is already likely (but not yet reached) is counted as safe,\n"
           "  and C2 on a sibling branch does not see it. After one acceptance the\n"
           "  estimate restarts near the advisor value, so a controller that keeps\n"
           "  proposing risky inputs gets several of them accepted. delayed_risk\n"
           "  shows the smallest case: two acceptances at eta = 1/16 give\n"
           "  1/16 + (15/16)(1/16) = 0.12109375.\n";
  }
}

int run(const std::set<int>& known_failures) {
  std::cout << std::unitbuf;
  const auto t_all = Clock::now();

  const auto t_build = Clock::now();
  const ExperimentConfig cfg = testing::quadrotor_e_config();
  const auto pipeline = build_pipeline(cfg);
  std::cout << "quadrotor E-axis: " << pipeline->grid.num_cells() << " cells, "
            << pipeline->grid.u_hat.size() << " abstract inputs, H = "
            << pipeline->tables.horizon() << ", v = " << fmt(pipeline->guarantee, 6)
            << " (built in " << fmt(seconds_since(t_build), 3) << " s)" << std::endl;

  // Criteria 1, 3, 8 and 9 share one supervised run.
  auto t0 = Clock::now();
  MonteCarloOptions sup;
  sup.mode = RunMode::kSupervised;
  sup.episodes = 10000;
  require_budget(pipeline->guarantee, cfg.eta);
  const MonteCarloResult supervised = monte_carlo(*pipeline, sup);
  const MetricsSummary& s = supervised.summary;
  const double sup_seconds = seconds_since(t0);
  const double violation_rate = static_cast<double>(s.violations) / s.episodes;
  record(1, s.episodes == 10000 && violation_rate <= 0.01,
         std::to_string(s.violations) + " violations in " + std::to_string(s.episodes) +
             " supervised episodes (rate " + fmt(violation_rate) + ", limit 0.01; " +
             fmt(sup_seconds, 3) + " s)");

  t0 = Clock::now();
  MonteCarloOptions base = sup;
  base.mode = RunMode::kBaseline;
  const MonteCarloResult baseline = monte_carlo(*pipeline, base);
  record(2, baseline.summary.satisfaction_rate < 0.05,
         "satisfaction without supervision " + fmt(baseline.summary.satisfaction_rate) +
             " over " + std::to_string(baseline.summary.episodes) + " episodes (limit 0.05; " +
             fmt(seconds_since(t0), 3) + " s)");

  record(3, s.acceptance_rate >= 0.55 && s.acceptance_rate <= 0.85,
         "mean acceptance rate " + fmt(s.acceptance_rate) + " (band [0.55, 0.85]; " +
             std::to_string(s.accepted) + " of " + std::to_string(s.decisions) +
             " decisions, " + std::to_string(s.rejected_risk) + " risk and " +
             std::to_string(s.rejected_relation) + " relation rejects)");

  std::string refusal = "not refused";
  bool refused = false;
  try {
    const ExperimentConfig literal = load_config(source_path("configs/quadrotor_e_literal.json"));
    const auto lp = build_pipeline(literal);
    refusal = "literal restriction: v = " + fmt(lp->guarantee) + ", ";
    require_budget(lp->guarantee, literal.eta);
  } catch (const InfeasibleBudget& e) {
    refused = true;
    refusal += std::string("refused: ") + e.what();
  }
  bool gate_ok = true;
  try {
    require_budget(pipeline->guarantee, cfg.eta);
  } catch (const InfeasibleBudget&) {
    gate_ok = false;
  }
  record(4, pipeline->guarantee <= 0.01 && gate_ok && refused,
         "v = " + fmt(pipeline->guarantee) + " <= eta = " + fmt(cfg.eta) + "; " + refusal);

  t0 = Clock::now();
  oracle_soundness();
  std::cout << "  (oracle " << fmt(seconds_since(t0), 3) << " s)" << std::endl;

  advisor_correctness(pipeline->tables, pipeline->model);

  t0 = Clock::now();
  kernel_numerics(*pipeline);

  std::size_t steps = 0;
  for (const auto& e : supervised.episodes) steps += static_cast<std::size_t>(e.length);
  record(8, steps >= 100000 && s.relation_violations == 0,
         std::to_string(s.relation_violations) + " relation violations in " +
             std::to_string(steps) + " supervised steps (" + std::to_string(s.sink_entries) +
             " episodes left the abstract domain)");

  record(9, s.decisions > 0 && s.latency_mean_us <= 10000.0,
         "mean decision latency " + fmt(s.latency_mean_us / 1000.0, 4) + " ms (std " +
             fmt(s.latency_std_us / 1000.0, 4) + " ms, limit 10 ms)");

  t0 = Clock::now();
  MonteCarloOptions det = sup;
  det.episodes = 1000;
  std::ostringstream a, b;
  write_metrics_csv(monte_carlo(*pipeline, det), a);
  write_metrics_csv(monte_carlo(*pipeline, det), b);
  record(10, !a.str().empty() && a.str() == b.str(),
         "two runs of " + std::to_string(det.episodes) + " episodes, seed " +
             std::to_string(cfg.seed) + ": metrics CSVs " +
             (a.str() == b.str() ? "byte-identical" : "differ") + " (" +
             std::to_string(a.str().size()) + " bytes; " + fmt(seconds_since(t0), 3) + " s)");

  std::cout << "total " << fmt(seconds_since(t_all), 4) << " s" << std::endl;

  int unexpected = 0;
  for (const auto& [id, r] : g_results) {
    const bool known = known_failures.count(id) > 0;
    if (r.pass == known) {
      ++unexpected;
      std::cout << "criterion " << id << (known ? " passed but is listed as a known failure"
                                                : " failed")
                << std::endl;
    }
  }
  std::cout << (unexpected == 0 ? "all criteria as expected" : "unexpected results")
            << std::endl;
  return unexpected == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  std::string report;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-failure" && i + 1 < argc) {
      known.insert(std::atoi(argv[++i]));
    } else if (arg == "--report" && i + 1 < argc) {
      report = argv[++i];
    } else {
      std::cerr << "usage: acceptance_test [--known-failure N]... [--report FILE]\n";
      return 2;
    }
  }
  std::ofstream file;
  std::unique_ptr<TeeBuf> tee;
  std::streambuf* const original = std::cout.rdbuf();
  if (!report.empty()) {
    file.open(report);
    if (!file) {
      std::cerr << "cannot write " << report << "\n";
      return 2;
    }
    tee = std::make_unique<TeeBuf>(original, file.rdbuf());
    std::cout.rdbuf(tee.get());
  }
  int status = 1;
  try {
    status = run(known);
  } catch (const std::exception& e) {
    std::cout << "error: " << e.what() << std::endl;
  }
  std::cout.rdbuf(original);
  return status;
}

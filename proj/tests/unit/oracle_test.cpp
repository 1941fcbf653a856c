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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "safevisor/advisor.hpp"
#include "safevisor/error.hpp"
#include "safevisor/oracle.hpp"
#include "support/fixtures.hpp"

namespace safevisor {
namespace {

using testing::instance_from_json;
using testing::kLiftedInstance;
using testing::toy;

const char* kAlwaysSafe = R"({
  "name": "always-safe", "outputs": [0.0], "num_u": 2, "num_w": 2,
  "kernel": [[[[[0, 1.0]], [[0, 1.0]]], [[[0, 1.0]], [[0, 1.0]]]]],
  "dfa": "states q0 q1\ninitial q0\naccepting q1\nlabel ok (-inf, 0.5]\nlabel bad (0.5, inf)\ntrans q0 ok q0\ntrans q0 bad q1\ntrans q1 ok q1\ntrans q1 bad q1\n",
  "horizon": 5, "x0": 0
})";

using Policy = std::vector<std::vector<std::size_t>>;

Policy constant_policy(int horizon, std::size_t size, std::size_t value) {
  return Policy(horizon, std::vector<std::size_t>(size, value));
}

// Non-accepting product states (cell, q), excluding SINK.
std::vector<std::size_t> free_states(const FiniteInstance& inst) {
  std::vector<std::size_t> out;
  const int nq = inst.model.num_q();
  for (std::size_t s = 0; s < inst.model.num_cells() * nq; ++s) {
    if (!inst.model.dfa.is_accepting(static_cast<int>(s % nq))) out.push_back(s);
  }
  return out;
}

// Calls f with every Markov policy that differs only on free states, one
// choice in [0, n) per (time, free state).
template <typename F>
void enumerate_policies(const FiniteInstance& inst, std::size_t entries_per_state,
                        std::size_t n, F&& f) {
  const auto free = free_states(inst);
  const int h = inst.horizon;
  const std::size_t slots = free.size() * h;
  std::size_t total = 1;
  for (std::size_t i = 0; i < slots; ++i) total *= n;
  const std::size_t size = inst.model.num_cells() * inst.model.num_q() * entries_per_state;
  for (std::size_t code = 0; code < total; ++code) {
    Policy p = constant_policy(h, size, 0);
    std::size_t c = code;
    for (int k = 0; k < h; ++k) {
      for (std::size_t s : free) {
        const std::size_t choice = c % n;
        c /= n;
        for (std::size_t e = 0; e < entries_per_state; ++e) {
          p[k][s * entries_per_state + e] = choice;
        }
      }
    }
    f(p);
  }
}

TEST(Product, StateCountAndLayout) {
  const auto inst = toy("escape");
  const auto g = build_product(inst.model, inst.labelling, inst.outputs);
  EXPECT_EQ(g.num_states(), 6u);
  EXPECT_EQ(g.state(1, 1), 3u);
  EXPECT_TRUE(g.is_sink(g.state(2, 0)));
  EXPECT_TRUE(g.is_accepting(g.state(0, 1)));
  const auto& r = g.row(g.state(0, 0), 0, 0);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].state, g.state(0, 0));
  EXPECT_DOUBLE_EQ(r[0].prob, 0.95);
  EXPECT_EQ(r[1].state, g.state(1, 1));
  EXPECT_DOUBLE_EQ(r[1].prob, 0.05);
}

TEST(Product, SingleCellTwoStates) {
  const auto inst = instance_from_json(kAlwaysSafe);
  const auto g = build_product(inst.model, inst.labelling, inst.outputs);
  EXPECT_EQ(g.num_cells * g.num_q, 2u);
  const auto& r = g.row(g.state(0, 0), 1, 1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].state, g.state(0, 0));
  EXPECT_EQ(r[0].prob, 1.0);
}

TEST(Product, RowsConserveMassAndFollowTheAutomaton) {
  const auto inst = instance_from_json(kLiftedInstance);
  const auto g = build_product(inst.model, inst.labelling, inst.outputs);
  for (std::size_t s = 0; s < g.num_states(); ++s) {
    for (std::size_t u = 0; u < g.num_u; ++u) {
      for (std::size_t w = 0; w < g.num_w; ++w) {
        double total = 0.0;
        for (const auto& t : g.row(s, u, w)) {
          total += t.prob;
          if (g.is_sink(s)) {
            EXPECT_EQ(t.state, s);
          } else if (!g.is_sink(t.state)) {
            const double y = inst.outputs[g.cell_of(t.state)];
            EXPECT_EQ(g.q_of(t.state),
                      inst.model.dfa.step(g.q_of(s), inst.labelling.label(y)));
          } else {
            EXPECT_EQ(g.q_of(t.state), g.q_of(s));
          }
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
    }
  }
}

TEST(Product, OutputCountMismatch) {
  const auto inst = toy("escape");
  EXPECT_THROW(build_product(inst.model, inst.labelling, {0.0}), ConfigError);
}

TEST(PolicyValue, AlwaysSafeIsZero) {
  const auto inst = instance_from_json(kAlwaysSafe);
  MarkovPolicyPair p{constant_policy(5, 2, 1), constant_policy(5, 4, 1)};
  const auto v = policy_value(inst.model, p, 5);
  ASSERT_EQ(v.size(), 6u);
  for (const auto& slice : v) EXPECT_EQ(slice[0], 0.0);
}

TEST(PolicyValue, ZeroHorizonIsTerminalSlice) {
  const auto inst = toy("escape");
  const auto v = policy_value(inst.model, {}, 0);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], (std::vector<double>{0, 1, 0, 1, 1, 1}));
}

TEST(PolicyValue, HandExpansion) {
  const auto inst = toy("escape");
  // Survival per step 0.9 under (û0, ŵ1) and 0.7 under (û1, ŵ1).
  for (auto [u, keep] : {std::pair<std::size_t, double>{0, 0.9}, {1, 0.7}}) {
    MarkovPolicyPair p{constant_policy(4, 4, u), constant_policy(4, 8, 1)};
    const auto v = policy_value(inst.model, p, 4);
    for (int n = 0; n <= 4; ++n) {
      EXPECT_NEAR(v[n][0], 1.0 - std::pow(keep, n), 1e-15) << "u " << u << " n " << n;
    }
  }
}

TEST(PolicyValue, UndefinedEntries) {
  const auto inst = toy("escape");
  MarkovPolicyPair shortp{constant_policy(3, 4, 0), constant_policy(3, 8, 0)};
  EXPECT_THROW(policy_value(inst.model, shortp, 4), IndexError);
  MarkovPolicyPair narrow{constant_policy(4, 1, 0), constant_policy(4, 8, 0)};
  EXPECT_THROW(policy_value(inst.model, narrow, 4), IndexError);
  MarkovPolicyPair range{constant_policy(4, 4, 5), constant_policy(4, 8, 0)};
  EXPECT_THROW(policy_value(inst.model, range, 4), IndexError);
  MarkovPolicyPair wrange{constant_policy(4, 4, 0), constant_policy(4, 8, 2)};
  EXPECT_THROW(policy_value(inst.model, wrange, 4), IndexError);
}

TEST(WorstCaseAdversary, SingleAdversaryInputIsPolicyValue) {
  const auto inst = toy("delayed_risk");
  for (std::size_t u : {0, 1}) {
    const Policy rho = constant_policy(3, 8, u);
    const auto adv = worst_case_adversary(inst.model, rho, 3);
    const auto v = policy_value(inst.model, {rho, constant_policy(3, 16, 0)}, 3);
    EXPECT_EQ(adv.values, v);
  }
}

TEST(WorstCaseAdversary, DominatesEveryEnumeratedAdversary) {
  for (const char* name : {"escape", "harbor"}) {
    const auto inst = toy(name);
    const auto tables = value_iteration(inst.model, inst.horizon);
    const Policy rho = advisor_policy(inst.model, tables);
    const auto adv = worst_case_adversary(inst.model, rho, inst.horizon);
    const std::size_t nu = inst.model.kernel.num_u();
    double best = -1.0;
    std::vector<double> worst(inst.model.num_cells() * inst.model.num_q(), -1.0);
    enumerate_policies(inst, nu, inst.model.kernel.num_w(), [&](const Policy& lambda) {
      const auto v = policy_value(inst.model, {rho, lambda}, inst.horizon);
      for (std::size_t s = 0; s < worst.size(); ++s) {
        EXPECT_LE(v[inst.horizon][s], adv.values[inst.horizon][s] + 1e-12) << name;
        worst[s] = std::max(worst[s], v[inst.horizon][s]);
      }
      best = std::max(best, v[inst.horizon][inst.x0 * inst.model.num_q()]);
    });
    // The best response is attained by some Markov adversary.
    for (std::size_t s = 0; s < worst.size(); ++s) {
      EXPECT_NEAR(worst[s], adv.values[inst.horizon][s], 1e-12) << name << " state " << s;
    }
    EXPECT_GT(best, 0.0);
  }
}

TEST(WorstCaseAdversary, AdvisorPolicyReplaysValueIteration) {
  for (const char* name : {"escape", "corridor", "harbor", "delayed_risk"}) {
    const auto inst = toy(name);
    const auto tables = value_iteration(inst.model, inst.horizon);
    const auto adv = worst_case_adversary(inst.model, advisor_policy(inst.model, tables),
                                          inst.horizon);
    const int nq = inst.model.num_q();
    for (int n = 0; n <= inst.horizon; ++n) {
      for (std::size_t s = 0; s < inst.model.num_cells() * nq; ++s) {
        EXPECT_NEAR(adv.values[n][s],
                    tables.value(n, static_cast<CellIndex>(s / nq), static_cast<int>(s % nq)),
                    1e-12)
            << name << " n " << n << " s " << s;
      }
    }
  }
}

TEST(Minimax, ValueIterationIsTheMinimumOverMarkovPolicies) {
  for (const char* name : {"escape", "harbor"}) {
    const auto inst = toy(name);
    const auto tables = value_iteration(inst.model, inst.horizon);
    const int nq = inst.model.num_q();
    std::vector<double> best(inst.model.num_cells() * nq,
                             std::numeric_limits<double>::infinity());
    enumerate_policies(inst, 1, inst.model.kernel.num_u(), [&](const Policy& rho) {
      const auto adv = worst_case_adversary(inst.model, rho, inst.horizon);
      for (std::size_t s = 0; s < best.size(); ++s) {
        best[s] = std::min(best[s], adv.values[inst.horizon][s]);
      }
    });
    for (std::size_t s = 0; s < best.size(); ++s) {
      EXPECT_NEAR(best[s],
                  tables.value(inst.horizon, static_cast<CellIndex>(s / nq),
                               static_cast<int>(s % nq)),
                  1e-12)
          << name << " state " << s;
    }
  }
}

TEST(Reachable, AutomatonStateSets) {
  const auto escape = toy("escape");
  const auto g = build_product(escape.model, escape.labelling, escape.outputs);
  EXPECT_EQ(reachable_dfa_sets(g, 0, 0, 3), (std::vector<BitSet>{1, 3, 3, 3}));
  const auto safe = instance_from_json(kAlwaysSafe);
  const auto gs = build_product(safe.model, safe.labelling, safe.outputs);
  EXPECT_EQ(reachable_dfa_sets(gs, 0, 0, 2), (std::vector<BitSet>{1, 1, 1}));
}

TEST(ExhaustiveCheck, AlwaysSafeNeverViolates) {
  const auto report = exhaustive_violation_bound_check(instance_from_json(kAlwaysSafe));
  EXPECT_EQ(report.advisor_value, 0.0);
  ASSERT_FALSE(report.gates.empty());
  for (const auto& g : report.gates) {
    EXPECT_EQ(g.worst_violation, 0.0);
    EXPECT_GT(g.accepted_decisions, 0u);
  }
  EXPECT_TRUE(report.passed());
}

TEST(ExhaustiveCheck, AdvisorValueAndReplayAgree) {
  const auto report = exhaustive_violation_bound_check(toy("escape"));
  EXPECT_NEAR(report.advisor_value, 1.0 - std::pow(0.9, 4), 1e-15);
  EXPECT_NEAR(report.minimax_value, report.advisor_value, 1e-12);
  EXPECT_LE(report.minimax_gap, 1e-12);
  for (const auto& g : report.gates) {
    EXPECT_GE(g.eta, report.advisor_value);
    EXPECT_TRUE(g.reachable_ok);
    EXPECT_GE(g.worst_violation, 0.0);
  }
}

// With one input that moves into a state whose violation is one step away
// and another that is safe forever, the supervisor accepts the risky input
// twice at η = 1/16. The multiplicative accumulator only records one-step
// safety, so the second acceptance does not see the risk charged by the
// first, and the exact worst case is 1/16 + (15/16)(1/16).
TEST(ExhaustiveCheck, DelayedRiskExceedsTheBudget) {
  const auto report = exhaustive_violation_bound_check(toy("delayed_risk"));
  EXPECT_EQ(report.advisor_value, 0.0);
  ASSERT_EQ(report.gates.size(), 1u);
  const GateResult& g = report.gates[0];
  EXPECT_EQ(g.eta, 0.0625);
  EXPECT_DOUBLE_EQ(g.worst_violation, 0.0625 + 0.9375 * 0.0625);
  EXPECT_FALSE(g.bound_ok);
  EXPECT_FALSE(g.dominance_ok);
  EXPECT_FALSE(report.passed());
  EXPECT_NE(format_report(report).find("FAIL"), std::string::npos);
}

TEST(ExhaustiveCheck, RejectsLiftedOrDiscountedInstances) {
  EXPECT_THROW(exhaustive_violation_bound_check(instance_from_json(kLiftedInstance)),
               ConfigError);
}

TEST(ExhaustiveCheck, SizeGuard) {
  auto inst = toy("escape");
  EXPECT_NO_THROW(check_oracle_size(inst));
  inst.horizon = 9;
  try {
    check_oracle_size(inst);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("H = 9 (max 8)"), std::string::npos);
  }
  EXPECT_THROW(exhaustive_violation_bound_check(inst), CapacityError);
}

TEST(ExhaustiveCheck, FormatReport) {
  const auto text = format_report(exhaustive_violation_bound_check(toy("harbor")));
  EXPECT_EQ(text.rfind("instance harbor", 0), 0u);
  EXPECT_NE(text.find("advisor value v = "), std::string::npos);
}

}  // namespace
}  // namespace safevisor

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


#ifndef SAFEVISOR_ORACLE_HPP_
#define SAFEVISOR_ORACLE_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "safevisor/advisor.hpp"
#include "safevisor/automata.hpp"

namespace safevisor {

// Hand-specified finite game used as its own abstraction (identity relation).
// Cell outputs feed the labelling.
struct FiniteInstance {
  std::string name;
  AbstractModel model;
  IntervalLabelling labelling;
  std::vector<double> outputs;
  double eps = 0.0;
  int horizon = 1;
  CellIndex x0 = 0;
  std::vector<double> etas;  // budgets to test; empty: derived from v
};

// Explicit product of a finite kernel with the automaton. State index
// s = x * |Q| + q over cells plus SINK (x = |X̂|).
struct ProductTransition {
  std::size_t state;
  double prob;
};

struct FiniteProductGame {
  std::size_t num_cells = 0;
  int num_q = 0;
  std::size_t num_u = 0;
  std::size_t num_w = 0;
  BitSet accepting = 0;
  // Successor lists per (state, û, ŵ), index ((s * num_u) + u) * num_w + w.
  std::vector<std::vector<ProductTransition>> rows;

  std::size_t num_states() const { return (num_cells + 1) * num_q; }
  std::size_t state(std::size_t x, int q) const { return x * num_q + q; }
  std::size_t cell_of(std::size_t s) const { return s / num_q; }
  int q_of(std::size_t s) const { return static_cast<int>(s % num_q); }
  bool is_sink(std::size_t s) const { return cell_of(s) == num_cells; }
  bool is_accepting(std::size_t s) const { return (accepting >> q_of(s)) & 1u; }
  const std::vector<ProductTransition>& row(std::size_t s, std::size_t u,
                                            std::size_t w) const {
    return rows[(s * num_u + u) * num_w + w];
  }
};

// Successor q' = τ(q, L(ĥ(x̂'))); SINK keeps q.
FiniteProductGame build_product(const AbstractModel& model,
                                const IntervalLabelling& labelling,
                                const std::vector<double>& outputs);

// Time-indexed Markov policies: rho[k][s] and lambda[k][s * num_u + u].
struct MarkovPolicyPair {
  std::vector<std::vector<std::size_t>> rho;
  std::vector<std::vector<std::size_t>> lambda;
};

// Tables V^{ρ,λ}_n over product states for n = 0..H (n steps to go):
// V_0 = 1 on accepting states, and
//   V_{n+1}(x̂,q) = (1-δ) Σ V_n(x̂', q̄(x̂',q)) T̂(x̂' | x̂, ρ, λ) + δ
// with q̄ taken over the ε-inflated successors and SINK at value 1.
// Throws IndexError on an undefined policy entry.
std::vector<std::vector<double>> policy_value(const AbstractModel& model,
                                              const MarkovPolicyPair& policies,
                                              int horizon);

struct AdversaryResult {
  std::vector<std::vector<std::size_t>> lambda;
  std::vector<std::vector<double>> values;
};

// Stepwise best response λ*(ρ) (argmax ŵ, lowest index on ties).
AdversaryResult worst_case_adversary(
    const AbstractModel& model, const std::vector<std::vector<std::size_t>>& rho,
    int horizon);

// ρ from the advisor tables, time-indexed k = 0..H-1.
std::vector<std::vector<std::size_t>> advisor_policy(const AbstractModel& model,
                                                     const ValueTables& tables);

// Q̃_n: automaton states reachable with positive probability after n steps
// from (x0, q̄0) under any inputs, n = 0..H.
std::vector<BitSet> reachable_dfa_sets(const FiniteProductGame& product,
                                       std::size_t x0, int q0_bar, int horizon);

struct GateResult {
  double eta = 0.0;
  double worst_violation = 0.0;  // exact, worst over controller and adversary
  bool bound_ok = false;         // worst_violation <= eta + 1e-9
  std::size_t configurations = 0;
  std::size_t accepted_decisions = 0;
  double max_tail_excess = 0.0;  // max over accepts of tail - E_pv
  bool dominance_ok = false;     // max_tail_excess <= 1e-9
  bool reachable_ok = false;
};

struct OracleReport {
  std::string name;
  double advisor_value = 0.0;      // V̄_H(x0, q̄0) from value iteration
  double minimax_value = 0.0;      // V^{ρ*, λ*(ρ*)} at the same state
  double minimax_gap = 0.0;        // max over all states and slices
  std::vector<GateResult> gates;

  bool passed() const;
};

// Size guard: |X̂|·|Q| <= 64, |Û|, |Ŵ| <= 4, H <= 8 (CapacityError).
void check_oracle_size(const FiniteInstance& instance);

// Enumerates every supervisor-governed execution against every controller
// proposal and adversary response, memoized on (x̂, q, k, C1), for each
// budget η >= v. Requires ε = δ = 0.
OracleReport exhaustive_violation_bound_check(const FiniteInstance& instance);

std::string format_report(const OracleReport& report);

}  // namespace safevisor

#endif  // SAFEVISOR_ORACLE_HPP_

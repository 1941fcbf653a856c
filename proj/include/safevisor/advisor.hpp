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


#ifndef SAFEVISOR_ADVISOR_HPP_
#define SAFEVISOR_ADVISOR_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "safevisor/abstraction.hpp"
#include "safevisor/automata.hpp"
#include "safevisor/kernel.hpp"

namespace safevisor {

// Finite abstraction paired with the ε-inflated specification. This is all
// value iteration, the supervisor and the oracle need to know about the game.
struct AbstractModel {
  AbstractKernel kernel;
  Dfa dfa;
  EpsilonLift lift;
  double delta = 0.0;

  std::size_t num_cells() const { return kernel.num_states(); }
  CellIndex sink() const { return static_cast<CellIndex>(num_cells()); }
  int num_q() const { return dfa.num_states(); }
};

// Checks that kernel, DFA and lift agree on their dimensions and that δ lies
// in [0, 1). Throws ConfigError.
void validate_model(const AbstractModel& model);

// Cost-to-go tables V̄_n(x̂, q) for n = 0..H and the minimizing abstract input
// for n = 1..H. Row num_cells() is SINK and is pinned to 1.
class ValueTables {
 public:
  ValueTables() = default;
  ValueTables(std::size_t num_cells, int num_q, std::size_t num_u, int horizon);

  std::size_t num_cells() const { return num_cells_; }
  std::size_t rows() const { return num_cells_ + 1; }
  int num_q() const { return num_q_; }
  std::size_t num_u() const { return num_u_; }
  int horizon() const { return horizon_; }

  double value(int n, CellIndex x, int q) const {
    return values_[index(n, q) + x];
  }
  // Index into Û of the minimizing input with n steps to go, 1 <= n <= H.
  std::uint32_t policy(int n, CellIndex x, int q) const {
    return policy_[index(n - 1, q) + x];
  }
  // V̄_n(·, q) over all rows, SINK last.
  std::span<const double> slice(int n, int q) const {
    return {values_.data() + index(n, q), rows()};
  }
  std::span<double> mutable_slice(int n, int q) {
    return {values_.data() + index(n, q), rows()};
  }
  std::span<std::uint32_t> mutable_policy(int n, int q) {
    return {policy_.data() + index(n - 1, q), rows()};
  }

  const std::vector<double>& raw_values() const { return values_; }
  const std::vector<std::uint32_t>& raw_policy() const { return policy_; }

 private:
  std::size_t index(int n, int q) const {
    return (static_cast<std::size_t>(n) * num_q_ + q) * rows();
  }

  std::size_t num_cells_ = 0;
  int num_q_ = 0;
  std::size_t num_u_ = 0;
  int horizon_ = 0;
  std::vector<double> values_;         // (H+1) x Q x rows
  std::vector<std::uint32_t> policy_;  // H x Q x rows
};

struct ValueIterationOptions {
  std::size_t memory_cap_bytes = std::size_t{4} << 30;
  int workers = 0;  // 0: default_worker_count()
};

std::size_t estimate_table_bytes(std::size_t num_cells, int num_q,
                                 int horizon);

// Minimax value iteration
//   V̄_{n+1}(x̂,q) = min_û max_ŵ (1-δ) [Σ_x̂' V̄_n(x̂', q̄(x̂',q)) T̂ + T̂(SINK)] + δ
// with V̄ = 1 on accepting q and q̄ the successor maximizing V̄_n. Ties go to
// the lowest index everywhere.
ValueTables value_iteration(const AbstractModel& model, int horizon,
                            const ValueIterationOptions& options = {});

// out[x̂'] = max over q' in Q'_ε(x̂') from q of V̄_n(x̂', q'), for grid cells.
void lifted_values(const ValueTables& tables, const AbstractModel& model,
                   int n, int q, std::vector<double>& out);

// q̄(x̂', q): the successor of q with the largest V̄_n(x̂', ·), lowest index
// on ties. SINK maps to q.
int qbar_star(const ValueTables& tables, const AbstractModel& model, int n,
              CellIndex x_next, int q);

// max_ŵ [Σ lifted[x̂'] T̂(x̂' | x̂, û, ŵ) + T̂(SINK | x̂, û, ŵ)].
double worst_case_backup(const AbstractModel& model,
                         std::span<const double> lifted, CellIndex x,
                         std::size_t u);

// Abstract input offered at time k: the policy with H - k steps to go.
// Throws HorizonExceeded when k >= H. SINK and accepting rows return 0.
std::size_t advisor_input(const ValueTables& tables, CellIndex x, int q,
                          int k);

// V̄_H(x̂0, q̄0). The caller supplies the related cell and the initial
// product state q̄0 = τ(q0, L(h(x0))).
double advisor_guarantee(const ValueTables& tables, CellIndex x0_hat,
                         int q0_bar);

// Throws InfeasibleBudget when η < v.
void require_budget(double guarantee, double eta);

// "SVVT" files: magic, u32 version, u64 rows, u32 |Q|, u32 |Û|, u32 H, then
// H+1 value slices (f64, Q x rows each) and H policy slices (u32, same
// shape), all little-endian.
void save_tables(const ValueTables& tables, const std::filesystem::path& path);
ValueTables load_tables(const std::filesystem::path& path);

}  // namespace safevisor

#endif  // SAFEVISOR_ADVISOR_HPP_

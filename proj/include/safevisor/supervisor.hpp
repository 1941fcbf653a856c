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


#ifndef SAFEVISOR_SUPERVISOR_HPP_
#define SAFEVISOR_SUPERVISOR_HPP_

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safevisor/abstraction.hpp"
#include "safevisor/advisor.hpp"
#include "safevisor/game.hpp"

namespace safevisor {

enum class Verdict { kAccept, kRejectRelation, kRejectRisk };

std::string verdict_name(Verdict v);

// Which feasible companion input enters E_pv. kMaxSafety picks the largest
// C2 (smallest E_pv); kMaxRisk picks the smallest.
enum class CompanionMode { kMaxSafety, kMaxRisk };

CompanionMode parse_companion_mode(const std::string& name);
std::string companion_mode_name(CompanionMode mode);

struct Decision {
  Verdict verdict = Verdict::kRejectRelation;
  Vector u_applied;
  // Abstract input that drives the abstract state: û* on accept, the
  // advisor's û_c on reject.
  std::size_t u_hat_companion = 0;
  std::optional<double> e_pv;
  std::chrono::nanoseconds elapsed{0};
};

// Read-only pieces shared by every decision of every episode.
struct SupervisorSetup {
  const LinearGaussianGame* game = nullptr;
  const Grid* grid = nullptr;
  const RelationParams* relation = nullptr;
  const AbstractModel* model = nullptr;
  const ValueTables* tables = nullptr;
  double eta = 0.0;
  CompanionMode mode = CompanionMode::kMaxSafety;
};

// { û : ‖A(x - x̂) + B(u_uc - û)‖_M <= ε - γ }. Throws DomainError when u_uc
// is outside U.
std::vector<std::size_t> feasible_abstract_inputs(
    const LinearGaussianGame& game, const Grid& grid,
    const RelationParams& relation, const Vector& x, const Vector& x_hat,
    const Vector& u_uc);

// (1-δ) min_ŵ Σ_{x̂ safe for q_prev} T̂(x̂ | x̂_prev, û_prev, ŵ); zero when
// q_prev is accepting or x̂_prev is SINK.
double c1_factor(const AbstractModel& model, CellIndex x_prev,
                 std::size_t u_prev, int q_prev);

double c1_update(double c1_prev, const AbstractModel& model, CellIndex x_prev,
                 std::size_t u_prev, int q_prev);

// (1-δ)(1 - max_ŵ [Σ V̄_{H-k-1}(x̂', q̄(x̂',q)) T̂ + T̂(SINK)]). Throws
// HorizonExceeded when k >= H.
double c2_lookahead(const AbstractModel& model, const ValueTables& tables,
                    CellIndex x, int q, std::size_t u, int k);

struct Companion {
  std::size_t u_hat = 0;
  double c2 = 0.0;
};

// Companion input over a nonempty U_f; lowest index on ties. Throws
// std::invalid_argument on an empty set.
Companion select_companion(const AbstractModel& model,
                           const ValueTables& tables, CellIndex x, int q,
                           int k, std::span<const std::size_t> feasible,
                           CompanionMode mode);

// One supervisor step: reject when U_f is empty, otherwise accept u_uc iff
// E_pv = 1 - C1 C2(û*) <= η. Rejections apply the advisor's refined input.
// A SINK abstract state always rejects and falls back to the advisor input
// of the cell nearest to x, clamped into U.
Decision decide(const SupervisorSetup& setup, const Vector& x,
                CellIndex x_hat, int q, double c1, int k, const Vector& u_uc);

}  // namespace safevisor

#endif  // SAFEVISOR_SUPERVISOR_HPP_

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


#include "safevisor/supervisor.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "safevisor/error.hpp"

namespace safevisor {

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kAccept:
      return "ACCEPT";
    case Verdict::kRejectRelation:
      return "REJECT_RELATION";
    case Verdict::kRejectRisk:
      return "REJECT_RISK";
  }
  return "UNKNOWN";
}

CompanionMode parse_companion_mode(const std::string& name) {
  if (name == "max-safety") return CompanionMode::kMaxSafety;
  if (name == "max-risk") return CompanionMode::kMaxRisk;
  throw ConfigError("unknown companion mode '" + name +
                    "' (expected max-safety or max-risk)");
}

std::string companion_mode_name(CompanionMode mode) {
  return mode == CompanionMode::kMaxSafety ? "max-safety" : "max-risk";
}

std::vector<std::size_t> feasible_abstract_inputs(
    const LinearGaussianGame& game, const Grid& grid,
    const RelationParams& relation, const Vector& x, const Vector& x_hat,
    const Vector& u_uc) {
  if (!game.u_bounds.contains(u_uc, kBoxTolerance)) {
    throw DomainError("unverified input outside U");
  }
  const Vector phi = game.A * (x - x_hat) + game.B * u_uc;
  const double radius = relation.eps - relation.gamma;
  std::vector<std::size_t> out;
  if (radius < 0.0) return out;
  for (std::size_t i = 0; i < grid.u_hat.size(); ++i) {
    if (m_norm(relation.M, phi - game.B * grid.u_hat[i]) <= radius + 1e-12) {
      out.push_back(i);
    }
  }
  return out;
}

double c1_factor(const AbstractModel& model, CellIndex x_prev,
                 std::size_t u_prev, int q_prev) {
  if (x_prev >= model.num_cells() || model.dfa.is_accepting(q_prev)) return 0.0;
  const AbstractKernel& k = model.kernel;
  const std::span<const double> safe(model.lift.safe_indicator(q_prev));
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < k.num_w(); ++w) {
    worst = std::min(worst, k.expect(k.row_index(x_prev, u_prev, w), safe));
  }
  return std::clamp((1.0 - model.delta) * worst, 0.0, 1.0);
}

double c1_update(double c1_prev, const AbstractModel& model, CellIndex x_prev,
                 std::size_t u_prev, int q_prev) {
  return c1_prev * c1_factor(model, x_prev, u_prev, q_prev);
}

namespace {

void check_time(const ValueTables& tables, int k) {
  if (k < 0 || k >= tables.horizon()) {
    throw HorizonExceeded("look-ahead requested at k = " + std::to_string(k) +
                          " with horizon " + std::to_string(tables.horizon()));
  }
}

double c2_from_lifted(const AbstractModel& model,
                      std::span<const double> lifted, CellIndex x,
                      std::size_t u) {
  const double backup = worst_case_backup(model, lifted, x, u);
  return std::clamp((1.0 - model.delta) * (1.0 - backup), 0.0, 1.0);
}

}  // namespace

double c2_lookahead(const AbstractModel& model, const ValueTables& tables,
                    CellIndex x, int q, std::size_t u, int k) {
  check_time(tables, k);
  if (x >= model.num_cells() || model.dfa.is_accepting(q)) return 0.0;
  std::vector<double> lifted;
  lifted_values(tables, model, tables.horizon() - k - 1, q, lifted);
  return c2_from_lifted(model, lifted, x, u);
}

Companion select_companion(const AbstractModel& model,
                           const ValueTables& tables, CellIndex x, int q,
                           int k, std::span<const std::size_t> feasible,
                           CompanionMode mode) {
  if (feasible.empty()) {
    throw std::invalid_argument("companion selection needs a nonempty U_f");
  }
  check_time(tables, k);
  Companion best{feasible.front(), 0.0};
  if (x >= model.num_cells() || model.dfa.is_accepting(q)) return best;
  std::vector<double> lifted;
  lifted_values(tables, model, tables.horizon() - k - 1, q, lifted);
  bool first = true;
  for (std::size_t u : feasible) {
    const double c2 = c2_from_lifted(model, lifted, x, u);
    const bool better = mode == CompanionMode::kMaxSafety ? c2 > best.c2 : c2 < best.c2;
    if (first || better) {
      best = {u, c2};
      first = false;
    }
  }
  return best;
}

Decision decide(const SupervisorSetup& setup, const Vector& x,
                CellIndex x_hat, int q, double c1, int k, const Vector& u_uc) {
  const auto start = std::chrono::steady_clock::now();
  const LinearGaussianGame& game = *setup.game;
  const Grid& grid = *setup.grid;
  const RelationParams& rel = *setup.relation;
  const AbstractModel& model = *setup.model;
  const ValueTables& tables = *setup.tables;
  check_time(tables, k);

  Decision d;
  auto finish = [&]() {
    d.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - start);
    return d;
  };

  if (x_hat >= model.num_cells()) {
    // Relation already lost: steer with the advisor of the nearest cell.
    Vector clamped = x.cwiseMax(game.x_bounds.lower).cwiseMin(game.x_bounds.upper);
    const CellIndex near = quantize_state(grid, clamped);
    d.verdict = Verdict::kRejectRelation;
    d.u_hat_companion = advisor_input(tables, near, q, k);
    const Vector u = rel.K * (x - grid.states.center(near)) + grid.u_hat[d.u_hat_companion];
    d.u_applied = u.cwiseMax(game.u_bounds.lower).cwiseMin(game.u_bounds.upper);
    return finish();
  }

  const Vector rep = grid.states.center(x_hat);
  const std::size_t u_c = advisor_input(tables, x_hat, q, k);
  auto reject = [&](Verdict v) {
    d.verdict = v;
    d.u_hat_companion = u_c;
    d.u_applied = refine(rel, game.u_bounds, x, rep, grid.u_hat[u_c]);
    return finish();
  };

  const auto feasible = feasible_abstract_inputs(game, grid, rel, x, rep, u_uc);
  if (feasible.empty()) return reject(Verdict::kRejectRelation);

  const Companion c = select_companion(model, tables, x_hat, q, k, feasible, setup.mode);
  const double e_pv = std::clamp(1.0 - c1 * c.c2, 0.0, 1.0);
  d.e_pv = e_pv;
  if (e_pv <= setup.eta) {
    d.verdict = Verdict::kAccept;
    d.u_applied = u_uc;
    d.u_hat_companion = c.u_hat;
    return finish();
  }
  return reject(Verdict::kRejectRisk);
}

}  // namespace safevisor

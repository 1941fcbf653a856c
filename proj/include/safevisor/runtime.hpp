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


#ifndef SAFEVISOR_RUNTIME_HPP_
#define SAFEVISOR_RUNTIME_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "safevisor/abstraction.hpp"
#include "safevisor/advisor.hpp"
#include "safevisor/automata.hpp"
#include "safevisor/game.hpp"
#include "safevisor/supervisor.hpp"

namespace safevisor {

// kSupervised: the full architecture. kBaseline: every unverified input is
// applied. kAdvisorOnly: every step applies the advisor's refined input.
enum class RunMode { kSupervised, kBaseline, kAdvisorOnly };

struct AugmentedState {
  Vector x;
  CellIndex x_hat = 0;  // grid cell or SINK
  int q = 0;
  std::size_t u_hat_last = 0;
  Vector w_last;
  double c1 = 1.0;
  int k = 0;
  // Added to k for table lookups when the run is shorter than the
  // synthesized horizon.
  int time_offset = 0;
  // (x̂, q) of the previous step, consumed by the C1 update.
  CellIndex x_hat_prev = 0;
  int q_prev = 0;
  bool relation_lost = false;
};

struct StepRecord {
  int step = 0;
  double y = 0.0;
  int q = 0;
  Vector u_uc;
  Verdict verdict = Verdict::kAccept;
  std::optional<double> e_pv;
  double latency_us = 0.0;
  Vector u_applied;
  Vector w;
  double c1 = 1.0;
  CellIndex x_hat = 0;
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  int length = 0;
  bool violated = false;
  int violation_step = -1;
  int accepted = 0;
  int rejected_risk = 0;
  int rejected_relation = 0;
  // Steps after which (x, rep(x̂)) left R while x̂ stayed on the grid.
  int relation_violations = 0;
  bool entered_sink = false;
  // Unverified inputs outside U; counted and rejected like an empty U_f.
  int malformed_inputs = 0;
  double latency_sum_us = 0.0;
  double latency_sq_sum_us = 0.0;
  std::vector<StepRecord> steps;  // filled only when requested
};

struct Runtime {
  SupervisorSetup supervisor;
  const IntervalLabelling* labelling = nullptr;
  RunMode mode = RunMode::kSupervised;
};

using ControllerFn = std::function<Vector(const AugmentedState&)>;
// Player II observes Player I's input before choosing.
using AdversaryFn = std::function<Vector(const AugmentedState&, const Vector&)>;
using NoiseFn = std::function<Vector()>;

// Related initial cell (home cell or closest related neighbor), q̄0 =
// τ(q0, L(h(x0))), C1 = 1, k = 0. Throws RelationInfeasible.
AugmentedState init_augmented(const Runtime& rt, const Vector& x0);

// R⁻¹ (x_next - A x - B u - D w).
Vector recover_noise(const LinearGaussianGame& game, const Vector& x,
                     const Vector& u, const Vector& w, const Vector& x_next);

// Cell of A rep(x̂) + B û + D ŵ + R noise, or SINK outside X. SINK stays SINK.
CellIndex propagate_abstract(const LinearGaussianGame& game, const Grid& grid,
                             CellIndex x_hat, std::size_t u_hat,
                             std::size_t w_hat, const Vector& noise);

// One pass of the supervised loop at time state.k. Updates `state` and the
// `trace` counters in place.
StepRecord run_step(const Runtime& rt, AugmentedState& state,
                    const ControllerFn& controller,
                    const AdversaryFn& adversary, const NoiseFn& noise,
                    EpisodeTrace& trace);

struct EpisodeOptions {
  int horizon = -1;  // -1: the synthesized horizon
  bool record_steps = false;
};

// Runs until the horizon or the first accepting DFA state.
EpisodeTrace run_episode(const Runtime& rt, const Vector& x0,
                         const ControllerFn& controller,
                         const AdversaryFn& adversary, const NoiseFn& noise,
                         std::uint64_t seed, const EpisodeOptions& options);

// Standard-normal noise stream.
NoiseFn gaussian_noise(std::uint64_t seed, Eigen::Index dim);

// Per-step CSV: step,y,q,verdict,e_pv,latency_us,u_uc,u_applied,w.
void write_trace_csv(const EpisodeTrace& trace, const Dfa& dfa,
                     std::ostream& os);

}  // namespace safevisor

#endif  // SAFEVISOR_RUNTIME_HPP_

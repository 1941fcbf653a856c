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


#include "safevisor/runtime.hpp"

#include <iomanip>
#include <memory>

#include "safevisor/error.hpp"
#include "safevisor/relation.hpp"

namespace safevisor {

AugmentedState init_augmented(const Runtime& rt, const Vector& x0) {
  const SupervisorSetup& s = rt.supervisor;
  const auto cell = find_related_cell(*s.grid, *s.relation, x0);
  if (!cell) {
    throw RelationInfeasible("no abstract state is related to the initial state");
  }
  AugmentedState st;
  st.x = x0;
  st.x_hat = *cell;
  const Dfa& dfa = s.model->dfa;
  st.q = dfa.step(dfa.initial(), rt.labelling->label(output(*s.game, x0)(0)));
  st.w_last = Vector::Zero(s.game->adversary_dim());
  st.x_hat_prev = st.x_hat;
  st.q_prev = st.q;
  return st;
}

Vector recover_noise(const LinearGaussianGame& game, const Vector& x,
                     const Vector& u, const Vector& w, const Vector& x_next) {
  if (x.size() != game.state_dim() || x_next.size() != game.state_dim() ||
      u.size() != game.input_dim() || w.size() != game.adversary_dim()) {
    throw ConfigError("noise recovery: dimension mismatch");
  }
  const Vector residual = x_next - game.A * x - game.B * u - game.D * w;
  return game.R_noise.partialPivLu().solve(residual);
}

CellIndex propagate_abstract(const LinearGaussianGame& game, const Grid& grid,
                             CellIndex x_hat, std::size_t u_hat,
                             std::size_t w_hat, const Vector& noise) {
  if (x_hat >= grid.num_cells()) return grid.sink();
  const Vector next = step_unchecked(game, grid.states.center(x_hat),
                                     grid.u_hat[u_hat], grid.w_hat[w_hat], noise);
  const auto cell = grid.states.locate(next);
  return cell ? *cell : grid.sink();
}

StepRecord run_step(const Runtime& rt, AugmentedState& st,
                    const ControllerFn& controller,
                    const AdversaryFn& adversary, const NoiseFn& noise,
                    EpisodeTrace& trace) {
  const SupervisorSetup& s = rt.supervisor;
  const LinearGaussianGame& game = *s.game;
  const Grid& grid = *s.grid;
  const AbstractModel& model = *s.model;
  const bool tracking = rt.mode != RunMode::kBaseline;

  StepRecord rec;
  rec.step = st.k;
  rec.y = output(game, st.x)(0);
  rec.q = st.q;
  rec.x_hat = st.x_hat;

  if (tracking && st.k > 0) {
    st.c1 = c1_update(st.c1, model, st.x_hat_prev, st.u_hat_last, st.q_prev);
  }
  rec.c1 = st.c1;

  rec.u_uc = controller(st);
  Decision d;
  switch (rt.mode) {
    case RunMode::kSupervised:
      if (!game.u_bounds.contains(rec.u_uc, kBoxTolerance)) {
        // No companion can match an inadmissible input.
        ++trace.malformed_inputs;
        SupervisorSetup never = s;
        never.eta = -1.0;
        d = decide(never, st.x, st.x_hat, st.q, st.c1, st.k + st.time_offset,
                   rec.u_uc.cwiseMax(game.u_bounds.lower).cwiseMin(game.u_bounds.upper));
        d.verdict = Verdict::kRejectRelation;
        d.e_pv.reset();
      } else {
        d = decide(s, st.x, st.x_hat, st.q, st.c1, st.k + st.time_offset, rec.u_uc);
      }
      break;
    case RunMode::kBaseline:
      if (!game.u_bounds.contains(rec.u_uc, kBoxTolerance)) {
        throw DomainError("unverified input outside U");
      }
      d.verdict = Verdict::kAccept;
      d.u_applied = rec.u_uc;
      break;
    case RunMode::kAdvisorOnly: {
      // Equivalent to a supervisor that rejects every proposal on risk.
      SupervisorSetup never = s;
      never.eta = -1.0;
      const Vector u = rec.u_uc.cwiseMax(game.u_bounds.lower).cwiseMin(game.u_bounds.upper);
      d = decide(never, st.x, st.x_hat, st.q, st.c1, st.k + st.time_offset, u);
      if (d.verdict == Verdict::kAccept) d.verdict = Verdict::kRejectRisk;
      break;
    }
  }
  rec.verdict = d.verdict;
  rec.e_pv = d.e_pv;
  rec.u_applied = d.u_applied;
  rec.latency_us = static_cast<double>(d.elapsed.count()) * 1e-3;
  switch (d.verdict) {
    case Verdict::kAccept:
      ++trace.accepted;
      break;
    case Verdict::kRejectRisk:
      ++trace.rejected_risk;
      break;
    case Verdict::kRejectRelation:
      ++trace.rejected_relation;
      break;
  }
  trace.latency_sum_us += rec.latency_us;
  trace.latency_sq_sum_us += rec.latency_us * rec.latency_us;

  rec.w = adversary(st, d.u_applied);
  if (!game.w_bounds.contains(rec.w, kBoxTolerance)) {
    throw DomainError("adversary input outside W");
  }
  const Vector sample = noise();
  const Vector x_next = step_unchecked(game, st.x, d.u_applied, rec.w, sample);

  if (tracking) {
    const Vector recovered = recover_noise(game, st.x, d.u_applied, rec.w, x_next);
    const std::size_t w_hat = nearest_abstract_adversary(grid, game.w_bounds, rec.w);
    const CellIndex next_hat =
        propagate_abstract(game, grid, st.x_hat, d.u_hat_companion, w_hat, recovered);
    st.x_hat_prev = st.x_hat;
    st.q_prev = st.q;
    st.x_hat = next_hat;
    if (next_hat == grid.sink()) {
      if (!st.relation_lost) trace.entered_sink = true;
      st.relation_lost = true;
    } else if (!check_relation_membership(*s.relation, x_next,
                                          grid.states.center(next_hat))) {
      ++trace.relation_violations;
      st.relation_lost = true;
    }
  }
  st.u_hat_last = d.u_hat_companion;
  st.w_last = rec.w;
  st.x = x_next;
  st.q = model.dfa.step(st.q, rt.labelling->label(output(game, x_next)(0)));
  ++st.k;
  return rec;
}

EpisodeTrace run_episode(const Runtime& rt, const Vector& x0,
                         const ControllerFn& controller,
                         const AdversaryFn& adversary, const NoiseFn& noise,
                         std::uint64_t seed, const EpisodeOptions& options) {
  const int table_h = rt.supervisor.tables->horizon();
  const int horizon = options.horizon < 0 ? table_h : options.horizon;
  if (horizon > table_h) {
    throw HorizonExceeded("episode horizon exceeds the synthesized horizon");
  }
  EpisodeTrace trace;
  trace.seed = seed;
  if (horizon == 0) return trace;
  AugmentedState st = init_augmented(rt, x0);
  st.time_offset = table_h - horizon;
  const Dfa& dfa = rt.supervisor.model->dfa;
  if (dfa.is_accepting(st.q)) {
    trace.violated = true;
    trace.violation_step = 0;
    return trace;
  }
  if (options.record_steps) trace.steps.reserve(static_cast<std::size_t>(horizon));
  while (st.k < horizon) {
    StepRecord rec = run_step(rt, st, controller, adversary, noise, trace);
    ++trace.length;
    if (options.record_steps) trace.steps.push_back(std::move(rec));
    if (dfa.is_accepting(st.q)) {
      trace.violated = true;
      trace.violation_step = st.k;
      break;
    }
  }
  return trace;
}

NoiseFn gaussian_noise(std::uint64_t seed, Eigen::Index dim) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  auto normal = std::make_shared<std::normal_distribution<double>>(0.0, 1.0);
  return [rng, normal, dim]() {
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = (*normal)(*rng);
    return v;
  };
}

namespace {

void write_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) os << ' ';
    os << v[i];
  }
}

}  // namespace

void write_trace_csv(const EpisodeTrace& trace, const Dfa& dfa,
                     std::ostream& os) {
  os << "step,y,q,verdict,e_pv,latency_us,u_uc,u_applied,w\n";
  os << std::setprecision(17);
  for (const StepRecord& r : trace.steps) {
    os << r.step << ',' << r.y << ',' << dfa.state_name(r.q) << ','
       << verdict_name(r.verdict) << ',';
    if (r.e_pv) os << *r.e_pv;
    os << ',' << r.latency_us << ',';
    write_vector(os, r.u_uc);
    os << ',';
    write_vector(os, r.u_applied);
    os << ',';
    write_vector(os, r.w);
    os << '\n';
  }
}

}  // namespace safevisor

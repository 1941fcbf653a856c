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


#include "safevisor/relation.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "safevisor/error.hpp"

namespace safevisor {

std::optional<CellIndex> find_related_cell(const Grid& grid,
                                           const RelationParams& relation,
                                           const Vector& x) {
  const UniformGrid& g = grid.states;
  const auto home = g.locate(x);
  if (!home) return std::nullopt;
  if (check_relation_membership(relation, x, g.center(*home))) return home;

  const std::vector<int> base = g.unravel(*home);
  const std::size_t s = base.size();
  std::optional<CellIndex> best;
  double best_dist = 0.0;
  std::vector<int> offset(s, -1);
  while (true) {
    std::vector<int> c(s);
    bool inside = true;
    for (std::size_t d = 0; d < s; ++d) {
      c[d] = base[d] + offset[d];
      if (c[d] < 0 || c[d] >= g.counts()[d]) inside = false;
    }
    if (inside) {
      const CellIndex cell = g.ravel(c);
      const Vector rep = g.center(cell);
      if (check_relation_membership(relation, x, rep)) {
        const double dist = m_norm(relation.M, x - rep);
        if (!best || dist < best_dist || (dist == best_dist && cell < *best)) {
          best = cell;
          best_dist = dist;
        }
      }
    }
    std::size_t d = s;
    bool done = true;
    while (d > 0) {
      --d;
      if (++offset[d] <= 1) {
        done = false;
        break;
      }
      offset[d] = -1;
    }
    if (done) break;
  }
  return best;
}

RelationReport verify_relation_empirically(const LinearGaussianGame& game,
                                           const Grid& grid,
                                           const RelationParams& relation,
                                           std::size_t sample_count,
                                           std::uint64_t seed) {
  RelationReport report;
  report.required = 1.0 - relation.delta;
  if (sample_count == 0) return report;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> cell_dist(0, grid.num_cells() - 1);
  std::uniform_int_distribution<std::size_t> u_dist(0, grid.u_hat.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index s = game.state_dim();

  // e = ε L⁻ᵀ z with M = L Lᵀ and z uniform in the unit ball gives
  // ‖e‖_M = ε ‖z‖.
  const Eigen::LLT<Matrix> llt(relation.M);
  const Matrix L = llt.matrixL();
  const Matrix LinvT = L.transpose().inverse();

  std::size_t related = 0;
  while (report.samples < sample_count) {
    const CellIndex cell = static_cast<CellIndex>(cell_dist(rng));
    const Vector rep = grid.states.center(cell);
    Vector z(s);
    for (Eigen::Index i = 0; i < s; ++i) z[i] = normal(rng);
    z *= std::pow(unit(rng), 1.0 / static_cast<double>(s)) / z.norm();
    const Vector x = rep + relation.eps * (LinvT * z);
    if (!game.x_bounds.contains(x)) continue;

    const Vector& u_hat = grid.u_hat[u_dist(rng)];
    Vector w(game.adversary_dim());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w[i] = game.w_bounds.lower[i] +
             unit(rng) * (game.w_bounds.upper[i] - game.w_bounds.lower[i]);
    }
    Vector noise(game.R_noise.cols());
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = normal(rng);
    ++report.samples;

    Vector u;
    try {
      u = refine(relation, game.u_bounds, x, rep, u_hat);
    } catch (const InterfaceInfeasible&) {
      ++report.interface_infeasible;
      continue;
    }
    const Vector& w_hat = grid.w_hat[nearest_abstract_adversary(grid, game.w_bounds, w)];
    const Vector x_next = step_unchecked(game, x, u, w, noise);
    const Vector mean_hat = step_unchecked(game, rep, u_hat, w_hat, noise);
    if (!grid.states.locate(mean_hat)) ++report.left_domain;
    const Vector rep_next = grid.states.lattice_center(mean_hat);
    const double dist = m_norm(relation.M, x_next - rep_next);
    report.max_distance = std::max(report.max_distance, dist);
    if (check_relation_membership(relation, x_next, rep_next)) {
      ++related;
    } else {
      ++report.violations;
    }
  }
  report.frequency = static_cast<double>(related) / report.samples;
  return report;
}

}  // namespace safevisor

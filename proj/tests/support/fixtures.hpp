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

#ifndef SAFEVISOR_TESTS_SUPPORT_FIXTURES_HPP_
#define SAFEVISOR_TESTS_SUPPORT_FIXTURES_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "safevisor/abstraction.hpp"
#include "safevisor/advisor.hpp"
#include "safevisor/config.hpp"
#include "safevisor/oracle.hpp"

namespace safevisor::testing {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(SAFEVISOR_SOURCE_DIR) / rel;
}

inline ExperimentConfig quadrotor_e_config() {
  return load_config(source_path("configs/quadrotor_e.json"));
}

inline ExperimentConfig quadrotor_n_config() {
  return load_config(source_path("configs/quadrotor_n.json"));
}

inline FiniteInstance toy(const std::string& name) {
  return load_finite_instance(source_path("data/toy/" + name + ".json"));
}

inline FiniteInstance instance_from_json(const std::string& text) {
  return parse_finite_instance(text, source_path("data/toy"));
}

// Two cells; cell 1 sits 0.05 below the unsafe threshold so that an
// inflation of 0.1 makes both automaton successors possible there.
inline const char* kLiftedInstance = R"({
  "name": "lifted",
  "outputs": [0.0, 0.45],
  "num_u": 2, "num_w": 2,
  "kernel": [
    [[[[0, 0.9], [1, 0.1]], [[0, 0.6], [1, 0.4]]],
     [[[0, 0.5], [1, 0.5]], [[0, 0.7], [1, 0.3]]]],
    [[[[0, 0.8], [1, 0.2]], [[1, 1.0]]],
     [[[0, 0.3], [1, 0.6]], [[0, 0.5]]]]
  ],
  "dfa": "states q0 q1\ninitial q0\naccepting q1\nlabel ok (-inf, 0.5]\nlabel bad (0.5, inf)\ntrans q0 ok q0\ntrans q0 bad q1\ntrans q1 ok q1\ntrans q1 bad q1\n",
  "eps": 0.1, "delta": 0.02, "horizon": 5, "x0": 0
})";

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Matrix paper_m() {
  Matrix m(2, 2);
  m << 1.4632, 0.1757, 0.1757, 0.0666;
  return m;
}

// Standard normal CDF from the error function.
inline double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Minimax DP written directly against the instance data: kernel rows,
// DFA transitions and the labelling. It does not use EpsilonLift or the
// value-iteration code. V_n over (cell incl. SINK, q), n = 0..H.
struct DirectDp {
  std::vector<std::vector<double>> v;  // v[n][x * Q + q]
  std::vector<std::vector<std::size_t>> u;  // u[n-1][x * Q + q], argmin
};

inline DirectDp direct_dp(const FiniteInstance& inst, int horizon) {
  const auto& m = inst.model;
  const std::size_t nx = m.num_cells();
  const int nq = m.num_q();
  const std::size_t nu = m.kernel.num_u();
  const std::size_t nw = m.kernel.num_w();
  auto bad = [&](int q) { return m.dfa.is_accepting(q); };
  // Possible successor automaton states after observing cell c from q.
  auto succ = [&](int q, std::size_t c) {
    std::vector<int> out;
    for (int l : inst.labelling.labels_within(inst.outputs[c], inst.eps)) {
      const int q2 = m.dfa.step(q, l);
      if (std::find(out.begin(), out.end(), q2) == out.end()) out.push_back(q2);
    }
    return out;
  };
  DirectDp dp;
  dp.v.assign(horizon + 1, std::vector<double>((nx + 1) * nq, 0.0));
  dp.u.assign(horizon, std::vector<std::size_t>((nx + 1) * nq, 0));
  for (std::size_t x = 0; x <= nx; ++x) {
    for (int q = 0; q < nq; ++q) {
      dp.v[0][x * nq + q] = (bad(q) || x == nx) ? 1.0 : 0.0;
    }
  }
  for (int n = 1; n <= horizon; ++n) {
    const auto& prev = dp.v[n - 1];
    for (std::size_t x = 0; x <= nx; ++x) {
      for (int q = 0; q < nq; ++q) {
        const std::size_t s = x * nq + q;
        if (bad(q) || x == nx) {
          dp.v[n][s] = 1.0;
          continue;
        }
        double best = 2.0;
        for (std::size_t u = 0; u < nu; ++u) {
          double worst = -1.0;
          for (std::size_t w = 0; w < nw; ++w) {
            const std::size_t row = m.kernel.row_index(static_cast<CellIndex>(x), u, w);
            const std::vector<double> dense = m.kernel.dense_row(row);
            double acc = 0.0;
            for (std::size_t c = 0; c < nx; ++c) {
              const double p = dense[c];
              if (p == 0.0) continue;
              double lv = 0.0;
              for (int q2 : succ(q, c)) lv = std::max(lv, prev[c * nq + q2]);
              acc += p * lv;
            }
            acc += dense[nx];
            worst = std::max(worst, (1.0 - m.delta) * acc + m.delta);
          }
          if (worst < best) {
            best = worst;
            dp.u[n - 1][s] = u;
          }
        }
        dp.v[n][s] = best;
      }
    }
  }
  return dp;
}

// Successor distribution of x̂ under (û, ŵ) by direct 2-D integration of
// the Gaussian density N(A x̂ + B û + D ŵ, R Rᵀ) over each cell with a
// composite Simpson rule. Cells farther than 12σ from the mean on either
// axis get 0. SINK (last entry) is 1 minus the in-domain total.
inline std::vector<double> integrate_row(const LinearGaussianGame& game,
                                         const Grid& grid, CellIndex x_hat,
                                         std::size_t u_hat, std::size_t w_hat,
                                         int panels = 64) {
  const UniformGrid& g = grid.states;
  const Vector mean = game.A * g.center(x_hat) + game.B * grid.u_hat[u_hat] +
                      game.D * grid.w_hat[w_hat];
  const Matrix cov = game.R_noise * game.R_noise.transpose();
  const Matrix prec = cov.inverse();
  const double norm = 1.0 / (2.0 * M_PI * std::sqrt(cov.determinant()));
  const double sx = std::sqrt(cov(0, 0));
  const double sy = std::sqrt(cov(1, 1));
  const Vector h = g.cell_width();
  std::vector<double> row(g.num_cells() + 1, 0.0);
  std::vector<double> wts(panels + 1);
  for (int i = 0; i <= panels; ++i) {
    wts[i] = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  }
  double total = 0.0;
  for (CellIndex c = 0; c < g.num_cells(); ++c) {
    const Vector ctr = g.center(c);
    if (std::abs(ctr[0] - mean[0]) > 12 * sx + h[0] ||
        std::abs(ctr[1] - mean[1]) > 12 * sy + h[1]) {
      continue;
    }
    const double x0 = ctr[0] - h[0] / 2, y0 = ctr[1] - h[1] / 2;
    const double dx = h[0] / panels, dy = h[1] / panels;
    double acc = 0.0;
    for (int i = 0; i <= panels; ++i) {
      for (int j = 0; j <= panels; ++j) {
        const double ex = x0 + i * dx - mean[0];
        const double ey = y0 + j * dy - mean[1];
        const double q = prec(0, 0) * ex * ex + 2 * prec(0, 1) * ex * ey +
                         prec(1, 1) * ey * ey;
        acc += wts[i] * wts[j] * std::exp(-0.5 * q);
      }
    }
    row[c] = acc * norm * dx * dy / 9.0;
    total += row[c];
  }
  row.back() = std::max(0.0, 1.0 - total);
  return row;
}

}  // namespace safevisor::testing

#endif  // SAFEVISOR_TESTS_SUPPORT_FIXTURES_HPP_

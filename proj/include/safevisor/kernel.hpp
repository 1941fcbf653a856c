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

#ifndef SAFEVISOR_KERNEL_HPP_
#define SAFEVISOR_KERNEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "safevisor/abstraction.hpp"
#include "safevisor/game.hpp"

namespace safevisor {

// Marginal probabilities below this are dropped; their mass is moved to SINK.
inline constexpr double kMarginalCutoff = 1e-16;

// Probabilities of consecutive cells first, first+1, ... along one axis.
struct Marginal {
  int first = 0;
  std::vector<double> probs;

  double total() const;
};

struct SparseRow {
  std::vector<CellIndex> cells;
  std::vector<double> probs;
};

// Abstract transition tensor T̂(x̂' | x̂, û, ŵ) over the grid cells plus an
// absorbing SINK that collects all mass leaving X. Rows are addressed by
// row_index(x̂, û, ŵ). Two storage layouts:
//
//  * separable: for diagonal noise covariance each row is the outer product
//    of one Marginal per state dimension (shared through per-axis pools);
//  * sparse: explicit (cell, probability) lists, used for correlated noise,
//    hand-written finite games and kernels read back from disk.
class AbstractKernel {
 public:
  AbstractKernel() = default;

  static AbstractKernel separable(std::vector<int> axis_counts,
                                  std::size_t num_u, std::size_t num_w,
                                  std::vector<std::vector<Marginal>> pools,
                                  std::vector<std::uint32_t> row_marginals);
  // SINK mass of each row is 1 - sum(probs), clamped at zero.
  static AbstractKernel sparse(std::size_t num_states, std::size_t num_u,
                               std::size_t num_w, std::vector<SparseRow> rows);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_u() const { return num_u_; }
  std::size_t num_w() const { return num_w_; }
  std::size_t num_rows() const { return num_states_ * num_u_ * num_w_; }
  bool is_separable() const { return separable_; }

  std::size_t row_index(CellIndex x, std::size_t u, std::size_t w) const {
    return (static_cast<std::size_t>(x) * num_u_ + u) * num_w_ + w;
  }

  double sink_mass(std::size_t row) const { return sink_[row]; }

  // Σ_{x'} T̂(x' | row) values[x'] over grid cells (SINK excluded).
  double expect(std::size_t row, std::span<const double> values) const;

  // Calls f(cell, probability) for every stored nonzero grid entry.
  template <typename F>
  void for_each(std::size_t row, F&& f) const;

  // Dense distribution of length num_states() + 1, SINK last.
  std::vector<double> dense_row(std::size_t row) const;

  std::size_t memory_bytes() const;

 private:
  double expect_separable(std::size_t row, const double* values) const;

  bool separable_ = false;
  std::size_t num_states_ = 0;
  std::size_t num_u_ = 0;
  std::size_t num_w_ = 0;
  std::vector<double> sink_;

  // separable layout
  std::vector<int> axis_counts_;
  std::vector<std::vector<Marginal>> pools_;
  std::vector<std::uint32_t> row_marginals_;  // num_rows x dims

  // sparse layout (CSR)
  std::vector<std::size_t> offsets_;
  std::vector<CellIndex> cells_;
  std::vector<double> probs_;
};

struct KernelOptions {
  // Refuse to build when the in-memory estimate exceeds this many bytes.
  std::size_t memory_cap_bytes = std::size_t{4} << 30;
  // Number of Gauss-Legendre nodes per axis for correlated noise.
  int quadrature_nodes = 24;
};

// Distribution of the successor cell of x̂ under (û, ŵ):
// P{A x̂ + B û + D ŵ + R ς ∈ cell} for ς standard normal, SINK last.
std::vector<double> abstract_transition_row(const LinearGaussianGame& game,
                                            const Grid& grid, CellIndex x_hat,
                                            std::size_t u_hat,
                                            std::size_t w_hat,
                                            const KernelOptions& options = {});

AbstractKernel build_kernel(const LinearGaussianGame& game, const Grid& grid,
                            const KernelOptions& options = {});

// Rough size of the in-memory kernel for the given game and grid.
std::size_t estimate_kernel_bytes(const LinearGaussianGame& game,
                                  const Grid& grid);

// True when R Rᵀ is diagonal, allowing the per-axis CDF product.
bool has_diagonal_noise(const LinearGaussianGame& game);

// Standard normal probability of the interval [a, b], accurate in both tails.
double normal_interval_probability(double a, double b);

template <typename F>
void AbstractKernel::for_each(std::size_t row, F&& f) const {
  if (!separable_) {
    for (std::size_t i = offsets_[row]; i < offsets_[row + 1]; ++i) {
      f(cells_[i], probs_[i]);
    }
    return;
  }
  const std::size_t dims = axis_counts_.size();
  std::vector<const Marginal*> m(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    m[d] = &pools_[d][row_marginals_[row * dims + d]];
  }
  std::vector<std::size_t> pos(dims, 0);
  for (std::size_t d = 0; d < dims; ++d) {
    if (m[d]->probs.empty()) return;
  }
  while (true) {
    double p = 1.0;
    std::size_t cell = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      p *= m[d]->probs[pos[d]];
      cell = cell * static_cast<std::size_t>(axis_counts_[d]) +
             static_cast<std::size_t>(m[d]->first) + pos[d];
    }
    f(static_cast<CellIndex>(cell), p);
    std::size_t d = dims;
    while (d > 0) {
      --d;
      if (++pos[d] < m[d]->probs.size()) break;
      pos[d] = 0;
      if (d == 0) return;
    }
  }
}

}  // namespace safevisor

#endif  // SAFEVISOR_KERNEL_HPP_

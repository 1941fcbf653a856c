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

#ifndef SAFEVISOR_ABSTRACTION_HPP_
#define SAFEVISOR_ABSTRACTION_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "safevisor/automata.hpp"
#include "safevisor/game.hpp"

namespace safevisor {

using CellIndex = std::uint32_t;

// Uniform rectangular grid over a box. Cells are indexed row-major with the
// last coordinate varying fastest; the representative point of a cell is its
// center.
class UniformGrid {
 public:
  UniformGrid() = default;
  // `counts[i]` cells along dimension i.
  UniformGrid(Box box, std::vector<int> counts);
  // Cell sizes must divide the box widths to within 1e-9 (ConfigError).
  static UniformGrid from_cell_sizes(const Box& box, const Vector& sizes);

  Eigen::Index dim() const { return box_.dim(); }
  std::size_t num_cells() const { return num_cells_; }
  const Box& box() const { return box_; }
  const std::vector<int>& counts() const { return counts_; }
  const Vector& cell_width() const { return width_; }
  Vector half_width() const { return 0.5 * width_; }

  Vector center(CellIndex cell) const;
  std::vector<int> unravel(CellIndex cell) const;
  CellIndex ravel(const std::vector<int>& coords) const;

  // Cell containing x. Points on a shared face go to the lower-index cell.
  // Empty if x lies outside the box.
  std::optional<CellIndex> locate(const Vector& x) const;

  // Per-dimension coordinate of the cell containing `value`, on the infinite
  // lattice extending this grid (no bounds check). Same face rule.
  long lattice_coord(Eigen::Index dim, double value) const;
  // Center of the lattice cell containing x; defined everywhere.
  Vector lattice_center(const Vector& x) const;

 private:
  Box box_;
  std::vector<int> counts_;
  Vector width_;
  std::size_t num_cells_ = 0;
};

// Gridded state space plus the finite abstract input sets.
struct Grid {
  UniformGrid states;
  UniformGrid u_grid;
  UniformGrid w_grid;
  std::vector<Vector> u_hat;  // Player-I abstract inputs
  std::vector<Vector> w_hat;  // Player-II abstract inputs (w_grid centers)

  std::size_t num_cells() const { return states.num_cells(); }
  // Index of the SINK pseudo-state (one past the last cell).
  CellIndex sink() const { return static_cast<CellIndex>(num_cells()); }
};

struct GridSpec {
  Vector cell_sizes;
  std::vector<int> u_cells;
  std::optional<Box> u_restriction;
  std::vector<int> w_cells;
};

// Builds the state grid and the abstract input sets. Û holds the centers of
// the U-grid lying inside the restriction box, augmented with the restriction
// corners (deduplicated, sorted lexicographically). Ŵ holds all W-grid
// centers.
Grid build_grid(const Box& x_bounds, const Box& u_bounds, const Box& w_bounds,
                const GridSpec& spec);

// Throws DomainError when x is outside X; use UniformGrid::locate for the
// non-throwing form.
CellIndex quantize_state(const Grid& grid, const Vector& x);

// Representative of Ŵ closest to w in the Euclidean norm; lower index on
// ties. Throws DomainError when w is outside W.
std::size_t nearest_abstract_adversary(const Grid& grid, const Box& w_bounds,
                                       const Vector& w);

// (ε,δ)-approximate probabilistic relation
//   R = {(x, x̂) : (x - x̂)ᵀ M (x - x̂) <= ε²}
// together with the interface gain K, the adversary-quantization radius ε̃
// and the margin γ used by the feasibility test.
struct RelationParams {
  Matrix M;
  Matrix K;
  double eps = 0.0;
  double eps_w = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
};

double m_norm(const Matrix& M, const Vector& v);

// max over quantization-box corners of ‖β‖_M plus max over ‖w - ŵ‖ <= ε̃ of
// ‖D (w - ŵ)‖_M.
double compute_gamma(const LinearGaussianGame& game, const Grid& grid,
                     const RelationParams& relation);

// M symmetric positive definite, δ in [0,1), ε, ε̃ >= 0, K shaped m x s,
// configured γ at least the recomputed margin, and every Ŵ cell within ε̃ of
// the points it represents. Throws ConfigError.
void validate_relation(const LinearGaussianGame& game, const Grid& grid,
                       const RelationParams& relation);

bool check_relation_membership(const RelationParams& relation,
                               const Vector& x, const Vector& x_hat);

// Interface u = K (x - x̂) + û. Results within 1e-9 of U are clamped; larger
// excursions throw InterfaceInfeasible.
Vector refine(const RelationParams& relation, const Box& u_bounds,
              const Vector& x, const Vector& x_hat, const Vector& u_hat);

// Per-(DFA state, cell) data derived from the ε-inflated labelling:
//   successors(q, x̂) = Q'_ε(x̂) from q
//   safe(q, x̂)      <=> x̂ ∈ X̂'_{-ε}(q)
class EpsilonLift {
 public:
  EpsilonLift() = default;
  EpsilonLift(const Dfa& dfa, const IntervalLabelling& labelling,
              const std::vector<double>& outputs, double eps);

  int num_states() const { return num_q_; }
  std::size_t num_cells() const { return num_cells_; }
  BitSet successors(int q, CellIndex cell) const {
    return successors_[static_cast<std::size_t>(q) * num_cells_ + cell];
  }
  // 1.0 on safe cells, 0.0 elsewhere; sized num_cells.
  const std::vector<double>& safe_indicator(int q) const {
    return safe_[static_cast<std::size_t>(q)];
  }
  std::vector<CellIndex> safe_cells(int q) const;

 private:
  int num_q_ = 0;
  std::size_t num_cells_ = 0;
  std::vector<BitSet> successors_;
  std::vector<std::vector<double>> safe_;
};

// X̂'_{-ε}(q) as a sorted index list (empty for accepting q).
std::vector<CellIndex> safe_abstract_states(const Grid& grid,
                                            const LinearGaussianGame& game,
                                            const SafetySpec& spec,
                                            const RelationParams& relation,
                                            int q);

// Scalar outputs ĥ(x̂) = C · center(x̂) for every cell.
std::vector<double> cell_outputs(const Grid& grid,
                                 const LinearGaussianGame& game);

}  // namespace safevisor

#endif  // SAFEVISOR_ABSTRACTION_HPP_

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

#include "safevisor/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "safevisor/error.hpp"

namespace safevisor {

namespace {

// Lattice coordinates closer than this (in cell units) to a face are treated
// as lying on the face.
constexpr double kFaceSnap = 1e-9;

}  // namespace

UniformGrid::UniformGrid(Box box, std::vector<int> counts)
    : box_(std::move(box)), counts_(std::move(counts)) {
  if (static_cast<Eigen::Index>(counts_.size()) != box_.dim() ||
      box_.upper.size() != box_.dim()) {
    throw ConfigError("grid counts do not match box dimension");
  }
  width_.resize(box_.dim());
  num_cells_ = 1;
  for (Eigen::Index d = 0; d < box_.dim(); ++d) {
    if (counts_[d] < 1) throw ConfigError("grid needs at least one cell per axis");
    if (!(box_.upper[d] > box_.lower[d])) {
      throw ConfigError("grid box must have positive width");
    }
    width_[d] = (box_.upper[d] - box_.lower[d]) / counts_[d];
    num_cells_ *= static_cast<std::size_t>(counts_[d]);
  }
  if (num_cells_ >= std::numeric_limits<CellIndex>::max()) {
    throw CapacityError("grid has too many cells for 32-bit indices");
  }
}

UniformGrid UniformGrid::from_cell_sizes(const Box& box, const Vector& sizes) {
  if (sizes.size() != box.dim()) {
    throw ConfigError("cell size dimension does not match box");
  }
  std::vector<int> counts(box.dim());
  for (Eigen::Index d = 0; d < box.dim(); ++d) {
    const double ratio = (box.upper[d] - box.lower[d]) / sizes[d];
    const double n = std::round(ratio);
    if (!(sizes[d] > 0) || n < 1 || std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) {
      std::ostringstream os;
      os << "cell size " << sizes[d] << " does not divide box width "
         << box.upper[d] - box.lower[d] << " on axis " << d;
      throw ConfigError(os.str());
    }
    counts[d] = static_cast<int>(n);
  }
  return UniformGrid(box, counts);
}

std::vector<int> UniformGrid::unravel(CellIndex cell) const {
  std::vector<int> coords(counts_.size());
  std::size_t rest = cell;
  for (std::size_t d = counts_.size(); d-- > 0;) {
    coords[d] = static_cast<int>(rest % counts_[d]);
    rest /= counts_[d];
  }
  return coords;
}

CellIndex UniformGrid::ravel(const std::vector<int>& coords) const {
  std::size_t cell = 0;
  for (std::size_t d = 0; d < counts_.size(); ++d) {
    cell = cell * counts_[d] + coords[d];
  }
  return static_cast<CellIndex>(cell);
}

Vector UniformGrid::center(CellIndex cell) const {
  const auto coords = unravel(cell);
  Vector c(dim());
  for (Eigen::Index d = 0; d < dim(); ++d) {
    c[d] = box_.lower[d] + (coords[d] + 0.5) * width_[d];
  }
  return c;
}

long UniformGrid::lattice_coord(Eigen::Index d, double value) const {
  const double r = (value - box_.lower[d]) / width_[d];
  const double n = std::round(r);
  if (std::abs(r - n) <= kFaceSnap) return static_cast<long>(n) - 1;
  return static_cast<long>(std::floor(r));
}

Vector UniformGrid::lattice_center(const Vector& x) const {
  Vector c(dim());
  for (Eigen::Index d = 0; d < dim(); ++d) {
    c[d] = box_.lower[d] + (lattice_coord(d, x[d]) + 0.5) * width_[d];
  }
  return c;
}

std::optional<CellIndex> UniformGrid::locate(const Vector& x) const {
  if (x.size() != dim()) return std::nullopt;
  std::vector<int> coords(counts_.size());
  for (Eigen::Index d = 0; d < dim(); ++d) {
    if (!std::isfinite(x[d])) return std::nullopt;
    long c = lattice_coord(d, x[d]);
    // The lower face of the box belongs to the first cell.
    if (c == -1 && std::abs((x[d] - box_.lower[d]) / width_[d]) <= kFaceSnap) {
      c = 0;
    }
    if (c < 0 || c >= counts_[d]) return std::nullopt;
    coords[d] = static_cast<int>(c);
  }
  return ravel(coords);
}

namespace {

bool lex_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

}  // namespace

Grid build_grid(const Box& x_bounds, const Box& u_bounds, const Box& w_bounds,
                const GridSpec& spec) {
  Grid grid;
  grid.states = UniformGrid::from_cell_sizes(x_bounds, spec.cell_sizes);
  grid.u_grid = UniformGrid(u_bounds, spec.u_cells);
  grid.w_grid = UniformGrid(w_bounds, spec.w_cells);

  const Box restriction = spec.u_restriction.value_or(u_bounds);
  if (restriction.dim() != u_bounds.dim()) {
    throw ConfigError("input restriction dimension mismatch");
  }
  if (!u_bounds.contains(restriction.lower, 1e-9) ||
      !u_bounds.contains(restriction.upper, 1e-9)) {
    throw ConfigError("input restriction must lie inside U");
  }
  std::vector<Vector> u_hat;
  for (CellIndex c = 0; c < grid.u_grid.num_cells(); ++c) {
    Vector v = grid.u_grid.center(c);
    if (restriction.contains(v, 1e-9)) u_hat.push_back(v);
  }
  if (spec.u_restriction) {
    const Eigen::Index m = restriction.dim();
    for (long mask = 0; mask < (1L << m); ++mask) {
      Vector corner(m);
      for (Eigen::Index d = 0; d < m; ++d) {
        corner[d] = ((mask >> d) & 1) ? restriction.upper[d]
                                      : restriction.lower[d];
      }
      const bool present = std::any_of(u_hat.begin(), u_hat.end(), [&](const Vector& v) {
        return (v - corner).cwiseAbs().maxCoeff() <= 1e-9;
      });
      if (!present) u_hat.push_back(corner);
    }
  }
  std::sort(u_hat.begin(), u_hat.end(), lex_less);
  grid.u_hat = std::move(u_hat);

  for (CellIndex c = 0; c < grid.w_grid.num_cells(); ++c) {
    grid.w_hat.push_back(grid.w_grid.center(c));
  }
  return grid;
}

CellIndex quantize_state(const Grid& grid, const Vector& x) {
  auto cell = grid.states.locate(x);
  if (!cell) throw DomainError("state outside the gridded domain X");
  return *cell;
}

std::size_t nearest_abstract_adversary(const Grid& grid, const Box& w_bounds,
                                       const Vector& w) {
  if (!w_bounds.contains(w, kBoxTolerance)) {
    throw DomainError("adversary input outside W");
  }
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.w_hat.size(); ++i) {
    const double d = (w - grid.w_hat[i]).norm();
    if (d < best_d - 1e-12) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double m_norm(const Matrix& M, const Vector& v) {
  const double q = v.dot(M * v);
  return std::sqrt(std::max(q, 0.0));
}

double compute_gamma(const LinearGaussianGame& game, const Grid& grid,
                     const RelationParams& relation) {
  const Vector half = grid.states.half_width();
  const Eigen::Index s = half.size();
  double corner_max = 0.0;
  for (long mask = 0; mask < (1L << s); ++mask) {
    Vector beta(s);
    for (Eigen::Index d = 0; d < s; ++d) {
      beta[d] = ((mask >> d) & 1) ? half[d] : -half[d];
    }
    corner_max = std::max(corner_max, m_norm(relation.M, beta));
  }
  // max_{‖v‖<=ε̃} ‖D v‖_M = ε̃ sqrt(λ_max(Dᵀ M D)).
  const Matrix G = game.D.transpose() * relation.M * game.D;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (G + G.transpose()));
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
  return corner_max + relation.eps_w * std::sqrt(lmax);
}

void validate_relation(const LinearGaussianGame& game, const Grid& grid,
                       const RelationParams& relation) {
  const Eigen::Index s = game.state_dim();
  if (relation.M.rows() != s || relation.M.cols() != s) {
    throw ConfigError("relation metric M must be s x s");
  }
  if (!relation.M.isApprox(relation.M.transpose(), 1e-12)) {
    throw ConfigError("relation metric M must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(relation.M);
  if (!(es.eigenvalues().minCoeff() > 0.0)) {
    throw ConfigError("relation metric M must be positive definite");
  }
  if (relation.K.rows() != game.input_dim() || relation.K.cols() != s) {
    throw ConfigError("interface gain K must be m x s");
  }
  if (!(relation.eps >= 0) || !(relation.eps_w >= 0) || !(relation.gamma >= 0)) {
    throw ConfigError("eps, eps_w and gamma must be nonnegative");
  }
  if (!(relation.delta >= 0 && relation.delta < 1)) {
    throw ConfigError("delta must lie in [0, 1)");
  }
  const double gamma = compute_gamma(game, grid, relation);
  if (relation.gamma < gamma - 1e-12) {
    std::ostringstream os;
    os << "configured gamma " << relation.gamma
       << " is below the recomputed margin " << gamma;
    throw ConfigError(os.str());
  }
  const double w_quant = grid.w_grid.half_width().norm();
  if (w_quant > relation.eps_w + 1e-12) {
    std::ostringstream os;
    os << "adversary grid quantization " << w_quant << " exceeds eps_w "
       << relation.eps_w;
    throw ConfigError(os.str());
  }
}

bool check_relation_membership(const RelationParams& relation,
                               const Vector& x, const Vector& x_hat) {
  const Vector e = x - x_hat;
  return e.dot(relation.M * e) <= relation.eps * relation.eps + 1e-12;
}

Vector refine(const RelationParams& relation, const Box& u_bounds,
              const Vector& x, const Vector& x_hat, const Vector& u_hat) {
  Vector u = relation.K * (x - x_hat) + u_hat;
  const Eigen::Index bad = u_bounds.first_violation(u, 1e-9);
  if (bad >= 0) {
    std::ostringstream os;
    os << "refined input u[" << bad << "] = " << u[bad] << " outside ["
       << u_bounds.lower[bad] << ", " << u_bounds.upper[bad] << "]";
    throw InterfaceInfeasible(os.str());
  }
  return u.cwiseMax(u_bounds.lower).cwiseMin(u_bounds.upper);
}

EpsilonLift::EpsilonLift(const Dfa& dfa, const IntervalLabelling& labelling,
                         const std::vector<double>& outputs, double eps)
    : num_q_(dfa.num_states()), num_cells_(outputs.size()) {
  check_compatible(dfa, labelling);
  successors_.resize(static_cast<std::size_t>(num_q_) * num_cells_);
  safe_.assign(num_q_, std::vector<double>(num_cells_, 0.0));
  std::vector<BitSet> labels(num_cells_);
  for (std::size_t c = 0; c < num_cells_; ++c) {
    labels[c] = labelling.labels_within_mask(outputs[c], eps);
  }
  const BitSet bad = dfa.accepting_mask();
  for (int q = 0; q < num_q_; ++q) {
    for (std::size_t c = 0; c < num_cells_; ++c) {
      BitSet next = 0;
      for (int l : bits_to_indices(labels[c])) next |= BitSet{1} << dfa.step(q, l);
      successors_[q * num_cells_ + c] = next;
      if (!dfa.is_accepting(q) && (next & bad) == 0) safe_[q][c] = 1.0;
    }
  }
}

std::vector<CellIndex> EpsilonLift::safe_cells(int q) const {
  std::vector<CellIndex> out;
  const auto& ind = safe_indicator(q);
  for (std::size_t c = 0; c < ind.size(); ++c) {
    if (ind[c] > 0) out.push_back(static_cast<CellIndex>(c));
  }
  return out;
}

std::vector<double> cell_outputs(const Grid& grid,
                                 const LinearGaussianGame& game) {
  if (game.output_dim() != 1) {
    throw ConfigError("interval labelling requires a scalar output");
  }
  std::vector<double> y(grid.num_cells());
  for (CellIndex c = 0; c < grid.num_cells(); ++c) {
    y[c] = (game.C_out * grid.states.center(c))(0);
  }
  return y;
}

std::vector<CellIndex> safe_abstract_states(const Grid& grid,
                                            const LinearGaussianGame& game,
                                            const SafetySpec& spec,
                                            const RelationParams& relation,
                                            int q) {
  EpsilonLift lift(spec.dfa, spec.labelling, cell_outputs(grid, game),
                   relation.eps);
  return lift.safe_cells(q);
}

}  // namespace safevisor

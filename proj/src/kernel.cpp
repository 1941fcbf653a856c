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

#include "safevisor/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "safevisor/error.hpp"

namespace safevisor {

namespace {

// Gaussian mass beyond this many standard deviations is below the marginal
// cutoff and is never evaluated.
constexpr double kSigmaWindow = 9.0;

}  // namespace

double Marginal::total() const {
  double s = 0.0;
  for (double p : probs) s += p;
  return s;
}

double normal_interval_probability(double a, double b) {
  if (!(b > a)) return 0.0;
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  if (b <= 0.0) {
    return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
  }
  if (a >= 0.0) {
    return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
  }
  return 1.0 - 0.5 * std::erfc(b * kInvSqrt2) - 0.5 * std::erfc(-a * kInvSqrt2);
}

AbstractKernel AbstractKernel::separable(
    std::vector<int> axis_counts, std::size_t num_u, std::size_t num_w,
    std::vector<std::vector<Marginal>> pools,
    std::vector<std::uint32_t> row_marginals) {
  AbstractKernel k;
  k.separable_ = true;
  k.axis_counts_ = std::move(axis_counts);
  k.num_states_ = 1;
  for (int c : k.axis_counts_) k.num_states_ *= static_cast<std::size_t>(c);
  k.num_u_ = num_u;
  k.num_w_ = num_w;
  k.pools_ = std::move(pools);
  k.row_marginals_ = std::move(row_marginals);
  const std::size_t dims = k.axis_counts_.size();
  if (k.pools_.size() != dims || k.row_marginals_.size() != k.num_rows() * dims) {
    throw ConfigError("separable kernel layout mismatch");
  }
  k.sink_.resize(k.num_rows());
  for (std::size_t r = 0; r < k.num_rows(); ++r) {
    double mass = 1.0;
    for (std::size_t d = 0; d < dims; ++d) {
      mass *= k.pools_[d][k.row_marginals_[r * dims + d]].total();
    }
    k.sink_[r] = std::max(0.0, 1.0 - mass);
  }
  return k;
}

AbstractKernel AbstractKernel::sparse(std::size_t num_states,
                                      std::size_t num_u, std::size_t num_w,
                                      std::vector<SparseRow> rows) {
  AbstractKernel k;
  k.separable_ = false;
  k.num_states_ = num_states;
  k.num_u_ = num_u;
  k.num_w_ = num_w;
  if (rows.size() != k.num_rows()) {
    throw ConfigError("sparse kernel row count mismatch");
  }
  k.offsets_.reserve(rows.size() + 1);
  k.offsets_.push_back(0);
  k.sink_.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const SparseRow& row = rows[r];
    if (row.cells.size() != row.probs.size()) {
      throw ConfigError("sparse row cells/probabilities mismatch");
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      if (row.cells[i] >= num_states) throw ConfigError("sparse row cell out of range");
      if (!(row.probs[i] >= 0.0 && row.probs[i] <= 1.0)) {
        throw ConfigError("transition probability outside [0, 1]");
      }
      mass += row.probs[i];
      k.cells_.push_back(row.cells[i]);
      k.probs_.push_back(row.probs[i]);
    }
    if (mass > 1.0 + 1e-9) throw ConfigError("transition row sums above 1");
    k.sink_[r] = std::max(0.0, 1.0 - mass);
    k.offsets_.push_back(k.cells_.size());
  }
  return k;
}

double AbstractKernel::expect_separable(std::size_t row,
                                        const double* values) const {
  const std::size_t dims = axis_counts_.size();
  const std::uint32_t* ids = &row_marginals_[row * dims];
  if (dims == 1) {
    const Marginal& a = pools_[0][ids[0]];
    double s = 0.0;
    const double* v = values + a.first;
    for (std::size_t i = 0; i < a.probs.size(); ++i) s += a.probs[i] * v[i];
    return s;
  }
  if (dims == 2) {
    const Marginal& a = pools_[0][ids[0]];
    const Marginal& b = pools_[1][ids[1]];
    const std::size_t stride = static_cast<std::size_t>(axis_counts_[1]);
    const std::size_t nb = b.probs.size();
    const double* pb = b.probs.data();
    double s = 0.0;
    for (std::size_t i = 0; i < a.probs.size(); ++i) {
      const double* v = values + (a.first + i) * stride + b.first;
      double inner = 0.0;
      for (std::size_t j = 0; j < nb; ++j) inner += pb[j] * v[j];
      s += a.probs[i] * inner;
    }
    return s;
  }
  double s = 0.0;
  for_each(row, [&](CellIndex c, double p) { s += p * values[c]; });
  return s;
}

double AbstractKernel::expect(std::size_t row,
                              std::span<const double> values) const {
  if (separable_) return expect_separable(row, values.data());
  double s = 0.0;
  for (std::size_t i = offsets_[row]; i < offsets_[row + 1]; ++i) {
    s += probs_[i] * values[cells_[i]];
  }
  return s;
}

std::vector<double> AbstractKernel::dense_row(std::size_t row) const {
  std::vector<double> out(num_states_ + 1, 0.0);
  for_each(row, [&](CellIndex c, double p) { out[c] += p; });
  out[num_states_] = sink_[row];
  return out;
}

std::size_t AbstractKernel::memory_bytes() const {
  std::size_t bytes = sink_.size() * sizeof(double) +
                      row_marginals_.size() * sizeof(std::uint32_t) +
                      offsets_.size() * sizeof(std::size_t) +
                      cells_.size() * sizeof(CellIndex) +
                      probs_.size() * sizeof(double);
  for (const auto& pool : pools_) {
    for (const auto& m : pool) bytes += sizeof(Marginal) + m.probs.size() * sizeof(double);
  }
  return bytes;
}

bool has_diagonal_noise(const LinearGaussianGame& game) {
  const Matrix cov = game.R_noise * game.R_noise.transpose();
  const double scale = cov.diagonal().cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < cov.cols(); ++j) {
      if (i != j && std::abs(cov(i, j)) > 1e-14 * scale) return false;
    }
  }
  return true;
}

namespace {

// Truncated marginal of N(mean, sigma²) over the cells of one grid axis.
Marginal axis_marginal(double mean, double sigma, double lower, double width,
                       int count) {
  Marginal m;
  const double lo_cell = std::floor((mean - kSigmaWindow * sigma - lower) / width);
  const double hi_cell = std::floor((mean + kSigmaWindow * sigma - lower) / width);
  const int first = static_cast<int>(std::max(0.0, lo_cell));
  const int last = static_cast<int>(std::min<double>(count - 1, hi_cell));
  if (first > last) return m;
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(last - first + 1));
  for (int i = first; i <= last; ++i) {
    const double a = lower + i * width;
    const double b = (i + 1 == count) ? lower + count * width : lower + (i + 1) * width;
    p.push_back(normal_interval_probability((a - mean) / sigma, (b - mean) / sigma));
  }
  std::size_t lo = 0;
  std::size_t hi = p.size();
  while (lo < hi && p[lo] < kMarginalCutoff) ++lo;
  while (hi > lo && p[hi - 1] < kMarginalCutoff) --hi;
  m.first = first + static_cast<int>(lo);
  m.probs.assign(p.begin() + static_cast<long>(lo), p.begin() + static_cast<long>(hi));
  return m;
}

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) {
          weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
          break;
        }
      }
      nodes[i] = x;
      if (weights[i] == 0.0) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (x * p1 - p0) / (x * x - 1.0);
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
      }
    }
  }
};

// P{mean + L ξ ∈ [lo, hi]} for ξ standard normal and L lower triangular,
// integrating the leading coordinates with composite Gauss-Legendre.
class CorrelatedBoxProbability {
 public:
  CorrelatedBoxProbability(Matrix chol, int nodes)
      : L_(std::move(chol)), rule_(nodes) {}

  double operator()(const Vector& mean, const Vector& lo, const Vector& hi) const {
    Vector xi = Vector::Zero(L_.rows());
    return integrate(0, xi, mean, lo, hi);
  }

 private:
  double integrate(Eigen::Index d, Vector& xi, const Vector& mean,
                   const Vector& lo, const Vector& hi) const {
    double shift = mean[d];
    for (Eigen::Index j = 0; j < d; ++j) shift += L_(d, j) * xi[j];
    double a = (lo[d] - shift) / L_(d, d);
    double b = (hi[d] - shift) / L_(d, d);
    if (d + 1 == L_.rows()) return normal_interval_probability(a, b);
    a = std::max(a, -kSigmaWindow);
    b = std::min(b, kSigmaWindow);
    if (!(b > a)) return 0.0;
    const int panels = std::max(1, static_cast<int>(std::ceil(b - a)));
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double mid = a + (p + 0.5) * h;
      for (std::size_t i = 0; i < rule_.nodes.size(); ++i) {
        const double t = mid + 0.5 * h * rule_.nodes[i];
        xi[d] = t;
        const double pdf = std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
        total += 0.5 * h * rule_.weights[i] * pdf * integrate(d + 1, xi, mean, lo, hi);
      }
    }
    return total;
  }

  Matrix L_;
  GaussLegendre rule_;
};

Vector row_mean(const LinearGaussianGame& game, const Grid& grid, CellIndex x,
                std::size_t u, std::size_t w) {
  return game.A * grid.states.center(x) + game.B * grid.u_hat[u] +
         game.D * grid.w_hat[w];
}

SparseRow correlated_row(const LinearGaussianGame& game, const Grid& grid,
                         const Vector& mean, const CorrelatedBoxProbability& box) {
  const UniformGrid& g = grid.states;
  const Matrix cov = game.R_noise * game.R_noise.transpose();
  const Eigen::Index s = g.dim();
  std::vector<int> first(s);
  std::vector<int> last(s);
  for (Eigen::Index d = 0; d < s; ++d) {
    const double sd = std::sqrt(cov(d, d));
    const double w = g.cell_width()[d];
    const double lo = g.box().lower[d];
    first[d] = static_cast<int>(std::max(0.0, std::floor((mean[d] - kSigmaWindow * sd - lo) / w)));
    last[d] = static_cast<int>(std::min<double>(g.counts()[d] - 1,
                                                std::floor((mean[d] + kSigmaWindow * sd - lo) / w)));
    if (first[d] > last[d]) return {};
  }
  SparseRow row;
  std::vector<int> coords = first;
  Vector lo(s);
  Vector hi(s);
  while (true) {
    for (Eigen::Index d = 0; d < s; ++d) {
      lo[d] = g.box().lower[d] + coords[d] * g.cell_width()[d];
      hi[d] = g.box().lower[d] + (coords[d] + 1) * g.cell_width()[d];
    }
    const double p = box(mean, lo, hi);
    if (p >= kMarginalCutoff) {
      row.cells.push_back(g.ravel(coords));
      row.probs.push_back(p);
    }
    Eigen::Index d = s;
    bool done = true;
    while (d > 0) {
      --d;
      if (++coords[d] <= last[d]) {
        done = false;
        break;
      }
      coords[d] = first[d];
    }
    if (done) break;
  }
  return row;
}

std::vector<Marginal> row_marginals(const LinearGaussianGame& game,
                                    const Grid& grid, const Vector& mean) {
  const UniformGrid& g = grid.states;
  std::vector<Marginal> out;
  for (Eigen::Index d = 0; d < g.dim(); ++d) {
    const double sigma = game.R_noise.row(d).norm();
    out.push_back(axis_marginal(mean[d], sigma, g.box().lower[d],
                                g.cell_width()[d], g.counts()[d]));
  }
  return out;
}

void check_indices(const Grid& grid, CellIndex x, std::size_t u, std::size_t w) {
  if (x >= grid.num_cells() || u >= grid.u_hat.size() || w >= grid.w_hat.size()) {
    throw IndexError("abstract state or input index out of range");
  }
}

}  // namespace

std::vector<double> abstract_transition_row(const LinearGaussianGame& game,
                                            const Grid& grid, CellIndex x_hat,
                                            std::size_t u_hat,
                                            std::size_t w_hat,
                                            const KernelOptions& options) {
  check_indices(grid, x_hat, u_hat, w_hat);
  const std::size_t n = grid.num_cells();
  const Vector mean = row_mean(game, grid, x_hat, u_hat, w_hat);
  std::vector<double> out(n + 1, 0.0);
  if (has_diagonal_noise(game)) {
    const auto margs = row_marginals(game, grid, mean);
    const auto& counts = grid.states.counts();
    double total = 1.0;
    for (const auto& m : margs) total *= m.total();
    // Outer product of the per-axis marginals, last axis fastest.
    std::vector<std::size_t> pos(margs.size(), 0);
    bool empty = false;
    for (const auto& m : margs) empty = empty || m.probs.empty();
    while (!empty) {
      double p = 1.0;
      std::size_t cell = 0;
      for (std::size_t d = 0; d < margs.size(); ++d) {
        p *= margs[d].probs[pos[d]];
        cell = cell * static_cast<std::size_t>(counts[d]) +
               static_cast<std::size_t>(margs[d].first) + pos[d];
      }
      out[cell] = p;
      std::size_t d = margs.size();
      while (d > 0 && ++pos[d - 1] == margs[d - 1].probs.size()) pos[--d] = 0;
      if (d == 0) break;
    }
    out[n] = std::max(0.0, 1.0 - total);
    return out;
  }
  const Matrix cov = game.R_noise * game.R_noise.transpose();
  CorrelatedBoxProbability box(Eigen::LLT<Matrix>(cov).matrixL(), options.quadrature_nodes);
  SparseRow row = correlated_row(game, grid, mean, box);
  double mass = 0.0;
  for (std::size_t i = 0; i < row.cells.size(); ++i) {
    out[row.cells[i]] = row.probs[i];
    mass += row.probs[i];
  }
  out[n] = std::max(0.0, 1.0 - mass);
  return out;
}

std::size_t estimate_kernel_bytes(const LinearGaussianGame& game,
                                  const Grid& grid) {
  const std::size_t rows = grid.num_cells() * grid.u_hat.size() * grid.w_hat.size();
  const Matrix cov = game.R_noise * game.R_noise.transpose();
  const UniformGrid& g = grid.states;
  if (has_diagonal_noise(game)) {
    // Row bookkeeping plus, pessimistically, one private marginal per row and
    // axis.
    std::size_t per_row = sizeof(double);
    for (Eigen::Index d = 0; d < g.dim(); ++d) {
      const double span = 2 * kSigmaWindow * std::sqrt(cov(d, d)) / g.cell_width()[d] + 2;
      const double len = std::min<double>(span, g.counts()[d]);
      per_row += sizeof(std::uint32_t) + sizeof(Marginal) +
                 static_cast<std::size_t>(len) * sizeof(double);
    }
    return rows * per_row;
  }
  double cells = 1.0;
  for (Eigen::Index d = 0; d < g.dim(); ++d) {
    const double span = 2 * kSigmaWindow * std::sqrt(cov(d, d)) / g.cell_width()[d] + 2;
    cells *= std::min<double>(span, g.counts()[d]);
  }
  return rows * static_cast<std::size_t>(sizeof(double) + sizeof(std::size_t) +
                                         cells * (sizeof(double) + sizeof(CellIndex)));
}

AbstractKernel build_kernel(const LinearGaussianGame& game, const Grid& grid,
                            const KernelOptions& options) {
  const std::size_t estimate = estimate_kernel_bytes(game, grid);
  if (estimate > options.memory_cap_bytes) {
    std::ostringstream os;
    os << "kernel for " << grid.num_cells() << " cells x " << grid.u_hat.size()
       << " inputs x " << grid.w_hat.size() << " adversary inputs needs about "
       << estimate / (1024 * 1024) << " MiB, above the cap of "
       << options.memory_cap_bytes / (1024 * 1024) << " MiB";
    throw CapacityError(os.str());
  }
  const std::size_t nu = grid.u_hat.size();
  const std::size_t nw = grid.w_hat.size();
  const std::size_t rows = grid.num_cells() * nu * nw;

  if (has_diagonal_noise(game)) {
    const Eigen::Index dims = grid.states.dim();
    std::vector<std::vector<Marginal>> pools(dims);
    std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> seen(dims);
    std::vector<std::uint32_t> ids(rows * dims);
    std::vector<double> sigma(dims);
    for (Eigen::Index d = 0; d < dims; ++d) sigma[d] = game.R_noise.row(d).norm();
    const UniformGrid& g = grid.states;
    for (CellIndex x = 0; x < grid.num_cells(); ++x) {
      const Vector ax = game.A * g.center(x);
      for (std::size_t u = 0; u < nu; ++u) {
        const Vector axu = ax + game.B * grid.u_hat[u];
        for (std::size_t w = 0; w < nw; ++w) {
          const Vector mean = axu + game.D * grid.w_hat[w];
          const std::size_t row = (static_cast<std::size_t>(x) * nu + u) * nw + w;
          for (Eigen::Index d = 0; d < dims; ++d) {
            const auto key = std::bit_cast<std::uint64_t>(mean[d]);
            auto [it, fresh] = seen[d].try_emplace(
                key, static_cast<std::uint32_t>(pools[d].size()));
            if (fresh) {
              pools[d].push_back(axis_marginal(mean[d], sigma[d], g.box().lower[d],
                                               g.cell_width()[d], g.counts()[d]));
            }
            ids[row * dims + d] = it->second;
          }
        }
      }
    }
    return AbstractKernel::separable(g.counts(), nu, nw, std::move(pools),
                                     std::move(ids));
  }

  const Matrix cov = game.R_noise * game.R_noise.transpose();
  CorrelatedBoxProbability box(Eigen::LLT<Matrix>(cov).matrixL(), options.quadrature_nodes);
  std::vector<SparseRow> sparse_rows(rows);
  for (CellIndex x = 0; x < grid.num_cells(); ++x) {
    for (std::size_t u = 0; u < nu; ++u) {
      for (std::size_t w = 0; w < nw; ++w) {
        const std::size_t row = (static_cast<std::size_t>(x) * nu + u) * nw + w;
        sparse_rows[row] = correlated_row(game, grid, row_mean(game, grid, x, u, w), box);
      }
    }
  }
  return AbstractKernel::sparse(grid.num_cells(), nu, nw, std::move(sparse_rows));
}

}  // namespace safevisor

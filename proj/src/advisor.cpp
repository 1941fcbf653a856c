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


#include "safevisor/advisor.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <limits>
#include <sstream>

#include "safevisor/binary_io.hpp"
#include "safevisor/error.hpp"
#include "safevisor/parallel.hpp"

namespace safevisor {

namespace {

constexpr std::uint32_t kTablesVersion = 1;

}  // namespace

void validate_model(const AbstractModel& model) {
  if (model.kernel.num_states() == 0) throw ConfigError("empty abstraction");
  if (model.kernel.num_u() == 0 || model.kernel.num_w() == 0) {
    throw ConfigError("abstract input sets must be nonempty");
  }
  if (model.lift.num_cells() != model.kernel.num_states() ||
      model.lift.num_states() != model.dfa.num_states()) {
    throw ConfigError("kernel, automaton and labelling lift disagree on sizes");
  }
  if (!(model.delta >= 0.0 && model.delta < 1.0)) {
    throw ConfigError("delta must lie in [0, 1)");
  }
}

ValueTables::ValueTables(std::size_t num_cells, int num_q, std::size_t num_u,
                         int horizon)
    : num_cells_(num_cells), num_q_(num_q), num_u_(num_u), horizon_(horizon) {
  values_.assign(static_cast<std::size_t>(horizon + 1) * num_q * rows(), 0.0);
  policy_.assign(static_cast<std::size_t>(horizon) * num_q * rows(), 0);
}

std::size_t estimate_table_bytes(std::size_t num_cells, int num_q,
                                 int horizon) {
  const std::size_t rows = num_cells + 1;
  return rows * static_cast<std::size_t>(num_q) *
         (static_cast<std::size_t>(horizon + 1) * sizeof(double) +
          static_cast<std::size_t>(horizon) * sizeof(std::uint32_t));
}

void lifted_values(const ValueTables& tables, const AbstractModel& model,
                   int n, int q, std::vector<double>& out) {
  const std::size_t cells = model.num_cells();
  out.resize(cells);
  std::vector<std::span<const double>> slices;
  for (int p = 0; p < model.num_q(); ++p) slices.push_back(tables.slice(n, p));
  for (std::size_t c = 0; c < cells; ++c) {
    BitSet next = model.lift.successors(q, static_cast<CellIndex>(c));
    double best = 0.0;
    while (next) {
      const int p = std::countr_zero(next);
      next &= next - 1;
      best = std::max(best, slices[p][c]);
    }
    out[c] = best;
  }
}

int qbar_star(const ValueTables& tables, const AbstractModel& model, int n,
              CellIndex x_next, int q) {
  if (x_next >= model.num_cells()) return q;
  BitSet next = model.lift.successors(q, x_next);
  int arg = -1;
  double best = -1.0;
  while (next) {
    const int p = std::countr_zero(next);
    next &= next - 1;
    const double v = tables.value(n, x_next, p);
    if (v > best) {
      best = v;
      arg = p;
    }
  }
  return arg < 0 ? q : arg;
}

double worst_case_backup(const AbstractModel& model,
                         std::span<const double> lifted, CellIndex x,
                         std::size_t u) {
  const AbstractKernel& k = model.kernel;
  double worst = 0.0;
  for (std::size_t w = 0; w < k.num_w(); ++w) {
    const std::size_t row = k.row_index(x, u, w);
    worst = std::max(worst, k.expect(row, lifted) + k.sink_mass(row));
  }
  return worst;
}

ValueTables value_iteration(const AbstractModel& model, int horizon,
                            const ValueIterationOptions& options) {
  validate_model(model);
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  const std::size_t cells = model.num_cells();
  const int nq = model.num_q();
  const std::size_t bytes = estimate_table_bytes(cells, nq, horizon);
  if (bytes > options.memory_cap_bytes) {
    std::ostringstream os;
    os << "value tables for " << cells + 1 << " rows x " << nq
       << " automaton states x " << horizon + 1 << " slices need about "
       << bytes / (1024 * 1024) << " MiB, above the cap of "
       << options.memory_cap_bytes / (1024 * 1024) << " MiB";
    throw CapacityError(os.str());
  }

  const AbstractKernel& k = model.kernel;
  const std::size_t nu = k.num_u();
  const std::size_t nw = k.num_w();
  const double delta = model.delta;
  ValueTables tables(cells, nq, nu, horizon);
  for (int q = 0; q < nq; ++q) {
    auto s = tables.mutable_slice(0, q);
    std::fill(s.begin(), s.end(), model.dfa.is_accepting(q) ? 1.0 : 0.0);
    s[cells] = 1.0;
  }

  std::vector<std::vector<double>> lifted(nq);
  for (int n = 0; n < horizon; ++n) {
    for (int q = 0; q < nq; ++q) {
      if (!model.dfa.is_accepting(q)) lifted_values(tables, model, n, q, lifted[q]);
    }
    for (int q = 0; q < nq; ++q) {
      auto next = tables.mutable_slice(n + 1, q);
      auto pol = tables.mutable_policy(n + 1, q);
      next[cells] = 1.0;
      pol[cells] = 0;
      if (model.dfa.is_accepting(q)) {
        std::fill(next.begin(), next.end(), 1.0);
        std::fill(pol.begin(), pol.end(), 0u);
        continue;
      }
      const std::span<const double> lv(lifted[q]);
      parallel_for(cells, options.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t x = begin; x < end; ++x) {
          double best = std::numeric_limits<double>::infinity();
          std::uint32_t arg = 0;
          for (std::size_t u = 0; u < nu; ++u) {
            double worst = 0.0;
            const std::size_t base = k.row_index(static_cast<CellIndex>(x), u, 0);
            for (std::size_t w = 0; w < nw; ++w) {
              worst = std::max(worst, k.expect(base + w, lv) + k.sink_mass(base + w));
              // This input can no longer beat the incumbent.
              if (worst >= best) break;
            }
            if (worst < best) {
              best = worst;
              arg = static_cast<std::uint32_t>(u);
            }
          }
          next[x] = std::min(1.0, (1.0 - delta) * best + delta);
          pol[x] = arg;
        }
      });
    }
  }
  return tables;
}

std::size_t advisor_input(const ValueTables& tables, CellIndex x, int q,
                          int k) {
  if (k < 0 || k >= tables.horizon()) {
    std::ostringstream os;
    os << "time index " << k << " outside [0, " << tables.horizon() << ")";
    throw HorizonExceeded(os.str());
  }
  if (x >= tables.rows() || q < 0 || q >= tables.num_q()) {
    throw IndexError("advisor lookup outside the value tables");
  }
  return tables.policy(tables.horizon() - k, x, q);
}

double advisor_guarantee(const ValueTables& tables, CellIndex x0_hat,
                         int q0_bar) {
  if (x0_hat >= tables.rows() || q0_bar < 0 || q0_bar >= tables.num_q()) {
    throw IndexError("initial product state outside the value tables");
  }
  return tables.value(tables.horizon(), x0_hat, q0_bar);
}

void require_budget(double guarantee, double eta) {
  if (eta < guarantee) {
    std::ostringstream os;
    os.precision(6);
    os << "violation budget eta = " << eta
       << " is below the advisor guarantee v = " << guarantee
       << "; no supervisor can certify it (need eta >= v)";
    throw InfeasibleBudget(os.str());
  }
}

void save_tables(const ValueTables& tables, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  binary::write_magic(os, "SVVT");
  binary::write_le<std::uint32_t>(os, kTablesVersion);
  binary::write_le<std::uint64_t>(os, tables.rows());
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(tables.num_q()));
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(tables.num_u()));
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(tables.horizon()));
  for (double v : tables.raw_values()) binary::write_le(os, v);
  for (std::uint32_t p : tables.raw_policy()) binary::write_le(os, p);
  if (!os) throw Error("write failed for " + path.string());
}

ValueTables load_tables(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  binary::expect_magic(is, "SVVT");
  const auto version = binary::read_le<std::uint32_t>(is, "version");
  if (version != kTablesVersion) {
    throw FormatError("unsupported SVVT version " + std::to_string(version));
  }
  const auto rows = binary::read_le<std::uint64_t>(is, "row count");
  const auto nq = binary::read_le<std::uint32_t>(is, "automaton size");
  const auto nu = binary::read_le<std::uint32_t>(is, "input count");
  const auto h = binary::read_le<std::uint32_t>(is, "horizon");
  if (rows < 2 || nq == 0 || nq > static_cast<std::uint32_t>(kMaxAutomatonSize) ||
      nu == 0 || h == 0) {
    throw FormatError("invalid SVVT header");
  }
  ValueTables t(rows - 1, static_cast<int>(nq), nu, static_cast<int>(h));
  for (int n = 0; n <= static_cast<int>(h); ++n) {
    for (int q = 0; q < static_cast<int>(nq); ++q) {
      for (double& v : t.mutable_slice(n, q)) {
        v = binary::read_le<double>(is, "value slice");
        if (!(v >= 0.0 && v <= 1.0)) throw FormatError("value outside [0, 1]");
      }
    }
  }
  for (int n = 1; n <= static_cast<int>(h); ++n) {
    for (int q = 0; q < static_cast<int>(nq); ++q) {
      for (std::uint32_t& p : t.mutable_policy(n, q)) {
        p = binary::read_le<std::uint32_t>(is, "policy slice");
        if (p >= nu) throw FormatError("policy entry outside the input set");
      }
    }
  }
  return t;
}

}  // namespace safevisor

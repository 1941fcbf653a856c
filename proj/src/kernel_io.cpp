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


#include "safevisor/kernel_io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "safevisor/binary_io.hpp"
#include "safevisor/error.hpp"

namespace safevisor {

namespace {

constexpr std::size_t kDenseLimitBytes = std::size_t{64} << 20;

}  // namespace

void save_kernel(const AbstractKernel& kernel,
                 const std::filesystem::path& path, KernelFileFormat format) {
  const std::size_t n = kernel.num_states();
  if (format == KernelFileFormat::kAuto) {
    const std::size_t dense = kernel.num_rows() * (n + 1) * sizeof(double);
    format = dense <= kDenseLimitBytes ? KernelFileFormat::kDense
                                       : KernelFileFormat::kSparse;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  binary::write_magic(os, "SVKN");
  binary::write_le<std::uint32_t>(os, format == KernelFileFormat::kDense ? 1 : 2);
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(n));
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(kernel.num_u()));
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(kernel.num_w()));
  std::vector<CellIndex> cells;
  std::vector<double> probs;
  for (std::size_t r = 0; r < kernel.num_rows(); ++r) {
    if (format == KernelFileFormat::kDense) {
      for (double p : kernel.dense_row(r)) binary::write_le(os, p);
      continue;
    }
    cells.clear();
    probs.clear();
    kernel.for_each(r, [&](CellIndex c, double p) {
      cells.push_back(c);
      probs.push_back(p);
    });
    binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      binary::write_le<std::uint32_t>(os, cells[i]);
      binary::write_le(os, probs[i]);
    }
    binary::write_le(os, kernel.sink_mass(r));
  }
  if (!os) throw Error("write failed for " + path.string());
}

AbstractKernel load_kernel(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  binary::expect_magic(is, "SVKN");
  const auto version = binary::read_le<std::uint32_t>(is, "version");
  if (version != 1 && version != 2) {
    throw FormatError("unsupported SVKN version " + std::to_string(version));
  }
  const auto n = binary::read_le<std::uint32_t>(is, "state count");
  const auto nu = binary::read_le<std::uint32_t>(is, "input count");
  const auto nw = binary::read_le<std::uint32_t>(is, "adversary count");
  if (n == 0 || nu == 0 || nw == 0) throw FormatError("invalid SVKN header");
  const std::size_t rows = std::size_t{n} * nu * nw;
  std::vector<SparseRow> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    SparseRow& row = out[r];
    double sink = 0.0;
    if (version == 1) {
      for (std::uint32_t c = 0; c < n; ++c) {
        const double p = binary::read_le<double>(is, "kernel row");
        if (p != 0.0) {
          row.cells.push_back(c);
          row.probs.push_back(p);
        }
      }
      sink = binary::read_le<double>(is, "kernel row");
    } else {
      const auto nnz = binary::read_le<std::uint32_t>(is, "row length");
      if (nnz > n) throw FormatError("row longer than the state count");
      row.cells.resize(nnz);
      row.probs.resize(nnz);
      for (std::uint32_t i = 0; i < nnz; ++i) {
        row.cells[i] = binary::read_le<std::uint32_t>(is, "kernel row");
        row.probs[i] = binary::read_le<double>(is, "kernel row");
      }
      sink = binary::read_le<double>(is, "kernel row");
    }
    double mass = sink;
    for (double p : row.probs) mass += p;
    if (std::abs(mass - 1.0) > 1e-9) {
      throw FormatError("kernel row " + std::to_string(r) + " does not sum to 1");
    }
  }
  try {
    return AbstractKernel::sparse(n, nu, nw, std::move(out));
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
}

}  // namespace safevisor

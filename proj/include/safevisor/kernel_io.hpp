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


#ifndef SAFEVISOR_KERNEL_IO_HPP_
#define SAFEVISOR_KERNEL_IO_HPP_

#include <cstddef>
#include <filesystem>

#include "safevisor/kernel.hpp"

namespace safevisor {

// "SVKN" files: magic, u32 version, u32 |X̂|, u32 |Û|, u32 |Ŵ|, then one
// record per row in row_index order, all little-endian.
//   version 1: |X̂|+1 f64 probabilities, SINK last
//   version 2: u32 nnz, nnz (u32 cell, f64 probability) pairs, f64 SINK
enum class KernelFileFormat { kAuto, kDense, kSparse };

// kAuto writes dense rows when the file stays below 64 MiB.
void save_kernel(const AbstractKernel& kernel,
                 const std::filesystem::path& path,
                 KernelFileFormat format = KernelFileFormat::kAuto);

// Reads either version into a sparse kernel. Rows whose stored SINK entry
// disagrees with 1 - Σ by more than 1e-9 are rejected.
AbstractKernel load_kernel(const std::filesystem::path& path);

}  // namespace safevisor

#endif  // SAFEVISOR_KERNEL_IO_HPP_

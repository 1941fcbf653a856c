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


#ifndef SAFEVISOR_RELATION_HPP_
#define SAFEVISOR_RELATION_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>

#include "safevisor/abstraction.hpp"
#include "safevisor/game.hpp"

namespace safevisor {

// Cell related to x: the cell containing x if (x, center) is in R, otherwise
// the closest related neighbor (M-norm, lowest index on ties). Empty when x
// is outside X or no neighbor is related.
std::optional<CellIndex> find_related_cell(const Grid& grid,
                                           const RelationParams& relation,
                                           const Vector& x);

struct RelationReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  // Successor pairs whose abstract state left X (SINK); not counted as
  // violations, the coupling is still checked on the unbounded lattice.
  std::size_t left_domain = 0;
  std::size_t interface_infeasible = 0;
  double max_distance = 0.0;  // largest ‖x' - x̂'‖_M observed
  double frequency = 1.0;     // fraction of successor pairs in R
  double required = 1.0;      // 1 - δ

  bool passed() const { return frequency >= required; }
};

// One-step Monte-Carlo test of the coupling: sample x̂, x with
// ‖x - x̂‖_M <= ε, û in Û and w in W; apply u = K(x - x̂) + û, a shared noise
// sample on both sides and ŵ = nearest abstract adversary; check the
// successor pair against R.
RelationReport verify_relation_empirically(const LinearGaussianGame& game,
                                           const Grid& grid,
                                           const RelationParams& relation,
                                           std::size_t sample_count,
                                           std::uint64_t seed);

}  // namespace safevisor

#endif  // SAFEVISOR_RELATION_HPP_

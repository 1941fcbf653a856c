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


#ifndef SAFEVISOR_CONTROLLERS_HPP_
#define SAFEVISOR_CONTROLLERS_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "safevisor/game.hpp"
#include "safevisor/runtime.hpp"

namespace safevisor {

// Independent Uniform(U) draws per step, reproducible by seed.
ControllerFn uniform_random_controller(const Box& u_bounds, std::uint64_t seed);

// Independent Uniform(W) draws per step, ignoring Player I's input.
AdversaryFn uniform_random_adversary(const Box& w_bounds, std::uint64_t seed);

AdversaryFn zero_adversary(Eigen::Index dim);

// One input per line, components separated by whitespace or commas; '#'
// starts a comment. Throws ConfigError when fewer than `horizon` inputs are
// present. Values are replayed verbatim; out-of-U entries reach the
// supervisor, which counts and rejects them.
std::vector<Vector> load_input_script(const std::filesystem::path& path,
                                      Eigen::Index dim, int horizon);
ControllerFn scripted_controller(std::vector<Vector> inputs);

// Proposes the advisor's refined input, i.e. exactly what a rejection would
// apply.
ControllerFn advisor_controller(const Runtime& rt);

// splitmix64-based derivation of independent stream seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace safevisor

#endif  // SAFEVISOR_CONTROLLERS_HPP_

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


#ifndef SAFEVISOR_CONFIG_HPP_
#define SAFEVISOR_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "safevisor/abstraction.hpp"
#include "safevisor/automata.hpp"
#include "safevisor/game.hpp"
#include "safevisor/oracle.hpp"
#include "safevisor/supervisor.hpp"

namespace safevisor {

enum class ControllerKind { kUniform, kScripted, kAdvisor };
enum class AdversaryKind { kUniform, kZero };

struct ExperimentConfig {
  std::string name;
  LinearGaussianGame game;
  GridSpec grid;
  RelationParams relation;
  std::filesystem::path dfa_path;
  int horizon = 1;
  double eta = 0.0;
  Vector x0;
  ControllerKind controller = ControllerKind::kUniform;
  std::filesystem::path controller_file;
  AdversaryKind adversary = AdversaryKind::kUniform;
  std::size_t episodes = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  CompanionMode companion_mode = CompanionMode::kMaxSafety;
  bool baseline = false;
  std::size_t memory_cap_bytes = std::size_t{4} << 30;
  // FNV-1a of the normalized configuration text.
  std::string digest;
};

// JSON configuration. Relative paths are resolved against the directory of
// the file. Throws ConfigError naming the offending key.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir);

// Toy finite instance for the oracle: cells with scalar outputs, an explicit
// kernel, an inline or referenced automaton, horizon and budgets.
FiniteInstance load_finite_instance(const std::filesystem::path& path);
FiniteInstance parse_finite_instance(const std::string& text,
                                     const std::filesystem::path& base_dir);

std::string fnv1a_hex(const std::string& text);

}  // namespace safevisor

#endif  // SAFEVISOR_CONFIG_HPP_

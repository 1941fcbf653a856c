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

#ifndef SAFEVISOR_AUTOMATA_HPP_
#define SAFEVISOR_AUTOMATA_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace safevisor {

// Bit i set <=> element i is in the set. DFAs are limited to 64 states and 64
// labels, far beyond anything a grid-based product can handle anyway.
using BitSet = std::uint64_t;
inline constexpr int kMaxAutomatonSize = 64;

// Total deterministic finite automaton whose accepting states mark bad
// prefixes. Accepting states are absorbing; the constructor rejects anything
// else.
class Dfa {
 public:
  Dfa() = default;
  // `delta[q * labels.size() + label]` is the successor of q under label.
  Dfa(std::vector<std::string> states, std::vector<std::string> labels,
      int initial, std::vector<int> accepting, std::vector<int> delta);

  int num_states() const { return static_cast<int>(states_.size()); }
  int num_labels() const { return static_cast<int>(labels_.size()); }
  int initial() const { return initial_; }
  bool is_accepting(int q) const;
  BitSet accepting_mask() const { return accepting_; }

  // Throws IndexError on an unknown state or label.
  int step(int q, int label) const;

  const std::string& state_name(int q) const { return states_.at(q); }
  const std::string& label_name(int l) const { return labels_.at(l); }
  int state_index(const std::string& name) const;
  int label_index(const std::string& name) const;

 private:
  std::vector<std::string> states_;
  std::vector<std::string> labels_;
  int initial_ = 0;
  BitSet accepting_ = 0;
  std::vector<int> delta_;
};

// Interval on the real line with open/closed endpoints. Infinite endpoints are
// always open.
struct Interval {
  double lo;
  double hi;
  bool lo_closed;
  bool hi_closed;

  bool contains(double y) const;
  // True iff the interval intersects the closed interval [a, b].
  bool intersects_closed(double a, double b) const;
};

// Maps a scalar output to a DFA label. Pieces partition the real line; one
// label may own several pieces.
class IntervalLabelling {
 public:
  IntervalLabelling() = default;
  // Pieces may be given in any order; they are sorted and checked to be
  // pairwise disjoint and to cover the real line. Throws ConfigError.
  IntervalLabelling(std::vector<std::pair<int, Interval>> pieces,
                    int num_labels);

  int label(double y) const;
  // Labels of all outputs within distance eps of y_hat.
  BitSet labels_within_mask(double y_hat, double eps) const;
  std::vector<int> labels_within(double y_hat, double eps) const;

  const std::vector<std::pair<int, Interval>>& pieces() const {
    return pieces_;
  }
  int num_labels() const { return num_labels_; }

 private:
  std::vector<std::pair<int, Interval>> pieces_;
  int num_labels_ = 0;
};

struct SafetySpec {
  Dfa dfa;
  IntervalLabelling labelling;
  int horizon = 1;
};

// Every label of the labelling must exist in the DFA alphabet.
void check_compatible(const Dfa& dfa, const IntervalLabelling& labelling);

// True iff the run q0 -L(y0)-> ... reaches an accepting state. Requires
// outputs.size() == spec.horizon.
bool trace_accepted(const SafetySpec& spec, std::span<const double> outputs);

// { delta(q, l) : l in labels_within(y_hat, eps) }.
BitSet reachable_dfa_states_mask(const Dfa& dfa,
                                 const IntervalLabelling& labelling, int q,
                                 double y_hat, double eps);
std::vector<int> reachable_dfa_states(const Dfa& dfa,
                                      const IntervalLabelling& labelling,
                                      int q, double y_hat, double eps);

std::vector<int> bits_to_indices(BitSet set);

// Parsed DFA file: automaton plus its labelling.
struct DfaFile {
  Dfa dfa;
  IntervalLabelling labelling;
};

// Line-oriented format:
//
//   # comment
//   states q0 q1
//   initial q0
//   accepting q1
//   label p1 [-0.5, 0.5]
//   label p2 (-inf, -0.5) (0.5, inf)
//   trans q0 p1 q0
//
// One `trans` line per (state, label) pair is required.
DfaFile parse_dfa(const std::string& text);
DfaFile load_dfa(const std::filesystem::path& path);
std::string format_dfa(const DfaFile& file);

}  // namespace safevisor

#endif  // SAFEVISOR_AUTOMATA_HPP_

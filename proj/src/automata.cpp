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

#include "safevisor/automata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <regex>
#include <sstream>
#include <tuple>

#include "safevisor/error.hpp"

namespace safevisor {

Dfa::Dfa(std::vector<std::string> states, std::vector<std::string> labels,
         int initial, std::vector<int> accepting, std::vector<int> delta)
    : states_(std::move(states)),
      labels_(std::move(labels)),
      initial_(initial),
      delta_(std::move(delta)) {
  const int nq = num_states();
  const int nl = num_labels();
  if (nq == 0 || nl == 0) throw ConfigError("DFA needs states and labels");
  if (nq > kMaxAutomatonSize || nl > kMaxAutomatonSize) {
    throw ConfigError("DFA limited to 64 states and 64 labels");
  }
  if (initial_ < 0 || initial_ >= nq) throw ConfigError("bad initial state");
  if (static_cast<int>(delta_.size()) != nq * nl) {
    throw ConfigError("DFA transition table is not total");
  }
  for (int t : delta_) {
    if (t < 0 || t >= nq) throw ConfigError("DFA transition out of range");
  }
  for (int f : accepting) {
    if (f < 0 || f >= nq) throw ConfigError("bad accepting state");
    accepting_ |= BitSet{1} << f;
  }
  for (int f : accepting) {
    for (int l = 0; l < nl; ++l) {
      if (delta_[f * nl + l] != f) {
        throw ConfigError("accepting state " + states_[f] +
                          " is not absorbing under label " + labels_[l]);
      }
    }
  }
}

bool Dfa::is_accepting(int q) const {
  if (q < 0 || q >= num_states()) throw IndexError("unknown DFA state");
  return (accepting_ >> q) & 1U;
}

int Dfa::step(int q, int label) const {
  if (q < 0 || q >= num_states()) {
    throw IndexError("unknown DFA state " + std::to_string(q));
  }
  if (label < 0 || label >= num_labels()) {
    throw IndexError("unknown DFA label " + std::to_string(label));
  }
  return delta_[q * num_labels() + label];
}

int Dfa::state_index(const std::string& name) const {
  auto it = std::find(states_.begin(), states_.end(), name);
  if (it == states_.end()) throw IndexError("unknown DFA state " + name);
  return static_cast<int>(it - states_.begin());
}

int Dfa::label_index(const std::string& name) const {
  auto it = std::find(labels_.begin(), labels_.end(), name);
  if (it == labels_.end()) throw IndexError("unknown DFA label " + name);
  return static_cast<int>(it - labels_.begin());
}

bool Interval::contains(double y) const {
  const bool above = lo_closed ? y >= lo : y > lo;
  const bool below = hi_closed ? y <= hi : y < hi;
  return above && below;
}

bool Interval::intersects_closed(double a, double b) const {
  if (a > b) return false;
  if (hi < a || (hi == a && !hi_closed)) return false;
  if (lo > b || (lo == b && !lo_closed)) return false;
  return true;
}

IntervalLabelling::IntervalLabelling(
    std::vector<std::pair<int, Interval>> pieces, int num_labels)
    : pieces_(std::move(pieces)), num_labels_(num_labels) {
  if (pieces_.empty()) throw ConfigError("labelling has no intervals");
  for (const auto& [label, iv] : pieces_) {
    if (label < 0 || label >= num_labels_) {
      throw ConfigError("labelling refers to unknown label");
    }
    if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.lo > iv.hi ||
        (iv.lo == iv.hi && !(iv.lo_closed && iv.hi_closed))) {
      throw ConfigError("empty or malformed label interval");
    }
    if ((std::isinf(iv.lo) && iv.lo_closed) ||
        (std::isinf(iv.hi) && iv.hi_closed)) {
      throw ConfigError("infinite interval endpoints must be open");
    }
  }
  std::sort(pieces_.begin(), pieces_.end(), [](const auto& a, const auto& b) {
    if (a.second.lo != b.second.lo) return a.second.lo < b.second.lo;
    return a.second.lo_closed && !b.second.lo_closed;
  });
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (pieces_.front().second.lo != -kInf) {
    throw ConfigError("labelling does not cover -inf");
  }
  if (pieces_.back().second.hi != kInf) {
    throw ConfigError("labelling does not cover +inf");
  }
  for (std::size_t i = 1; i < pieces_.size(); ++i) {
    const Interval& prev = pieces_[i - 1].second;
    const Interval& next = pieces_[i].second;
    if (prev.hi != next.lo) {
      throw ConfigError("label intervals leave a gap or overlap near " +
                        std::to_string(prev.hi));
    }
    if (prev.hi_closed == next.lo_closed) {
      throw ConfigError(
          "label intervals must meet with exactly one closed endpoint at " +
          std::to_string(prev.hi));
    }
  }
}

int IntervalLabelling::label(double y) const {
  for (const auto& [l, iv] : pieces_) {
    if (iv.contains(y)) return l;
  }
  // Only NaN gets here.
  throw DomainError("output is not a number");
}

BitSet IntervalLabelling::labels_within_mask(double y_hat, double eps) const {
  if (eps < 0) throw DomainError("negative epsilon");
  BitSet out = 0;
  for (const auto& [l, iv] : pieces_) {
    if (iv.intersects_closed(y_hat - eps, y_hat + eps)) out |= BitSet{1} << l;
  }
  return out;
}

std::vector<int> IntervalLabelling::labels_within(double y_hat,
                                                  double eps) const {
  return bits_to_indices(labels_within_mask(y_hat, eps));
}

std::vector<int> bits_to_indices(BitSet set) {
  std::vector<int> out;
  for (int i = 0; i < kMaxAutomatonSize; ++i) {
    if ((set >> i) & 1U) out.push_back(i);
  }
  return out;
}

void check_compatible(const Dfa& dfa, const IntervalLabelling& labelling) {
  if (labelling.num_labels() > dfa.num_labels()) {
    throw ConfigError("labelling uses labels outside the DFA alphabet");
  }
}

bool trace_accepted(const SafetySpec& spec, std::span<const double> outputs) {
  if (static_cast<int>(outputs.size()) != spec.horizon) {
    throw DomainError("trace length " + std::to_string(outputs.size()) +
                      " differs from horizon " +
                      std::to_string(spec.horizon));
  }
  int q = spec.dfa.initial();
  for (double y : outputs) {
    q = spec.dfa.step(q, spec.labelling.label(y));
    if (spec.dfa.is_accepting(q)) return true;
  }
  return false;
}

BitSet reachable_dfa_states_mask(const Dfa& dfa,
                                 const IntervalLabelling& labelling, int q,
                                 double y_hat, double eps) {
  BitSet out = 0;
  BitSet labels = labelling.labels_within_mask(y_hat, eps);
  for (int l : bits_to_indices(labels)) out |= BitSet{1} << dfa.step(q, l);
  return out;
}

std::vector<int> reachable_dfa_states(const Dfa& dfa,
                                      const IntervalLabelling& labelling,
                                      int q, double y_hat, double eps) {
  return bits_to_indices(
      reachable_dfa_states_mask(dfa, labelling, q, y_hat, eps));
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_bound(const std::string& s, int line_no) {
  std::string t = s;
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != t.size() || pos == 0) {
    throw FormatError("line " + std::to_string(line_no) + ": bad bound '" + s +
                      "'");
  }
  return v;
}

std::string format_bound(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

DfaFile parse_dfa(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<std::string> states;
  std::string initial;
  std::vector<std::string> accepting;
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, Interval>> raw_pieces;
  std::vector<std::tuple<std::string, std::string, std::string, int>> trans;
  static const std::regex kInterval(
      R"(([\[\(])\s*([^,\s]+)\s*,\s*([^\]\)\s]+)\s*([\]\)]))");

  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    const std::string& key = toks[0];
    auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
    if (key == "states") {
      states.assign(toks.begin() + 1, toks.end());
    } else if (key == "initial") {
      if (toks.size() != 2) throw FormatError(where() + "initial <state>");
      initial = toks[1];
    } else if (key == "accepting") {
      accepting.insert(accepting.end(), toks.begin() + 1, toks.end());
    } else if (key == "label") {
      if (toks.size() < 3) throw FormatError(where() + "label <name> <interval>...");
      const std::string& name = toks[1];
      if (std::find(labels.begin(), labels.end(), name) == labels.end()) {
        labels.push_back(name);
      }
      const std::size_t start = line.find(name, line.find("label") + 5);
      std::string rest = line.substr(start + name.size());
      auto begin = std::sregex_iterator(rest.begin(), rest.end(), kInterval);
      int count = 0;
      for (auto it = begin; it != std::sregex_iterator(); ++it, ++count) {
        const auto& m = *it;
        Interval iv{parse_bound(m[2], line_no), parse_bound(m[3], line_no),
                    m[1] == "[", m[4] == "]"};
        raw_pieces.emplace_back(name, iv);
      }
      if (count == 0) throw FormatError(where() + "no interval for label " + name);
    } else if (key == "trans") {
      if (toks.size() != 4) throw FormatError(where() + "trans <from> <label> <to>");
      trans.emplace_back(toks[1], toks[2], toks[3], line_no);
    } else {
      throw FormatError(where() + "unknown directive '" + key + "'");
    }
  }
  if (states.empty()) throw FormatError("DFA file lists no states");
  if (initial.empty()) throw FormatError("DFA file has no initial state");

  auto index_of = [](const std::vector<std::string>& v, const std::string& s,
                     const char* what) {
    auto it = std::find(v.begin(), v.end(), s);
    if (it == v.end()) throw FormatError(std::string("unknown ") + what + " " + s);
    return static_cast<int>(it - v.begin());
  };
  const int nl = static_cast<int>(labels.size());
  std::vector<int> delta(states.size() * labels.size(), -1);
  for (const auto& [from, lab, to, ln] : trans) {
    const int f = index_of(states, from, "state");
    const int l = index_of(labels, lab, "label");
    const int t = index_of(states, to, "state");
    int& slot = delta[f * nl + l];
    if (slot != -1 && slot != t) {
      throw FormatError("line " + std::to_string(ln) +
                        ": nondeterministic transition");
    }
    slot = t;
  }
  for (std::size_t q = 0; q < states.size(); ++q) {
    for (int l = 0; l < nl; ++l) {
      if (delta[q * nl + l] == -1) {
        throw FormatError("missing transition for (" + states[q] + ", " +
                          labels[l] + "): DFA must be total");
      }
    }
  }
  std::vector<int> acc;
  for (const auto& a : accepting) acc.push_back(index_of(states, a, "state"));

  std::vector<std::pair<int, Interval>> pieces;
  for (const auto& [name, iv] : raw_pieces) {
    pieces.emplace_back(index_of(labels, name, "label"), iv);
  }
  DfaFile out;
  out.dfa = Dfa(states, labels, index_of(states, initial, "state"), acc,
                std::move(delta));
  out.labelling = IntervalLabelling(std::move(pieces), nl);
  return out;
}

DfaFile load_dfa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open DFA file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dfa(ss.str());
}

std::string format_dfa(const DfaFile& file) {
  const Dfa& dfa = file.dfa;
  std::ostringstream os;
  os << "states";
  for (int q = 0; q < dfa.num_states(); ++q) os << ' ' << dfa.state_name(q);
  os << "\ninitial " << dfa.state_name(dfa.initial()) << "\naccepting";
  for (int q = 0; q < dfa.num_states(); ++q) {
    if (dfa.is_accepting(q)) os << ' ' << dfa.state_name(q);
  }
  os << '\n';
  std::map<int, std::vector<Interval>> by_label;
  for (const auto& [l, iv] : file.labelling.pieces()) by_label[l].push_back(iv);
  for (const auto& [l, ivs] : by_label) {
    os << "label " << dfa.label_name(l);
    for (const auto& iv : ivs) {
      os << ' ' << (iv.lo_closed ? '[' : '(') << format_bound(iv.lo) << ", "
         << format_bound(iv.hi) << (iv.hi_closed ? ']' : ')');
    }
    os << '\n';
  }
  for (int q = 0; q < dfa.num_states(); ++q) {
    for (int l = 0; l < dfa.num_labels(); ++l) {
      os << "trans " << dfa.state_name(q) << ' ' << dfa.label_name(l) << ' '
         << dfa.state_name(dfa.step(q, l)) << '\n';
    }
  }
  return os.str();
}

}  // namespace safevisor

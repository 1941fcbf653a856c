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


#include "safevisor/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "safevisor/error.hpp"
#include "safevisor/supervisor.hpp"

namespace safevisor {

namespace {

constexpr double kOracleTolerance = 1e-9;

// V_n(x̂', q̄(x̂', q)) with q̄ the successor of largest value; SINK is 1.
double lifted_value(const AbstractModel& model, const std::vector<double>& v,
                    std::size_t x_next, int q) {
  const int nq = model.num_q();
  if (x_next >= model.num_cells()) return 1.0;
  BitSet succ = model.lift.successors(q, static_cast<CellIndex>(x_next));
  double best = 0.0;
  for (int p = 0; p < nq; ++p) {
    if ((succ >> p) & 1u) best = std::max(best, v[x_next * nq + p]);
  }
  return best;
}

double row_value(const AbstractModel& model, const std::vector<double>& v,
                 std::size_t x, int q, std::size_t u, std::size_t w) {
  const AbstractKernel& k = model.kernel;
  const std::size_t row = k.row_index(static_cast<CellIndex>(x), u, w);
  double s = k.sink_mass(row);
  k.for_each(row, [&](CellIndex c, double p) { s += p * lifted_value(model, v, c, q); });
  return s;
}

std::vector<double> terminal_slice(const AbstractModel& model) {
  const int nq = model.num_q();
  std::vector<double> v((model.num_cells() + 1) * nq, 0.0);
  for (std::size_t x = 0; x <= model.num_cells(); ++x) {
    for (int q = 0; q < nq; ++q) {
      if (x == model.num_cells() || model.dfa.is_accepting(q)) v[x * nq + q] = 1.0;
    }
  }
  return v;
}

}  // namespace

FiniteProductGame build_product(const AbstractModel& model,
                                const IntervalLabelling& labelling,
                                const std::vector<double>& outputs) {
  validate_model(model);
  if (outputs.size() != model.num_cells()) {
    throw ConfigError("one output per cell is required");
  }
  FiniteProductGame g;
  g.num_cells = model.num_cells();
  g.num_q = model.num_q();
  g.num_u = model.kernel.num_u();
  g.num_w = model.kernel.num_w();
  g.accepting = model.dfa.accepting_mask();
  g.rows.resize(g.num_states() * g.num_u * g.num_w);
  for (std::size_t s = 0; s < g.num_states(); ++s) {
    const std::size_t x = g.cell_of(s);
    const int q = g.q_of(s);
    for (std::size_t u = 0; u < g.num_u; ++u) {
      for (std::size_t w = 0; w < g.num_w; ++w) {
        auto& out = g.rows[(s * g.num_u + u) * g.num_w + w];
        if (g.is_sink(s)) {
          out.push_back({s, 1.0});
          continue;
        }
        const std::size_t row = model.kernel.row_index(static_cast<CellIndex>(x), u, w);
        model.kernel.for_each(row, [&](CellIndex c, double p) {
          out.push_back({g.state(c, model.dfa.step(q, labelling.label(outputs[c]))), p});
        });
        const double sink = model.kernel.sink_mass(row);
        if (sink > 0.0) out.push_back({g.state(g.num_cells, q), sink});
      }
    }
  }
  return g;
}

std::vector<std::vector<double>> policy_value(const AbstractModel& model,
                                              const MarkovPolicyPair& policies,
                                              int horizon) {
  const int nq = model.num_q();
  const std::size_t states = model.num_cells() * nq;
  const std::size_t nu = model.kernel.num_u();
  if (static_cast<int>(policies.rho.size()) < horizon ||
      static_cast<int>(policies.lambda.size()) < horizon) {
    throw IndexError("policy pair shorter than the horizon");
  }
  std::vector<std::vector<double>> v{terminal_slice(model)};
  for (int n = 0; n < horizon; ++n) {
    const int k = horizon - n - 1;
    const auto& rho = policies.rho[k];
    const auto& lambda = policies.lambda[k];
    if (rho.size() < states || lambda.size() < states * nu) {
      throw IndexError("policy undefined at time " + std::to_string(k));
    }
    std::vector<double> next = v.back();
    for (std::size_t s = 0; s < states; ++s) {
      const std::size_t x = s / nq;
      const int q = static_cast<int>(s % nq);
      if (model.dfa.is_accepting(q)) continue;
      const std::size_t u = rho[s];
      if (u >= nu) throw IndexError("Player I policy entry out of range");
      const std::size_t w = lambda[s * nu + u];
      if (w >= model.kernel.num_w()) throw IndexError("Player II policy entry out of range");
      next[s] = (1.0 - model.delta) * row_value(model, v.back(), x, q, u, w) + model.delta;
    }
    v.push_back(std::move(next));
  }
  return v;
}

AdversaryResult worst_case_adversary(
    const AbstractModel& model, const std::vector<std::vector<std::size_t>>& rho,
    int horizon) {
  const int nq = model.num_q();
  const std::size_t states = model.num_cells() * nq;
  const std::size_t nu = model.kernel.num_u();
  AdversaryResult r;
  r.lambda.assign(horizon, std::vector<std::size_t>(states * nu, 0));
  r.values.push_back(terminal_slice(model));
  for (int n = 0; n < horizon; ++n) {
    const int k = horizon - n - 1;
    std::vector<double> next = r.values.back();
    for (std::size_t s = 0; s < states; ++s) {
      const std::size_t x = s / nq;
      const int q = static_cast<int>(s % nq);
      if (model.dfa.is_accepting(q)) continue;
      const std::size_t u = rho.at(k).at(s);
      double worst = -1.0;
      std::size_t arg = 0;
      for (std::size_t w = 0; w < model.kernel.num_w(); ++w) {
        const double val = row_value(model, r.values.back(), x, q, u, w);
        if (val > worst) {
          worst = val;
          arg = w;
        }
      }
      // Best responses to inputs ρ does not pick are never evaluated.
      for (std::size_t uu = 0; uu < nu; ++uu) r.lambda[k][s * nu + uu] = arg;
      next[s] = (1.0 - model.delta) * worst + model.delta;
    }
    r.values.push_back(std::move(next));
  }
  return r;
}

std::vector<std::vector<std::size_t>> advisor_policy(const AbstractModel& model,
                                                     const ValueTables& tables) {
  const int nq = model.num_q();
  const std::size_t states = model.num_cells() * nq;
  std::vector<std::vector<std::size_t>> rho(tables.horizon(),
                                            std::vector<std::size_t>(states, 0));
  for (int k = 0; k < tables.horizon(); ++k) {
    for (std::size_t s = 0; s < states; ++s) {
      rho[k][s] = advisor_input(tables, static_cast<CellIndex>(s / nq),
                                static_cast<int>(s % nq), k);
    }
  }
  return rho;
}

std::vector<BitSet> reachable_dfa_sets(const FiniteProductGame& product,
                                       std::size_t x0, int q0_bar, int horizon) {
  std::vector<BitSet> out;
  std::vector<char> cur(product.num_states(), 0);
  cur[product.state(x0, q0_bar)] = 1;
  for (int n = 0; n <= horizon; ++n) {
    BitSet qs = 0;
    for (std::size_t s = 0; s < cur.size(); ++s) {
      if (cur[s]) qs |= BitSet{1} << product.q_of(s);
    }
    out.push_back(qs);
    if (n == horizon) break;
    std::vector<char> next(product.num_states(), 0);
    for (std::size_t s = 0; s < cur.size(); ++s) {
      if (!cur[s]) continue;
      for (std::size_t u = 0; u < product.num_u; ++u) {
        for (std::size_t w = 0; w < product.num_w; ++w) {
          for (const auto& t : product.row(s, u, w)) {
            if (t.prob > 0.0) next[t.state] = 1;
          }
        }
      }
    }
    cur.swap(next);
  }
  return out;
}

void check_oracle_size(const FiniteInstance& instance) {
  const AbstractModel& m = instance.model;
  const std::size_t product = m.num_cells() * static_cast<std::size_t>(m.num_q());
  if (product > 64 || m.kernel.num_u() > 4 || m.kernel.num_w() > 4 ||
      instance.horizon > 8) {
    std::ostringstream os;
    os << "instance '" << instance.name << "' too large for the exhaustive oracle: "
       << m.num_cells() << " cells x " << m.num_q() << " automaton states = "
       << product << " (max 64), |U| = " << m.kernel.num_u() << " (max 4), |W| = "
       << m.kernel.num_w() << " (max 4), H = " << instance.horizon << " (max 8)";
    throw CapacityError(os.str());
  }
}

namespace {

struct ConfigKey {
  std::size_t x;
  int q;
  int k;
  std::uint64_t c1_bits;

  bool operator==(const ConfigKey&) const = default;
};

struct ConfigKeyHash {
  std::size_t operator()(const ConfigKey& c) const {
    std::size_t h = std::hash<std::uint64_t>{}(c.c1_bits);
    h ^= (c.x * 0x9e3779b97f4a7c15ULL) + (static_cast<std::size_t>(c.q) << 20) +
         static_cast<std::size_t>(c.k);
    return h;
  }
};

// Worst-case violation probability over steps k..H-1 of the supervised
// finite game, maximized jointly over controller proposals and adversary
// responses.
class SupervisedTree {
 public:
  SupervisedTree(const FiniteInstance& inst, const ValueTables& tables,
                 const std::vector<BitSet>& reachable, double eta)
      : inst_(inst), tables_(tables), reachable_(reachable), eta_(eta) {}

  double solve(std::size_t x, int q, int k, double c1) {
    const AbstractModel& m = inst_.model;
    if (m.dfa.is_accepting(q) || x >= m.num_cells()) return 1.0;
    if (k == inst_.horizon) return 0.0;
    if (!((reachable_[k] >> q) & 1u)) reachable_ok_ = false;
    const ConfigKey key{x, q, k, std::bit_cast<std::uint64_t>(c1)};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    const CellIndex cell = static_cast<CellIndex>(x);
    const std::size_t u_c = advisor_input(tables_, cell, q, k);
    double best = 0.0;
    for (std::size_t u_uc = 0; u_uc < m.kernel.num_u(); ++u_uc) {
      // Identity relation: U_f = {u_uc}, so the companion is u_uc itself.
      const double c2 = c2_lookahead(m, tables_, cell, q, u_uc, k);
      const double e_pv = std::clamp(1.0 - c1 * c2, 0.0, 1.0);
      const bool accept = e_pv <= eta_;
      const std::size_t applied = accept ? u_uc : u_c;
      const double c1_next = c1_update(c1, m, cell, applied, q);
      double worst = 0.0;
      for (std::size_t w = 0; w < m.kernel.num_w(); ++w) {
        const std::size_t row = m.kernel.row_index(cell, applied, w);
        double val = m.kernel.sink_mass(row);
        m.kernel.for_each(row, [&](CellIndex c, double p) {
          const int q_next = m.dfa.step(q, inst_.labelling.label(inst_.outputs[c]));
          val += p * solve(c, q_next, k + 1, c1_next);
        });
        worst = std::max(worst, val);
      }
      if (accept) {
        ++accepting_;
        max_excess_ = std::max(max_excess_, worst - e_pv);
      }
      best = std::max(best, worst);
    }
    memo_.emplace(key, best);
    return best;
  }

  std::size_t configurations() const { return memo_.size(); }
  std::size_t accepting() const { return accepting_; }
  double max_excess() const { return max_excess_; }
  bool reachable_ok() const { return reachable_ok_; }

 private:
  const FiniteInstance& inst_;
  const ValueTables& tables_;
  const std::vector<BitSet>& reachable_;
  double eta_;
  std::unordered_map<ConfigKey, double, ConfigKeyHash> memo_;
  std::size_t accepting_ = 0;
  double max_excess_ = -1.0;
  bool reachable_ok_ = true;
};

}  // namespace

bool OracleReport::passed() const {
  if (minimax_gap > 1e-12 || gates.empty()) return false;
  for (const auto& g : gates) {
    if (!g.bound_ok || !g.dominance_ok || !g.reachable_ok) return false;
  }
  return true;
}

OracleReport exhaustive_violation_bound_check(const FiniteInstance& instance) {
  check_oracle_size(instance);
  const AbstractModel& m = instance.model;
  if (instance.eps != 0.0 || m.delta != 0.0) {
    throw ConfigError("the exhaustive oracle requires eps = 0 and delta = 0");
  }
  if (instance.x0 >= m.num_cells()) throw IndexError("initial cell out of range");

  OracleReport report;
  report.name = instance.name;
  const ValueTables tables = value_iteration(m, instance.horizon);
  const int q0_bar =
      m.dfa.step(m.dfa.initial(), instance.labelling.label(instance.outputs[instance.x0]));
  report.advisor_value = advisor_guarantee(tables, instance.x0, q0_bar);

  const auto rho = advisor_policy(m, tables);
  const AdversaryResult adv = worst_case_adversary(m, rho, instance.horizon);
  const int nq = m.num_q();
  for (int n = 0; n <= instance.horizon; ++n) {
    for (std::size_t s = 0; s < m.num_cells() * nq; ++s) {
      const double vi = tables.value(n, static_cast<CellIndex>(s / nq),
                                     static_cast<int>(s % nq));
      report.minimax_gap = std::max(report.minimax_gap, std::abs(vi - adv.values[n][s]));
    }
  }
  report.minimax_value = adv.values[instance.horizon][instance.x0 * nq + q0_bar];

  const FiniteProductGame product = build_product(m, instance.labelling, instance.outputs);
  const auto reachable = reachable_dfa_sets(product, instance.x0, q0_bar, instance.horizon);

  std::vector<double> etas = instance.etas;
  if (etas.empty()) {
    const double v = report.advisor_value;
    etas = {v, v + 0.01, v + 0.05, v + 0.1, v + 0.25, 0.5, 0.9, 1.0};
  }
  std::sort(etas.begin(), etas.end());
  etas.erase(std::unique(etas.begin(), etas.end()), etas.end());
  for (double eta : etas) {
    if (eta < report.advisor_value || eta > 1.0) continue;
    SupervisedTree tree(instance, tables, reachable, eta);
    GateResult g;
    g.eta = eta;
    g.worst_violation = tree.solve(instance.x0, q0_bar, 0, 1.0);
    g.bound_ok = g.worst_violation <= eta + kOracleTolerance;
    g.configurations = tree.configurations();
    g.accepted_decisions = tree.accepting();
    g.max_tail_excess = tree.max_excess();
    g.dominance_ok = g.max_tail_excess <= kOracleTolerance;
    g.reachable_ok = tree.reachable_ok();
    report.gates.push_back(g);
  }
  return report;
}

std::string format_report(const OracleReport& r) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "instance " << r.name << "\n"
     << "  advisor value v = " << r.advisor_value
     << ", minimax replay = " << r.minimax_value
     << ", max table gap = " << r.minimax_gap << "\n";
  for (const auto& g : r.gates) {
    os << "  eta = " << g.eta << ": worst violation " << g.worst_violation
       << (g.bound_ok ? " <= " : " > ") << "eta; " << g.configurations << " configurations, "
       << g.accepted_decisions << " accepted decisions; max tail - E_pv "
       << g.max_tail_excess << (g.dominance_ok ? " (dominated)" : " (NOT dominated)")
       << (g.reachable_ok ? "" : "; visited automaton state outside reachable set")
       << "\n";
  }
  os << (r.passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

}  // namespace safevisor

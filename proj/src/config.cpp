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


#include "safevisor/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "safevisor/error.hpp"

namespace safevisor {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError("missing key '" + key + "' in " + where);
  }
  return j.at(key);
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  return j.get<double>();
}

Vector vector_of(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a nonempty list");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = number(j[i], what);
  return v;
}

// Row-major list of rows.
Matrix matrix_of(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a list of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ConfigError(what + " must be a list of rows");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError(what + " has rows of unequal length");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = number(j[r][c], what);
  }
  return m;
}

Box box_of(const json& j, const std::string& what) {
  Box b{vector_of(require(j, "lower", what), what + ".lower"),
        vector_of(require(j, "upper", what), what + ".upper")};
  if (b.lower.size() != b.upper.size() || (b.upper.array() < b.lower.array()).any()) {
    throw ConfigError(what + " must have lower <= upper of equal length");
  }
  return b;
}

std::vector<int> counts_of(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a nonempty list");
  std::vector<int> out;
  for (const auto& e : j) {
    if (!e.is_number_integer() || e.get<int>() < 1) {
      throw ConfigError(what + " entries must be positive integers");
    }
    out.push_back(e.get<int>());
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

LinearGaussianGame game_of(const json& g) {
  const Box x = box_of(require(g, "x_bounds", "game"), "game.x_bounds");
  const Box u = box_of(require(g, "u_bounds", "game"), "game.u_bounds");
  const Box w = box_of(require(g, "w_bounds", "game"), "game.w_bounds");
  const Matrix r = matrix_of(require(g, "R", "game"), "game.R");
  LinearGaussianGame game;
  if (g.contains("A")) {
    game.A = matrix_of(g.at("A"), "game.A");
    game.B = matrix_of(require(g, "B", "game"), "game.B");
    game.D = matrix_of(require(g, "D", "game"), "game.D");
    game.C_out = matrix_of(require(g, "C", "game"), "game.C");
    game.R_noise = r;
    game.x_bounds = x;
    game.u_bounds = u;
    game.w_bounds = w;
    game.dt = g.value("dt", 0.0);
  } else {
    game = make_double_integrator(number(require(g, "dt", "game"), "game.dt"), r, x, u, w);
  }
  return game;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  try {
    ExperimentConfig c;
    c.name = j.value("name", "experiment");
    c.game = game_of(require(j, "game", "config"));

    const json& g = require(j, "grid", "config");
    c.grid.cell_sizes = vector_of(require(g, "cell_sizes", "grid"), "grid.cell_sizes");
    c.grid.u_cells = counts_of(require(g, "u_cells", "grid"), "grid.u_cells");
    c.grid.w_cells = counts_of(require(g, "w_cells", "grid"), "grid.w_cells");
    if (g.contains("u_restriction")) {
      c.grid.u_restriction = box_of(g.at("u_restriction"), "grid.u_restriction");
    }

    const json& r = require(j, "relation", "config");
    c.relation.M = matrix_of(require(r, "M", "relation"), "relation.M");
    c.relation.K = matrix_of(require(r, "K", "relation"), "relation.K");
    c.relation.eps = number(require(r, "eps", "relation"), "relation.eps");
    c.relation.eps_w = number(require(r, "eps_w", "relation"), "relation.eps_w");
    c.relation.delta = number(require(r, "delta", "relation"), "relation.delta");
    c.relation.gamma = number(require(r, "gamma", "relation"), "relation.gamma");

    const json& s = require(j, "spec", "config");
    c.dfa_path = resolve(base_dir, require(s, "dfa", "spec").get<std::string>());
    c.horizon = require(s, "horizon", "spec").get<int>();
    if (c.horizon < 0) throw ConfigError("spec.horizon must be nonnegative");
    if (!std::filesystem::exists(c.dfa_path)) {
      throw ConfigError("automaton file not found: " + c.dfa_path.string());
    }

    c.eta = number(require(j, "eta", "config"), "eta");
    if (!(c.eta >= 0.0 && c.eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
    c.x0 = vector_of(require(j, "x0", "config"), "x0");
    c.game.x0_set = {c.x0};

    const json ctl = j.value("controller", json::object({{"kind", "uniform"}}));
    const std::string ck = ctl.value("kind", "uniform");
    if (ck == "uniform") {
      c.controller = ControllerKind::kUniform;
    } else if (ck == "scripted") {
      c.controller = ControllerKind::kScripted;
      c.controller_file = resolve(base_dir, require(ctl, "file", "controller").get<std::string>());
      if (!std::filesystem::exists(c.controller_file)) {
        throw ConfigError("controller script not found: " + c.controller_file.string());
      }
    } else if (ck == "advisor") {
      c.controller = ControllerKind::kAdvisor;
    } else {
      throw ConfigError("unknown controller kind '" + ck + "'");
    }

    const json adv = j.value("adversary", json::object({{"kind", "uniform"}}));
    const std::string ak = adv.value("kind", "uniform");
    if (ak == "uniform") {
      c.adversary = AdversaryKind::kUniform;
    } else if (ak == "zero") {
      c.adversary = AdversaryKind::kZero;
    } else {
      throw ConfigError("unknown adversary kind '" + ak + "'");
    }

    const long long episodes = j.value("episodes", 1LL);
    if (episodes < 1) throw ConfigError("episodes must be at least 1");
    c.episodes = static_cast<std::size_t>(episodes);
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
    c.companion_mode = parse_companion_mode(j.value("companion_mode", std::string("max-safety")));
    c.baseline = j.value("baseline", false);
    c.memory_cap_bytes = static_cast<std::size_t>(j.value("memory_cap_mib", 4096.0) * 1024 * 1024);
    c.digest = fnv1a_hex(j.dump());
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.parent_path());
}

FiniteInstance parse_finite_instance(const std::string& text,
                                     const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  try {
    FiniteInstance inst;
    inst.name = j.value("name", "instance");
    for (const auto& y : require(j, "outputs", "instance")) {
      inst.outputs.push_back(number(y, "outputs"));
    }
    const std::size_t n = inst.outputs.size();
    if (n == 0) throw ConfigError("instance needs at least one cell");
    const std::size_t nu = require(j, "num_u", "instance").get<std::size_t>();
    const std::size_t nw = require(j, "num_w", "instance").get<std::size_t>();

    // kernel[x][u][w] = [[cell, probability], ...]; missing mass goes to SINK.
    const json& k = require(j, "kernel", "instance");
    if (!k.is_array() || k.size() != n) throw ConfigError("kernel needs one entry per cell");
    std::vector<SparseRow> rows;
    for (std::size_t x = 0; x < n; ++x) {
      if (!k[x].is_array() || k[x].size() != nu) {
        throw ConfigError("kernel[" + std::to_string(x) + "] needs num_u entries");
      }
      for (std::size_t u = 0; u < nu; ++u) {
        if (!k[x][u].is_array() || k[x][u].size() != nw) {
          throw ConfigError("kernel entries need num_w successor lists");
        }
        for (std::size_t w = 0; w < nw; ++w) {
          SparseRow row;
          for (const auto& e : k[x][u][w]) {
            if (!e.is_array() || e.size() != 2) {
              throw ConfigError("successor entries are [cell, probability] pairs");
            }
            row.cells.push_back(e[0].get<CellIndex>());
            row.probs.push_back(number(e[1], "probability"));
          }
          rows.push_back(std::move(row));
        }
      }
    }

    DfaFile dfa;
    if (j.contains("dfa")) {
      dfa = parse_dfa(j.at("dfa").get<std::string>());
    } else {
      std::ifstream is(resolve(base_dir, require(j, "dfa_file", "instance").get<std::string>()));
      if (!is) throw ConfigError("cannot open the instance automaton file");
      std::ostringstream os;
      os << is.rdbuf();
      dfa = parse_dfa(os.str());
    }
    inst.eps = j.value("eps", 0.0);
    inst.horizon = require(j, "horizon", "instance").get<int>();
    if (inst.horizon < 1) throw ConfigError("instance horizon must be at least 1");
    inst.x0 = require(j, "x0", "instance").get<CellIndex>();
    if (inst.x0 >= n) throw ConfigError("instance x0 out of range");
    if (j.contains("etas")) {
      for (const auto& e : j.at("etas")) inst.etas.push_back(number(e, "etas"));
    }
    inst.labelling = dfa.labelling;
    inst.model.kernel = AbstractKernel::sparse(n, nu, nw, std::move(rows));
    inst.model.dfa = dfa.dfa;
    inst.model.lift = EpsilonLift(dfa.dfa, dfa.labelling, inst.outputs, inst.eps);
    inst.model.delta = j.value("delta", 0.0);
    validate_model(inst.model);
    return inst;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad instance value: ") + e.what());
  }
}

FiniteInstance load_finite_instance(const std::filesystem::path& path) {
  return parse_finite_instance(read_file(path), path.parent_path());
}

}  // namespace safevisor

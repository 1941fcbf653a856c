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


#include "safevisor/controllers.hpp"

#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "safevisor/error.hpp"

namespace safevisor {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// Uniform draws inside a box from a shared engine.
class BoxSampler {
 public:
  BoxSampler(const Box& box, std::uint64_t seed) : box_(box), rng_(seed) {}

  Vector operator()() {
    Vector v(box_.dim());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v[i] = box_.lower[i] + unit_(rng_) * (box_.upper[i] - box_.lower[i]);
    }
    return v;
  }

 private:
  Box box_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace

ControllerFn uniform_random_controller(const Box& u_bounds, std::uint64_t seed) {
  auto sampler = std::make_shared<BoxSampler>(u_bounds, seed);
  return [sampler](const AugmentedState&) { return (*sampler)(); };
}

AdversaryFn uniform_random_adversary(const Box& w_bounds, std::uint64_t seed) {
  auto sampler = std::make_shared<BoxSampler>(w_bounds, seed);
  return [sampler](const AugmentedState&, const Vector&) { return (*sampler)(); };
}

AdversaryFn zero_adversary(Eigen::Index dim) {
  return [dim](const AugmentedState&, const Vector&) { return Vector::Zero(dim); };
}

std::vector<Vector> load_input_script(const std::filesystem::path& path,
                                      Eigen::Index dim, int horizon) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open input script " + path.string());
  std::vector<Vector> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream ls(line);
    std::vector<double> values;
    double v;
    while (ls >> v) values.push_back(v);
    if (!ls.eof()) {
      throw ConfigError("input script line " + std::to_string(lineno) + ": not a number");
    }
    if (values.empty()) continue;
    if (static_cast<Eigen::Index>(values.size()) != dim) {
      throw ConfigError("input script line " + std::to_string(lineno) + ": expected " +
                        std::to_string(dim) + " components");
    }
    out.push_back(Eigen::Map<Vector>(values.data(), dim));
  }
  if (static_cast<int>(out.size()) < horizon) {
    throw ConfigError("input script has " + std::to_string(out.size()) +
                      " inputs, horizon needs " + std::to_string(horizon));
  }
  return out;
}

ControllerFn scripted_controller(std::vector<Vector> inputs) {
  auto data = std::make_shared<std::vector<Vector>>(std::move(inputs));
  return [data](const AugmentedState& st) {
    if (st.k < 0 || static_cast<std::size_t>(st.k) >= data->size()) {
      throw HorizonExceeded("input script exhausted");
    }
    return (*data)[static_cast<std::size_t>(st.k)];
  };
}

ControllerFn advisor_controller(const Runtime& rt) {
  const SupervisorSetup s = rt.supervisor;
  return [s](const AugmentedState& st) -> Vector {
    const Grid& grid = *s.grid;
    if (st.x_hat >= grid.num_cells()) return Vector::Zero(s.game->input_dim());
    const std::size_t u = advisor_input(*s.tables, st.x_hat, st.q, st.k + st.time_offset);
    return refine(*s.relation, s.game->u_bounds, st.x, grid.states.center(st.x_hat),
                  grid.u_hat[u]);
  };
}

}  // namespace safevisor

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

#include "safevisor/game.hpp"

#include <cmath>
#include <sstream>

#include "safevisor/error.hpp"

namespace safevisor {

bool Box::contains(const Vector& v, double tol) const {
  return first_violation(v, tol) < 0;
}

Eigen::Index Box::first_violation(const Vector& v, double tol) const {
  if (v.size() != lower.size()) return 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= lower[i] - tol && v[i] <= upper[i] + tol)) return i;
  }
  return -1;
}

LinearGaussianGame make_double_integrator(double dt, const Matrix& noise_gain,
                                          const Box& x_bounds,
                                          const Box& u_bounds,
                                          const Box& w_bounds) {
  LinearGaussianGame game;
  game.A.resize(2, 2);
  game.A << 1.0, dt, 0.0, 1.0;
  game.B.resize(2, 1);
  game.B << dt * dt / 2.0, dt;
  game.D = -game.B;
  game.C_out.resize(1, 2);
  game.C_out << 1.0, 0.0;
  game.R_noise = noise_gain;
  game.x_bounds = x_bounds;
  game.u_bounds = u_bounds;
  game.w_bounds = w_bounds;
  game.dt = dt;
  return game;
}

namespace {

void check_input(const Box& box, const Vector& v, const char* what) {
  const Eigen::Index bad = box.first_violation(v, kBoxTolerance);
  if (bad < 0) return;
  std::ostringstream os;
  if (v.size() != box.dim()) {
    os << what << " has dimension " << v.size() << ", expected " << box.dim();
  } else {
    os << what << "[" << bad << "] = " << v[bad] << " outside bound ["
       << box.lower[bad] << ", " << box.upper[bad] << "]";
  }
  throw DomainError(os.str());
}

}  // namespace

Vector step_unchecked(const LinearGaussianGame& game, const Vector& x,
                      const Vector& u, const Vector& w, const Vector& noise) {
  return game.A * x + game.B * u + game.D * w + game.R_noise * noise;
}

Vector step_dynamics(const LinearGaussianGame& game, const Vector& x,
                     const Vector& u, const Vector& w, const Vector& noise) {
  check_input(game.u_bounds, u, "u");
  check_input(game.w_bounds, w, "w");
  if (x.size() != game.state_dim() || noise.size() != game.R_noise.cols()) {
    throw DomainError("state or noise dimension mismatch");
  }
  return step_unchecked(game, x, u, w, noise);
}

Vector output(const LinearGaussianGame& game, const Vector& x) {
  return game.C_out * x;
}

Diagnostic validate_game(const LinearGaussianGame& game) {
  Diagnostic d;
  const Eigen::Index s = game.A.rows();
  auto dims = [&](bool good, const std::string& what) {
    if (!good) d.fail("dimension mismatch: " + what);
  };
  dims(game.A.cols() == s && s > 0, "A must be square and non-empty");
  dims(game.B.rows() == s, "B rows must equal state dimension");
  dims(game.D.rows() == s, "D rows must equal state dimension");
  dims(game.C_out.cols() == s, "C columns must equal state dimension");
  dims(game.R_noise.rows() == s && game.R_noise.cols() == s,
       "R must be s x s");
  dims(game.x_bounds.dim() == s && game.x_bounds.upper.size() == s,
       "state box dimension");
  dims(game.u_bounds.dim() == game.B.cols() &&
           game.u_bounds.upper.size() == game.B.cols(),
       "input box dimension");
  dims(game.w_bounds.dim() == game.D.cols() &&
           game.w_bounds.upper.size() == game.D.cols(),
       "adversary box dimension");
  if (!d.ok) return d;

  if (!game.R_noise.allFinite() || game.R_noise.isZero(0.0)) {
    d.fail("noise gain singular");
  } else {
    Eigen::JacobiSVD<Matrix> svd(game.R_noise);
    const auto& sv = svd.singularValues();
    const double smin = sv[sv.size() - 1];
    if (!(smin > 0.0) || sv[0] / smin > 1e12) d.fail("noise gain singular");
  }

  auto box_ok = [&](const Box& b, const std::string& name) {
    for (Eigen::Index i = 0; i < b.dim(); ++i) {
      if (!std::isfinite(b.lower[i]) || !std::isfinite(b.upper[i])) {
        d.fail(name + " is not compact (infinite bound)");
        return;
      }
      if (b.lower[i] > b.upper[i]) {
        d.fail(name + " has lower > upper");
        return;
      }
    }
  };
  box_ok(game.x_bounds, "state box X");
  box_ok(game.u_bounds, "input box U");
  box_ok(game.w_bounds, "adversary box W");

  for (std::size_t i = 0; i < game.x0_set.size(); ++i) {
    if (!game.x_bounds.contains(game.x0_set[i], kBoxTolerance)) {
      d.fail("initial state " + std::to_string(i) + " outside X");
    }
  }
  if (!game.A.allFinite() || !game.B.allFinite() || !game.D.allFinite() ||
      !game.C_out.allFinite()) {
    d.fail("non-finite matrix entry");
  }
  return d;
}

}  // namespace safevisor

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

#ifndef SAFEVISOR_GAME_HPP_
#define SAFEVISOR_GAME_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace safevisor {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Tolerance used when checking that inputs lie inside their boxes.
inline constexpr double kBoxTolerance = 1e-12;

// Axis-aligned box [lower, upper].
struct Box {
  Vector lower;
  Vector upper;

  Eigen::Index dim() const { return lower.size(); }
  bool contains(const Vector& v, double tol = 0.0) const;
  // Index of the first coordinate outside the box, or -1.
  Eigen::Index first_violation(const Vector& v, double tol = 0.0) const;
  Vector width() const { return upper - lower; }
  Vector center() const { return 0.5 * (lower + upper); }
};

// Continuous two-player linear-Gaussian stochastic game
//
//   x(k+1) = A x(k) + B u(k) + D w(k) + R noise(k),   y(k) = C x(k)
//
// with u in U (Player I), w in W (Player II) and noise i.i.d. standard normal.
struct LinearGaussianGame {
  Matrix A;
  Matrix B;
  Matrix D;
  Matrix C_out;
  Matrix R_noise;
  Box x_bounds;
  Box u_bounds;
  Box w_bounds;
  std::vector<Vector> x0_set;
  double dt = 0.0;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
  Eigen::Index adversary_dim() const { return D.cols(); }
  Eigen::Index output_dim() const { return C_out.rows(); }
};

// Double integrator used for each axis of the quadrotor tracking model:
// A = [1 dt; 0 1], B = [dt^2/2; dt], D = -B, C = [1 0].
LinearGaussianGame make_double_integrator(double dt, const Matrix& noise_gain,
                                          const Box& x_bounds,
                                          const Box& u_bounds,
                                          const Box& w_bounds);

// A x + B u + D w + R noise. Throws DomainError if u is outside U or w is
// outside W (tolerance kBoxTolerance).
Vector step_dynamics(const LinearGaussianGame& game, const Vector& x,
                     const Vector& u, const Vector& w, const Vector& noise);

// A x + B u + D w + R noise without the input-box checks.
Vector step_unchecked(const LinearGaussianGame& game, const Vector& x,
                      const Vector& u, const Vector& w, const Vector& noise);

Vector output(const LinearGaussianGame& game, const Vector& x);

struct Diagnostic {
  bool ok = true;
  std::vector<std::string> messages;

  void fail(std::string message) {
    ok = false;
    messages.push_back(std::move(message));
  }
};

// Dimension consistency, noise-gain invertibility, box sanity and initial
// states. Never throws.
Diagnostic validate_game(const LinearGaussianGame& game);

}  // namespace safevisor

#endif  // SAFEVISOR_GAME_HPP_

// Copyright 2026 The oais Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "oais/adapt.hpp"

#include <cmath>

#include "oais/errors.hpp"

namespace oais {

namespace {

void check_grad(const OptimizerState& state, const GradEstimate& grad) {
  if (grad.grad.size() != state.theta.values.size()) {
    throw ContractViolation("gradient/theta dimension mismatch in optimizer step");
  }
}

void check_divergence(const Eigen::VectorXd& theta, long iteration, double radius) {
  const double norm = theta.norm();
  if (!std::isfinite(norm) || norm > radius) {
    throw DivergenceError(iteration, norm);
  }
}

}  // namespace

Scheme scheme_from_string(const std::string& s) {
  if (s == "sgld") return Scheme::kSgld;
  if (s == "sghmc") return Scheme::kSghmc;
  if (s == "sgd") return Scheme::kSgd;
  if (s == "exact-langevin") return Scheme::kExactLangevin;
  throw ConfigError("unknown scheme '" + s + "'");
}

std::string scheme_to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kSgld:
      return "sgld";
    case Scheme::kSghmc:
      return "sghmc";
    case Scheme::kSgd:
      return "sgd";
    case Scheme::kExactLangevin:
      return "exact-langevin";
  }
  return "?";
}

MomentumOrder momentum_order_from_string(const std::string& s) {
  if (s == "as-paper") return MomentumOrder::kOldMomentum;
  if (s == "updated") return MomentumOrder::kUpdatedMomentum;
  throw ConfigError("unknown sghmc_momentum_order '" + s + "'");
}

OptimizerState make_optimizer_state(Scheme scheme, Theta theta0, double eta, double beta,
                                    double gamma, MomentumOrder order, double eta_max,
                                    double divergence_radius) {
  if (eta < 0.0) throw ConfigError("eta must be nonnegative");
  if (eta > eta_max) throw ConfigError("eta exceeds eta_max");
  if (beta <= 0.0) throw ConfigError("beta must be positive (or infinite)");
  if (!theta0.values.allFinite()) throw ConfigError("theta0 must be finite");
  OptimizerState s;
  s.scheme = scheme;
  s.theta = std::move(theta0);
  s.step_size = eta;
  s.inv_temp = beta;
  s.friction = gamma;
  s.momentum_order = order;
  s.eta_max = eta_max;
  s.divergence_radius = divergence_radius;
  if (scheme == Scheme::kSghmc) {
    if (gamma <= 0.0) throw ConfigError("sghmc needs a positive friction gamma");
    s.momentum = Eigen::VectorXd::Zero(s.theta.values.size());
  }
  return s;
}

OptimizerState sgld_step(const OptimizerState& state, const GradEstimate& grad,
                         SeededStream& rng) {
  if (state.scheme != Scheme::kSgld && state.scheme != Scheme::kExactLangevin) {
    throw ContractViolation("sgld_step called with a non-Langevin scheme");
  }
  check_grad(state, grad);
  OptimizerState next = state;
  next.theta.values = state.theta.values - state.step_size * grad.grad;
  if (!std::isinf(state.inv_temp)) {
    const double scale = std::sqrt(2.0 * state.step_size / state.inv_temp);
    next.theta.values += scale * rng.normal_vector(state.theta.values.size());
  }
  next.iteration = state.iteration + 1;
  check_divergence(next.theta.values, next.iteration, state.divergence_radius);
  return next;
}

OptimizerState sghmc_step(const OptimizerState& state, const GradEstimate& grad,
                          SeededStream& rng) {
  if (state.scheme != Scheme::kSghmc || !state.momentum.has_value()) {
    throw ContractViolation("sghmc_step needs an sghmc state with momentum");
  }
  check_grad(state, grad);
  const Eigen::VectorXd& v_old = *state.momentum;
  OptimizerState next = state;
  Eigen::VectorXd v_new =
      v_old - state.step_size * (state.friction * v_old + grad.grad);
  if (!std::isinf(state.inv_temp)) {
    const double scale =
        std::sqrt(2.0 * state.friction * state.step_size / state.inv_temp);
    v_new += scale * rng.normal_vector(v_old.size());
  }
  const Eigen::VectorXd& v_used =
      state.momentum_order == MomentumOrder::kOldMomentum ? v_old : v_new;
  next.theta.values = state.theta.values + state.step_size * v_used;
  next.momentum = std::move(v_new);
  next.iteration = state.iteration + 1;
  check_divergence(next.theta.values, next.iteration, state.divergence_radius);
  if (!next.momentum->allFinite()) {
    throw DivergenceError(next.iteration, next.theta.values.norm());
  }
  return next;
}

OptimizerState sgd_step(const OptimizerState& state, const GradEstimate& grad) {
  if (state.scheme != Scheme::kSgd) {
    throw ContractViolation("sgd_step called with a non-sgd scheme");
  }
  check_grad(state, grad);
  OptimizerState next = state;
  next.theta.values = state.theta.values - state.step_size * grad.grad;
  next.iteration = state.iteration + 1;
  check_divergence(next.theta.values, next.iteration, state.divergence_radius);
  return next;
}

}  // namespace oais

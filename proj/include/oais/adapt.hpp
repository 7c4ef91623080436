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

#ifndef OAIS_ADAPT_HPP
#define OAIS_ADAPT_HPP

#include <optional>
#include <string>

#include <Eigen/Core>

#include "oais/grad.hpp"
#include "oais/model.hpp"
#include "oais/rng.hpp"

namespace oais {

enum class Scheme { kSgld, kSghmc, kSgd, kExactLangevin };

/// Which momentum enters the position update of the underdamped step:
/// the previous momentum (the default) or the freshly updated one. The two
/// orderings differ at O(eta^2) per step but matter numerically.
enum class MomentumOrder { kOldMomentum, kUpdatedMomentum };

Scheme scheme_from_string(const std::string& s);
std::string scheme_to_string(Scheme scheme);
MomentumOrder momentum_order_from_string(const std::string& s);

/// Parameter-update state. `inv_temp` may be +infinity, which disables the
/// injected noise entirely and reduces the Langevin steps to plain descent.
struct OptimizerState {
  Scheme scheme = Scheme::kSgld;
  Theta theta;
  std::optional<Eigen::VectorXd> momentum;  // sghmc only
  double step_size = 0.0;                   // eta
  double inv_temp = std::numeric_limits<double>::infinity();  // beta
  double friction = 0.0;                    // gamma, sghmc only
  long iteration = 0;
  MomentumOrder momentum_order = MomentumOrder::kOldMomentum;
  double eta_max = 1.0;
  double divergence_radius = 1e6;
};

/// Validates the cross-field invariants (momentum presence, eta bounds).
OptimizerState make_optimizer_state(Scheme scheme, Theta theta0, double eta, double beta,
                                    double gamma = 0.0,
                                    MomentumOrder order = MomentumOrder::kOldMomentum,
                                    double eta_max = 1.0, double divergence_radius = 1e6);

/// theta' = theta - eta * grad + sqrt(2 eta / beta) * xi, with xi a fresh
/// standard normal vector. Used by both the stochastic and the
/// exact-gradient Langevin schemes.
OptimizerState sgld_step(const OptimizerState& state, const GradEstimate& grad,
                         SeededStream& rng);

/// V' = V - eta * (gamma V + grad) + sqrt(2 gamma eta / beta) * xi,
/// theta' = theta + eta * V, with V as selected by momentum_order.
OptimizerState sghmc_step(const OptimizerState& state, const GradEstimate& grad,
                          SeededStream& rng);

/// theta' = theta - eta * grad.
OptimizerState sgd_step(const OptimizerState& state, const GradEstimate& grad);

}  // namespace oais

#endif  // OAIS_ADAPT_HPP

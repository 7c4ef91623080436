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

#ifndef OAIS_GRAD_HPP
#define OAIS_GRAD_HPP

#include <optional>
#include <string>

#include <Eigen/Core>

#include "oais/model.hpp"

namespace oais {

enum class EstimatorKind {
  kScore,         ///< score-function form, density evaluations only
  kPathwise,      ///< total derivative through the reparameterization
  kPaperLiteral,  ///< x-gradient composed with the Jacobian only; biased in general
  kExact,         ///< oracle gradient (quadrature), not a Monte Carlo estimate
};

EstimatorKind estimator_from_string(const std::string& s);
std::string estimator_to_string(EstimatorKind kind);

/// One stochastic estimate of the gradient of the chi-square objective,
/// averaged over `batch_size` base-noise draws.
struct GradEstimate {
  Eigen::VectorXd grad;
  EstimatorKind kind = EstimatorKind::kScore;
  int batch_size = 0;
};

/// Score-function estimator: -(1/n) sum_i W^2(x_i) grad_theta log q_theta(x_i)
/// with x_i pushed from the i-th row of eps_batch. W^2 is formed as
/// exp(2 log W), so log-weights up to magnitude ~350 stay finite.
GradEstimate grad_score(const TargetModel& target, const ProposalFamily& proposal,
                        const Theta& theta, const Eigen::MatrixXd& eps_batch);

/// Pathwise estimator: exact total derivative of W^2(g_theta(eps)) in theta,
///   W^2 [ 2 (grad_x log Pi - grad_x log q)^T J_g - 2 grad_theta log q ],
/// averaged over the batch. Unbiased; needs the target gradient.
GradEstimate grad_pathwise(const TargetModel& target, const ProposalFamily& proposal,
                           const Theta& theta, const Eigen::MatrixXd& eps_batch);

/// Literal reparameterized form -W^2 J_g^T grad_x log q, kept as a labeled
/// variant for side-by-side study; biased in general.
GradEstimate grad_paper_literal(const TargetModel& target, const ProposalFamily& proposal,
                                const Theta& theta, const Eigen::MatrixXd& eps_batch);

/// Rescales to Euclidean norm `max_norm` when exceeded; identity otherwise.
GradEstimate clip(GradEstimate estimate, std::optional<double> max_norm);

}  // namespace oais

#endif  // OAIS_GRAD_HPP

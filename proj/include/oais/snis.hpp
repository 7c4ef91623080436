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

#ifndef OAIS_SNIS_HPP
#define OAIS_SNIS_HPP

#include <functional>

#include <Eigen/Core>

#include "oais/model.hpp"

namespace oais {

/// Samples plus their weights. `log_w_unnorm` holds log(Pi/q) per sample;
/// `w_norm` the normalized weights, which sum to one. Samples with zero
/// target density keep weight zero instead of being dropped.
struct WeightedEnsemble {
  Eigen::MatrixXd samples;       // N x dim_x
  Eigen::VectorXd log_w_unnorm;  // N
  Eigen::VectorXd w_norm;        // N, in [0, 1]
};

/// Weight-based quality summary of one ensemble.
struct Diagnostics {
  double ess;      ///< effective sample size, 1 / sum of squared normalized weights
  double r_hat;    ///< mean of squared unnormalized weights
  double rho_hat;  ///< N * sum(W^2) / (sum W)^2, >= 1
  double z_hat;    ///< mean unnormalized weight; estimates the normalizer
};

/// log sum_i exp(v_i), stable under shifts; -inf entries contribute zero.
double log_sum_exp(const Eigen::VectorXd& v);

/// Per-sample log(Pi(x_i) / q_theta(x_i)). Entries equal to -inf are allowed
/// (zero target density); NaN or +inf raises naming the offending index.
Eigen::VectorXd log_weights(const TargetModel& target, const ProposalFamily& proposal,
                            const Theta& theta, const Eigen::MatrixXd& samples);

/// Softmax of the log weights. Invariant to adding a constant to every entry.
Eigen::VectorXd normalize(const Eigen::VectorXd& log_w);

WeightedEnsemble make_ensemble(const TargetModel& target, const ProposalFamily& proposal,
                               const Theta& theta, const Eigen::MatrixXd& samples);

/// Self-normalized estimate sum_i w_i phi(x_i).
double snis_estimate(const WeightedEnsemble& ensemble,
                     const std::function<double(const Eigen::VectorXd&)>& phi);

/// All quantities are computed through log-sum-exp of log_w and 2*log_w;
/// the raw weights are never exponentiated on their own.
Diagnostics diagnostics(const Eigen::VectorXd& log_w);

}  // namespace oais

#endif  // OAIS_SNIS_HPP

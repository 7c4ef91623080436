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

#include "oais/grad.hpp"

#include <cmath>
#include <limits>

#include "oais/errors.hpp"

namespace oais {

namespace {

// log W at x, tolerating zero target density (-inf); anything else
// non-finite raises with the batch index.
double log_weight_at(const TargetModel& target, const ProposalFamily& proposal,
                     const Theta& theta, const Eigen::VectorXd& x, long index) {
  const double lp = target.log_unnorm(x);
  const double lq = proposal.log_density(theta, x);
  if (std::isnan(lp) || lp == std::numeric_limits<double>::infinity()) {
    throw non_finite("non-finite target log-density in gradient batch", index);
  }
  if (!std::isfinite(lq)) {
    throw non_finite("non-finite proposal log-density in gradient batch", index);
  }
  return lp - lq;
}

void check_batch(const ProposalFamily& proposal, const Eigen::MatrixXd& eps_batch) {
  if (eps_batch.rows() < 1) throw ContractViolation("gradient batch must be non-empty");
  if (eps_batch.cols() != proposal.dim_eps()) {
    throw ContractViolation("eps batch has wrong column count for the family");
  }
}

void check_finite(const Eigen::VectorXd& g, long index) {
  if (!g.allFinite()) throw non_finite("non-finite gradient term", index);
}

}  // namespace

EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "score") return EstimatorKind::kScore;
  if (s == "pathwise") return EstimatorKind::kPathwise;
  if (s == "paper-literal") return EstimatorKind::kPaperLiteral;
  if (s == "exact") return EstimatorKind::kExact;
  throw ConfigError("unknown gradient estimator '" + s + "'");
}

std::string estimator_to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kScore:
      return "score";
    case EstimatorKind::kPathwise:
      return "pathwise";
    case EstimatorKind::kPaperLiteral:
      return "paper-literal";
    case EstimatorKind::kExact:
      return "exact";
  }
  return "?";
}

GradEstimate grad_score(const TargetModel& target, const ProposalFamily& proposal,
                        const Theta& theta, const Eigen::MatrixXd& eps_batch) {
  check_batch(proposal, eps_batch);
  const long n = static_cast<long>(eps_batch.rows());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(proposal.dim_theta());
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd x = proposal.push_forward(theta, eps_batch.row(i).transpose());
    const double lw = log_weight_at(target, proposal, theta, x, i);
    if (std::isinf(lw)) continue;  // zero-weight draw contributes nothing
    const double w2 = std::exp(2.0 * lw);
    const Eigen::VectorXd term = -w2 * proposal.score_theta(theta, x);
    check_finite(term, i);
    acc += term;
  }
  return GradEstimate{acc / static_cast<double>(n), EstimatorKind::kScore,
                      static_cast<int>(n)};
}

GradEstimate grad_pathwise(const TargetModel& target, const ProposalFamily& proposal,
                           const Theta& theta, const Eigen::MatrixXd& eps_batch) {
  if (!target.has_grad()) {
    throw UnsupportedEstimatorError("pathwise gradient needs grad_log_unnorm on target '" +
                                    target.name + "'");
  }
  check_batch(proposal, eps_batch);
  const long n = static_cast<long>(eps_batch.rows());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(proposal.dim_theta());
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd eps = eps_batch.row(i).transpose();
    const Eigen::VectorXd x = proposal.push_forward(theta, eps);
    const double lw = log_weight_at(target, proposal, theta, x, i);
    if (std::isinf(lw)) continue;
    const double w2 = std::exp(2.0 * lw);
    const Eigen::MatrixXd jac = proposal.pathwise_jacobian(theta, eps);
    const Eigen::VectorXd dx =
        target.grad_log_unnorm(x) - proposal.grad_x_log_density(theta, x);
    const Eigen::VectorXd term =
        w2 * (2.0 * (jac.transpose() * dx) - 2.0 * proposal.score_theta(theta, x));
    check_finite(term, i);
    acc += term;
  }
  return GradEstimate{acc / static_cast<double>(n), EstimatorKind::kPathwise,
                      static_cast<int>(n)};
}

GradEstimate grad_paper_literal(const TargetModel& target, const ProposalFamily& proposal,
                                const Theta& theta, const Eigen::MatrixXd& eps_batch) {
  check_batch(proposal, eps_batch);
  const long n = static_cast<long>(eps_batch.rows());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(proposal.dim_theta());
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd eps = eps_batch.row(i).transpose();
    const Eigen::VectorXd x = proposal.push_forward(theta, eps);
    const double lw = log_weight_at(target, proposal, theta, x, i);
    if (std::isinf(lw)) continue;
    const double w2 = std::exp(2.0 * lw);
    const Eigen::MatrixXd jac = proposal.pathwise_jacobian(theta, eps);
    const Eigen::VectorXd term =
        -w2 * (jac.transpose() * proposal.grad_x_log_density(theta, x));
    check_finite(term, i);
    acc += term;
  }
  return GradEstimate{acc / static_cast<double>(n), EstimatorKind::kPaperLiteral,
                      static_cast<int>(n)};
}

GradEstimate clip(GradEstimate estimate, std::optional<double> max_norm) {
  if (!max_norm.has_value()) return estimate;
  if (*max_norm <= 0.0) throw ContractViolation("clip norm must be positive");
  const double norm = estimate.grad.norm();
  if (norm > *max_norm) {
    estimate.grad *= *max_norm / norm;
  }
  return estimate;
}

}  // namespace oais

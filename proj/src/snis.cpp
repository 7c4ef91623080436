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

#include "oais/snis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oais/errors.hpp"

namespace oais {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_sum_exp(const Eigen::VectorXd& v) {
  double m = kNegInf;
  for (Eigen::Index i = 0; i < v.size(); ++i) m = std::max(m, v[i]);
  if (std::isinf(m) && m < 0.0) return kNegInf;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

Eigen::VectorXd log_weights(const TargetModel& target, const ProposalFamily& proposal,
                            const Theta& theta, const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  if (n < 1) throw ContractViolation("log_weights needs at least one sample");
  if (samples.cols() != target.dim_x || target.dim_x != proposal.dim_x()) {
    throw ContractViolation("sample/target/proposal dimension mismatch in log_weights");
  }
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = samples.row(i).transpose();
    const double lp = target.log_unnorm(x);
    const double lq = proposal.log_density(theta, x);
    // lp = -inf means zero target density: the sample is kept with weight
    // zero. Anything else non-finite cannot be given a weight.
    if (std::isnan(lp) || lp == std::numeric_limits<double>::infinity()) {
      throw non_finite("non-finite target log-density", i);
    }
    if (!std::isfinite(lq)) {
      throw non_finite("non-finite proposal log-density", i);
    }
    out[i] = lp - lq;
  }
  return out;
}

Eigen::VectorXd normalize(const Eigen::VectorXd& log_w) {
  const double lse = log_sum_exp(log_w);
  if (std::isinf(lse) && lse < 0.0) {
    throw DegenerateEnsembleError("all importance weights are zero");
  }
  Eigen::VectorXd w(log_w.size());
  for (Eigen::Index i = 0; i < log_w.size(); ++i) w[i] = std::exp(log_w[i] - lse);
  return w;
}

WeightedEnsemble make_ensemble(const TargetModel& target, const ProposalFamily& proposal,
                               const Theta& theta, const Eigen::MatrixXd& samples) {
  WeightedEnsemble e;
  e.samples = samples;
  e.log_w_unnorm = log_weights(target, proposal, theta, samples);
  e.w_norm = normalize(e.log_w_unnorm);
  return e;
}

double snis_estimate(const WeightedEnsemble& ensemble,
                     const std::function<double(const Eigen::VectorXd&)>& phi) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ensemble.w_norm.size(); ++i) {
    if (ensemble.w_norm[i] == 0.0) continue;  // zero-weight samples may sit where phi is undefined
    const double v = phi(ensemble.samples.row(i).transpose());
    if (!std::isfinite(v)) throw non_finite("non-finite test function value", i);
    acc += ensemble.w_norm[i] * v;
  }
  return acc;
}

Diagnostics diagnostics(const Eigen::VectorXd& log_w) {
  const Eigen::Index n = log_w.size();
  if (n < 1) throw ContractViolation("diagnostics needs at least one weight");
  const double lse1 = log_sum_exp(log_w);
  if (std::isinf(lse1) && lse1 < 0.0) {
    throw DegenerateEnsembleError("all importance weights are zero");
  }
  const double lse2 = log_sum_exp(2.0 * log_w);
  const double log_n = std::log(static_cast<double>(n));
  Diagnostics d;
  d.z_hat = std::exp(lse1 - log_n);
  d.r_hat = std::exp(lse2 - log_n);
  // Cauchy-Schwarz puts both bounds below; rounding may graze them.
  d.rho_hat = std::max(1.0, std::exp(log_n + lse2 - 2.0 * lse1));
  d.ess = std::clamp(std::exp(2.0 * lse1 - lse2), 1.0, static_cast<double>(n));
  return d;
}

}  // namespace oais

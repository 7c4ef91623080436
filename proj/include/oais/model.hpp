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

#ifndef OAIS_MODEL_HPP
#define OAIS_MODEL_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oais/rng.hpp"

namespace oais {

/// Unnormalized target density. `log_unnorm` evaluates the log of the
/// unnormalized density; the optional gradient enables pathwise gradient
/// estimators; the optional normalizer is only known for synthetic test
/// targets and is used by the quadrature oracle and the test suite.
struct TargetModel {
  int dim_x = 0;
  std::string name;
  std::function<double(const Eigen::VectorXd&)> log_unnorm;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_log_unnorm;
  std::optional<double> log_normalizer;

  bool has_grad() const { return static_cast<bool>(grad_log_unnorm); }
};

/// Proposal parameter vector. For families with a scale block the block
/// stores a lower-triangular factor with log-parameterized diagonal, so the
/// whole parameter space is unconstrained.
struct Theta {
  Eigen::VectorXd values;
};

enum class FamilyKind {
  kGaussianMean,      ///< N(theta, I); theta is the mean.
  kGaussianMeanChol,  ///< N(mu, L L^T); theta = (mu, log diag L, strict lower L).
  kStudentTLocScale,  ///< t_nu(mu, L L^T); same packing, nu fixed.
};

FamilyKind family_from_string(const std::string& s);
std::string family_to_string(FamilyKind kind);

/// Reparameterizable parametric proposal family.
///
/// Sampling factors through base noise: x = push_forward(theta, eps) with
/// eps drawn by sample_eps independently of theta. For the Student-t family
/// the base noise carries one extra standard-normal coordinate per draw that
/// push_forward maps to the chi-square mixing variate, so gradients of
/// push_forward never differentiate through the randomness.
class ProposalFamily {
 public:
  static ProposalFamily gaussian_mean(int dim_x);
  static ProposalFamily gaussian_meanchol(int dim_x);
  static ProposalFamily student_t_locscale(int dim_x, double nu = 5.0);
  static ProposalFamily make(FamilyKind kind, int dim_x, double nu = 5.0);

  FamilyKind kind() const { return kind_; }
  int dim_x() const { return dim_x_; }
  int dim_theta() const { return dim_theta_; }
  int dim_eps() const { return dim_eps_; }
  double nu() const { return nu_; }

  /// n base-noise draws, one per row. All coordinates are standard normal.
  Eigen::MatrixXd sample_eps(SeededStream& rng, int n) const;

  /// x = g_theta(eps).
  Eigen::VectorXd push_forward(const Theta& theta, const Eigen::VectorXd& eps) const;

  /// Exact normalized log density log q_theta(x).
  double log_density(const Theta& theta, const Eigen::VectorXd& x) const;

  /// Gradient of log q_theta(x) in theta at fixed x.
  Eigen::VectorXd score_theta(const Theta& theta, const Eigen::VectorXd& x) const;

  /// Gradient of log q_theta(x) in x at fixed theta.
  Eigen::VectorXd grad_x_log_density(const Theta& theta, const Eigen::VectorXd& x) const;

  /// Jacobian d g_theta(eps) / d theta, dense dim_x x dim_theta.
  Eigen::MatrixXd pathwise_jacobian(const Theta& theta, const Eigen::VectorXd& eps) const;

 private:
  ProposalFamily(FamilyKind kind, int dim_x, double nu);

  struct LocScale {
    Eigen::VectorXd mu;
    Eigen::MatrixXd chol;       // lower triangular, positive diagonal
    Eigen::VectorXd log_diag;   // the unconstrained diagonal block of theta
  };
  LocScale unpack(const Theta& theta) const;
  void check_theta(const Theta& theta) const;

  FamilyKind kind_;
  int dim_x_;
  int dim_theta_;
  int dim_eps_;
  double nu_;
};

/// Gaussian target with diagonal covariance, stored unnormalized as
/// exp(-(x-m)^T diag(v)^{-1} (x-m) / 2). The normalizer is known.
TargetModel make_gaussian_target(const Eigen::VectorXd& mean, const Eigen::VectorXd& var,
                                 const std::string& name = "gauss");

/// One-dimensional mixture of unnormalized Gaussian bumps
/// sum_i w_i exp(-(x-m_i)^2 / (2 v_i)).
TargetModel make_gaussian_mixture_target(const std::vector<double>& weights,
                                         const std::vector<double>& means,
                                         const std::vector<double>& vars,
                                         const std::string& name = "gauss-mix");

/// Target equal to exp(log_scale) * q_theta for a fixed proposal member.
TargetModel make_target_from_proposal(const ProposalFamily& proposal, const Theta& theta,
                                      double log_scale = 0.0);

/// Maps a standard normal variate to a chi-square(nu) variate through the
/// distribution functions. Tail-safe on both sides.
double chi_square_from_normal(double z, double nu);

}  // namespace oais

#endif  // OAIS_MODEL_HPP

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

#include "oais/model.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "oais/errors.hpp"

namespace oais {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2*pi)

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

int theta_dim_for(FamilyKind kind, int dim_x) {
  switch (kind) {
    case FamilyKind::kGaussianMean:
      return dim_x;
    case FamilyKind::kGaussianMeanChol:
    case FamilyKind::kStudentTLocScale:
      return 2 * dim_x + dim_x * (dim_x - 1) / 2;
  }
  return 0;
}

}  // namespace

FamilyKind family_from_string(const std::string& s) {
  if (s == "gaussian-mean") return FamilyKind::kGaussianMean;
  if (s == "gaussian-meanchol") return FamilyKind::kGaussianMeanChol;
  if (s == "student-t-locscale") return FamilyKind::kStudentTLocScale;
  throw ConfigError("unknown proposal family '" + s + "'");
}

std::string family_to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kGaussianMean:
      return "gaussian-mean";
    case FamilyKind::kGaussianMeanChol:
      return "gaussian-meanchol";
    case FamilyKind::kStudentTLocScale:
      return "student-t-locscale";
  }
  return "?";
}

double chi_square_from_normal(double z, double nu) {
  const boost::math::chi_squared dist(nu);
  // Evaluate whichever tail of Phi(z) is small, so neither probability
  // saturates at 1 before the quantile lookup.
  if (z <= 0.0) {
    return boost::math::quantile(dist, std_normal_cdf(z));
  }
  return boost::math::quantile(boost::math::complement(dist, std_normal_cdf(-z)));
}

ProposalFamily::ProposalFamily(FamilyKind kind, int dim_x, double nu)
    : kind_(kind),
      dim_x_(dim_x),
      dim_theta_(theta_dim_for(kind, dim_x)),
      dim_eps_(kind == FamilyKind::kStudentTLocScale ? dim_x + 1 : dim_x),
      nu_(nu) {
  if (dim_x < 1) throw ContractViolation("proposal dim_x must be positive");
  if (kind == FamilyKind::kStudentTLocScale && nu <= 0.0) {
    throw ContractViolation("student-t degrees of freedom must be positive");
  }
}

ProposalFamily ProposalFamily::gaussian_mean(int dim_x) {
  return ProposalFamily(FamilyKind::kGaussianMean, dim_x, 0.0);
}

ProposalFamily ProposalFamily::gaussian_meanchol(int dim_x) {
  return ProposalFamily(FamilyKind::kGaussianMeanChol, dim_x, 0.0);
}

ProposalFamily ProposalFamily::student_t_locscale(int dim_x, double nu) {
  return ProposalFamily(FamilyKind::kStudentTLocScale, dim_x, nu);
}

ProposalFamily ProposalFamily::make(FamilyKind kind, int dim_x, double nu) {
  switch (kind) {
    case FamilyKind::kGaussianMean:
      return gaussian_mean(dim_x);
    case FamilyKind::kGaussianMeanChol:
      return gaussian_meanchol(dim_x);
    case FamilyKind::kStudentTLocScale:
      return student_t_locscale(dim_x, nu);
  }
  throw ContractViolation("bad family kind");
}

void ProposalFamily::check_theta(const Theta& theta) const {
  if (theta.values.size() != dim_theta_) {
    throw ContractViolation("theta has dimension " + std::to_string(theta.values.size()) +
                            ", family needs " + std::to_string(dim_theta_));
  }
}

// Packing for loc-scale families: [mu (d), log diag L (d), strict lower L
// row-major (d(d-1)/2)].
ProposalFamily::LocScale ProposalFamily::unpack(const Theta& theta) const {
  check_theta(theta);
  const int d = dim_x_;
  LocScale out;
  if (kind_ == FamilyKind::kGaussianMean) {
    out.mu = theta.values;
    out.chol = Eigen::MatrixXd::Identity(d, d);
    out.log_diag = Eigen::VectorXd::Zero(d);
    return out;
  }
  out.mu = theta.values.head(d);
  out.log_diag = theta.values.segment(d, d);
  out.chol = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) out.chol(i, i) = std::exp(out.log_diag[i]);
  int pos = 2 * d;
  for (int i = 1; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      out.chol(i, j) = theta.values[pos++];
    }
  }
  return out;
}

Eigen::MatrixXd ProposalFamily::sample_eps(SeededStream& rng, int n) const {
  if (n < 1) throw ContractViolation("sample_eps needs n >= 1");
  Eigen::MatrixXd out(n, dim_eps_);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim_eps_; ++j) {
      out(i, j) = rng.normal();
    }
  }
  return out;
}

Eigen::VectorXd ProposalFamily::push_forward(const Theta& theta, const Eigen::VectorXd& eps) const {
  if (eps.size() != dim_eps_) {
    throw ContractViolation("eps has dimension " + std::to_string(eps.size()) + ", family needs " +
                            std::to_string(dim_eps_));
  }
  if (kind_ == FamilyKind::kGaussianMean) {
    return theta.values + eps;
  }
  if (dim_x_ == 1) {
    check_theta(theta);
    const double scale = std::exp(theta.values[1]);
    double s = eps[0];
    if (kind_ == FamilyKind::kStudentTLocScale) {
      s *= std::sqrt(nu_ / chi_square_from_normal(eps[1], nu_));
    }
    Eigen::VectorXd out(1);
    out[0] = theta.values[0] + scale * s;
    return out;
  }
  const LocScale p = unpack(theta);
  if (kind_ == FamilyKind::kGaussianMeanChol) {
    return p.mu + p.chol * eps;
  }
  // Student-t: the trailing coordinate becomes the chi-square(nu) mixing
  // variate; the leading block is the Gaussian direction.
  const double u = chi_square_from_normal(eps[dim_x_], nu_);
  const Eigen::VectorXd s = eps.head(dim_x_) * std::sqrt(nu_ / u);
  return p.mu + p.chol * s;
}

double ProposalFamily::log_density(const Theta& theta, const Eigen::VectorXd& x) const {
  if (x.size() != dim_x_) throw ContractViolation("x dimension mismatch in log_density");
  const int d = dim_x_;
  if (kind_ == FamilyKind::kGaussianMean) {
    return -0.5 * d * kLogTwoPi - 0.5 * (x - theta.values).squaredNorm();
  }
  if (d == 1) {
    check_theta(theta);
    const double a = theta.values[1];
    const double y = (x[0] - theta.values[0]) * std::exp(-a);
    if (kind_ == FamilyKind::kGaussianMeanChol) {
      return -0.5 * kLogTwoPi - a - 0.5 * y * y;
    }
    return std::lgamma(0.5 * (nu_ + 1.0)) - std::lgamma(0.5 * nu_) -
           0.5 * std::log(nu_ * std::numbers::pi) - a -
           0.5 * (nu_ + 1.0) * std::log1p(y * y / nu_);
  }
  const LocScale p = unpack(theta);
  const Eigen::VectorXd y =
      p.chol.triangularView<Eigen::Lower>().solve(x - p.mu);
  const double log_det = p.log_diag.sum();
  if (kind_ == FamilyKind::kGaussianMeanChol) {
    return -0.5 * d * kLogTwoPi - log_det - 0.5 * y.squaredNorm();
  }
  const double nu = nu_;
  return std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) -
         0.5 * d * std::log(nu * std::numbers::pi) - log_det -
         0.5 * (nu + d) * std::log1p(y.squaredNorm() / nu);
}

Eigen::VectorXd ProposalFamily::score_theta(const Theta& theta, const Eigen::VectorXd& x) const {
  if (x.size() != dim_x_) throw ContractViolation("x dimension mismatch in score_theta");
  const int d = dim_x_;
  if (kind_ == FamilyKind::kGaussianMean) {
    return x - theta.values;
  }
  if (d == 1) {
    check_theta(theta);
    const double inv_scale = std::exp(-theta.values[1]);
    const double y = (x[0] - theta.values[0]) * inv_scale;
    const double c = kind_ == FamilyKind::kGaussianMeanChol ? 1.0 : (nu_ + 1.0) / (nu_ + y * y);
    Eigen::VectorXd grad(2);
    grad[0] = c * y * inv_scale;
    grad[1] = -1.0 + c * y * y;
    return grad;
  }
  const LocScale p = unpack(theta);
  const Eigen::VectorXd y = p.chol.triangularView<Eigen::Lower>().solve(x - p.mu);
  const Eigen::VectorXd z =
      p.chol.transpose().triangularView<Eigen::Upper>().solve(y);
  // c y^T y is the quadratic-form derivative weight: 1 for the Gaussian,
  // (nu+d)/(nu + y^T y) for the Student-t.
  const double c = kind_ == FamilyKind::kGaussianMeanChol
                       ? 1.0
                       : (nu_ + d) / (nu_ + y.squaredNorm());
  Eigen::VectorXd grad(dim_theta_);
  grad.head(d) = c * z;
  for (int i = 0; i < d; ++i) {
    grad[d + i] = -1.0 + c * p.chol(i, i) * z[i] * y[i];
  }
  int pos = 2 * d;
  for (int i = 1; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      grad[pos++] = c * z[i] * y[j];
    }
  }
  return grad;
}

Eigen::VectorXd ProposalFamily::grad_x_log_density(const Theta& theta,
                                                   const Eigen::VectorXd& x) const {
  if (x.size() != dim_x_) throw ContractViolation("x dimension mismatch in grad_x_log_density");
  if (kind_ == FamilyKind::kGaussianMean) {
    return theta.values - x;
  }
  if (dim_x_ == 1) {
    check_theta(theta);
    const double inv_scale = std::exp(-theta.values[1]);
    const double y = (x[0] - theta.values[0]) * inv_scale;
    const double c = kind_ == FamilyKind::kGaussianMeanChol ? 1.0 : (nu_ + 1.0) / (nu_ + y * y);
    Eigen::VectorXd grad(1);
    grad[0] = -c * y * inv_scale;
    return grad;
  }
  const LocScale p = unpack(theta);
  const Eigen::VectorXd y = p.chol.triangularView<Eigen::Lower>().solve(x - p.mu);
  const Eigen::VectorXd z =
      p.chol.transpose().triangularView<Eigen::Upper>().solve(y);
  const double c = kind_ == FamilyKind::kGaussianMeanChol
                       ? 1.0
                       : (nu_ + dim_x_) / (nu_ + y.squaredNorm());
  return -c * z;
}

Eigen::MatrixXd ProposalFamily::pathwise_jacobian(const Theta& theta,
                                                  const Eigen::VectorXd& eps) const {
  if (eps.size() != dim_eps_) throw ContractViolation("eps dimension mismatch in pathwise_jacobian");
  const int d = dim_x_;
  if (kind_ == FamilyKind::kGaussianMean) {
    return Eigen::MatrixXd::Identity(d, d);
  }
  if (d == 1) {
    check_theta(theta);
    const double scale = std::exp(theta.values[1]);
    double s1 = eps[0];
    if (kind_ == FamilyKind::kStudentTLocScale) {
      s1 *= std::sqrt(nu_ / chi_square_from_normal(eps[1], nu_));
    }
    Eigen::MatrixXd jac(1, 2);
    jac(0, 0) = 1.0;
    jac(0, 1) = scale * s1;
    return jac;
  }
  const LocScale p = unpack(theta);
  Eigen::VectorXd s;
  if (kind_ == FamilyKind::kGaussianMeanChol) {
    s = eps;
  } else {
    const double u = chi_square_from_normal(eps[d], nu_);
    s = eps.head(d) * std::sqrt(nu_ / u);
  }
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d, dim_theta_);
  jac.leftCols(d).setIdentity();
  for (int i = 0; i < d; ++i) {
    jac(i, d + i) = p.chol(i, i) * s[i];
  }
  int pos = 2 * d;
  for (int i = 1; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      jac(i, pos++) = s[j];
    }
  }
  return jac;
}

TargetModel make_gaussian_target(const Eigen::VectorXd& mean, const Eigen::VectorXd& var,
                                 const std::string& name) {
  if (mean.size() != var.size() || mean.size() < 1) {
    throw ContractViolation("gaussian target needs matching mean/var of positive dimension");
  }
  if ((var.array() <= 0.0).any()) {
    throw ContractViolation("gaussian target variances must be positive");
  }
  TargetModel t;
  t.dim_x = static_cast<int>(mean.size());
  t.name = name;
  double log_z = 0.0;
  for (Eigen::Index i = 0; i < var.size(); ++i) log_z += 0.5 * std::log(2.0 * std::numbers::pi * var[i]);
  t.log_normalizer = log_z;
  t.log_unnorm = [mean, var](const Eigen::VectorXd& x) {
    return -0.5 * ((x - mean).array().square() / var.array()).sum();
  };
  t.grad_log_unnorm = [mean, var](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(-((x - mean).array() / var.array()));
  };
  return t;
}

TargetModel make_gaussian_mixture_target(const std::vector<double>& weights,
                                         const std::vector<double>& means,
                                         const std::vector<double>& vars,
                                         const std::string& name) {
  const std::size_t m = weights.size();
  if (m == 0 || means.size() != m || vars.size() != m) {
    throw ContractViolation("mixture target needs matching weights/means/vars");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (weights[i] <= 0.0 || vars[i] <= 0.0) {
      throw ContractViolation("mixture weights and variances must be positive");
    }
  }
  TargetModel t;
  t.dim_x = 1;
  t.name = name;
  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) z += weights[i] * std::sqrt(2.0 * std::numbers::pi * vars[i]);
  t.log_normalizer = std::log(z);
  t.log_unnorm = [weights, means, vars, m](const Eigen::VectorXd& x) {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> comp(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double dx = x[0] - means[i];
      comp[i] = std::log(weights[i]) - 0.5 * dx * dx / vars[i];
      best = std::max(best, comp[i]);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += std::exp(comp[i] - best);
    return best + std::log(acc);
  };
  t.grad_log_unnorm = [weights, means, vars, m](const Eigen::VectorXd& x) {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> comp(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double dx = x[0] - means[i];
      comp[i] = std::log(weights[i]) - 0.5 * dx * dx / vars[i];
      best = std::max(best, comp[i]);
    }
    double acc = 0.0;
    double grad = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = std::exp(comp[i] - best);
      acc += r;
      grad += r * (-(x[0] - means[i]) / vars[i]);
    }
    Eigen::VectorXd out(1);
    out[0] = grad / acc;
    return out;
  };
  return t;
}

TargetModel make_target_from_proposal(const ProposalFamily& proposal, const Theta& theta,
                                      double log_scale) {
  TargetModel t;
  t.dim_x = proposal.dim_x();
  t.name = "proposal-member";
  t.log_normalizer = log_scale;
  t.log_unnorm = [proposal, theta, log_scale](const Eigen::VectorXd& x) {
    return proposal.log_density(theta, x) + log_scale;
  };
  t.grad_log_unnorm = [proposal, theta](const Eigen::VectorXd& x) {
    return proposal.grad_x_log_density(theta, x);
  };
  return t;
}

}  // namespace oais

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

#ifndef OAIS_ORACLE_HPP
#define OAIS_ORACLE_HPP

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "oais/grad.hpp"
#include "oais/model.hpp"

namespace oais {

/// Tensor-grid trapezoid quadrature description. Bounds must be wide enough
/// that the integrand at the boundary is negligible relative to its maximum;
/// integration warns (or, for the chi-square objective, fails) otherwise.
struct QuadratureSpec {
  std::vector<std::array<double, 2>> bounds;  // one [lo, hi] per dimension
  int nodes_per_dim = 2001;

  enum class Rule { kTrapezoid };
  Rule rule = Rule::kTrapezoid;

  static QuadratureSpec box(int dim, double lo, double hi, int nodes = 2001);
};

/// Fixed evaluation grid: nodes (one point per row) and trapezoid weights.
struct QuadGrid {
  Eigen::MatrixXd nodes;    // M x dim
  Eigen::VectorXd weights;  // M
  std::vector<bool> on_boundary;
};

QuadGrid build_grid(const QuadratureSpec& spec, int dim);

/// Kahan-compensated weighted sum over a grid, with the boundary/interior
/// maxima needed for decay checks.
struct GridIntegral {
  double value = 0.0;
  double max_abs = 0.0;
  double boundary_max_abs = 0.0;
};

GridIntegral integrate_on_grid(const QuadGrid& grid,
                               const std::function<double(const Eigen::VectorXd&)>& f);

/// Normalizer integral of the unnormalized target. Dimension <= 2.
double quad_Z(const TargetModel& target, const QuadratureSpec& spec);

/// Chi-square objective: integral of Pi^2 / q_theta. Fails with a heavy-tail
/// error when the integrand does not decay inside the bounds, which is how a
/// divergent proposal/target pairing (too-narrow proposal) surfaces.
double quad_R(const TargetModel& target, const ProposalFamily& proposal, const Theta& theta,
              const QuadratureSpec& spec);

/// quad_R / quad_Z^2; at least 1 up to quadrature error.
double quad_rho(const TargetModel& target, const ProposalFamily& proposal, const Theta& theta,
                const QuadratureSpec& spec);

/// Central finite differences of quad_R in theta, step h_rel*(1+|theta_j|).
Eigen::VectorXd quad_grad_R(const TargetModel& target, const ProposalFamily& proposal,
                            const Theta& theta, const QuadratureSpec& spec,
                            double h_rel = 1e-4);

/// R((t1+t2)/2) - (R(t1)+R(t2))/2. Non-positive (up to tolerance) wherever
/// the objective is midpoint convex; a strictly positive value certifies
/// non-convexity.
double midpoint_convexity_check(const TargetModel& target, const ProposalFamily& proposal,
                                const Theta& theta1, const Theta& theta2,
                                const QuadratureSpec& spec);

/// Expectation of phi under the normalized target, by quadrature.
double quad_expectation(const TargetModel& target,
                        const std::function<double(const Eigen::VectorXd&)>& phi,
                        const QuadratureSpec& spec);

/// Empirical smoothness/growth summary of a gradient field over a grid:
/// a pairwise lower bound on the Lipschitz constant and a least-squares
/// linear fit of <grad(t), t> against |t|^2.
struct ProbeReport {
  double lipschitz_hat = 0.0;
  double dissip_m_hat = 0.0;
  double dissip_b_hat = 0.0;
  int probe_points = 0;
  double violation_fraction = 0.0;  ///< grid points falling below the fitted line
};

ProbeReport assumption_probe(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_fn,
                             const std::vector<Eigen::VectorXd>& grid);

/// Probes the chi-square objective of a concrete problem. `estimator`
/// selects how the gradient field is evaluated: kExact uses finite
/// differences of the quadrature objective, the Monte Carlo kinds average
/// `draws` single-sample estimates per grid point (seeded, deterministic).
ProbeReport assumption_probe(const TargetModel& target, const ProposalFamily& proposal,
                             const std::vector<Eigen::VectorXd>& grid, EstimatorKind estimator,
                             const QuadratureSpec& spec, int draws = 10'000);

/// Probe over a lattice (dim <= 2) or seeded uniform box sample (dim > 2)
/// of at least `min_points` points inside [-radius, radius]^dim.
std::vector<Eigen::VectorXd> probe_grid(int dim_theta, double radius, int min_points);

/// Plug-in estimate of the stationary sub-optimality constant
/// d/(2 beta) * log(e * L * (b beta / d + 1) / m) from probe estimates.
/// Meaningful only when m_hat > 0; NaN otherwise.
double c3_estimate(const ProbeReport& report, double beta, int dim);

/// Reusable chi-square-objective quadrature against a fixed target and grid;
/// caches the target evaluations so per-theta calls only touch the proposal.
class CachedRQuad {
 public:
  CachedRQuad(const TargetModel& target, const QuadratureSpec& spec);

  double R(const ProposalFamily& proposal, const Theta& theta) const;
  double Z() const { return z_; }
  const QuadGrid& grid() const { return grid_; }

 private:
  QuadGrid grid_;
  Eigen::VectorXd two_log_pi_;  // 2 log Pi at each node
  double z_;
};

}  // namespace oais

#endif  // OAIS_ORACLE_HPP

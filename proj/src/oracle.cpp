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

#include "oais/oracle.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "oais/errors.hpp"
#include "oais/grad.hpp"
#include "oais/rng.hpp"

namespace oais {

namespace {

constexpr double kBoundaryWarnFraction = 1e-12;
constexpr double kBoundaryFailFraction = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dim(int dim) {
  if (dim > 2) {
    throw UnsupportedDimensionError("quadrature supports dimension <= 2, got " +
                                    std::to_string(dim));
  }
  if (dim < 1) throw ContractViolation("quadrature dimension must be positive");
}

// R integrand in the log domain. Values whose log exceeds the double range
// count as divergent.
double r_integrand(double two_log_pi, double log_q) {
  if (std::isinf(two_log_pi) && two_log_pi < 0.0) return 0.0;
  const double e = two_log_pi - log_q;
  if (e > 700.0) throw HeavyTailError("chi-square integrand overflows inside the bounds");
  return std::exp(e);
}

}  // namespace

QuadratureSpec QuadratureSpec::box(int dim, double lo, double hi, int nodes) {
  QuadratureSpec spec;
  spec.bounds.assign(static_cast<std::size_t>(dim), {lo, hi});
  spec.nodes_per_dim = nodes;
  return spec;
}

QuadGrid build_grid(const QuadratureSpec& spec, int dim) {
  check_dim(dim);
  if (static_cast<int>(spec.bounds.size()) != dim) {
    throw ContractViolation("quadrature bounds do not match the problem dimension");
  }
  const int n = spec.nodes_per_dim;
  if (n < 3) throw ContractViolation("nodes_per_dim must be at least 3");
  for (const auto& b : spec.bounds) {
    if (!(b[0] < b[1])) throw ContractViolation("quadrature bounds must satisfy lo < hi");
  }

  QuadGrid grid;
  if (dim == 1) {
    const double lo = spec.bounds[0][0];
    const double h = (spec.bounds[0][1] - lo) / (n - 1);
    grid.nodes.resize(n, 1);
    grid.weights.resize(n);
    grid.on_boundary.assign(n, false);
    for (int i = 0; i < n; ++i) {
      grid.nodes(i, 0) = lo + i * h;
      grid.weights[i] = (i == 0 || i == n - 1) ? 0.5 * h : h;
    }
    grid.on_boundary.front() = grid.on_boundary.back() = true;
    return grid;
  }

  const double lo0 = spec.bounds[0][0];
  const double lo1 = spec.bounds[1][0];
  const double h0 = (spec.bounds[0][1] - lo0) / (n - 1);
  const double h1 = (spec.bounds[1][1] - lo1) / (n - 1);
  grid.nodes.resize(static_cast<Eigen::Index>(n) * n, 2);
  grid.weights.resize(static_cast<Eigen::Index>(n) * n);
  grid.on_boundary.assign(static_cast<std::size_t>(n) * n, false);
  Eigen::Index row = 0;
  for (int i = 0; i < n; ++i) {
    const double wi = (i == 0 || i == n - 1) ? 0.5 * h0 : h0;
    for (int j = 0; j < n; ++j, ++row) {
      const double wj = (j == 0 || j == n - 1) ? 0.5 * h1 : h1;
      grid.nodes(row, 0) = lo0 + i * h0;
      grid.nodes(row, 1) = lo1 + j * h1;
      grid.weights[row] = wi * wj;
      grid.on_boundary[static_cast<std::size_t>(row)] =
          (i == 0 || i == n - 1 || j == 0 || j == n - 1);
    }
  }
  return grid;
}

GridIntegral integrate_on_grid(const QuadGrid& grid,
                               const std::function<double(const Eigen::VectorXd&)>& f) {
  GridIntegral out;
  double comp = 0.0;  // Kahan carry
  for (Eigen::Index i = 0; i < grid.weights.size(); ++i) {
    const double v = f(grid.nodes.row(i).transpose());
    const double a = std::abs(v);
    out.max_abs = std::max(out.max_abs, a);
    if (grid.on_boundary[static_cast<std::size_t>(i)]) {
      out.boundary_max_abs = std::max(out.boundary_max_abs, a);
    }
    const double y = grid.weights[i] * v - comp;
    const double t = out.value + y;
    comp = (t - out.value) - y;
    out.value = t;
  }
  return out;
}

double quad_Z(const TargetModel& target, const QuadratureSpec& spec) {
  check_dim(target.dim_x);
  const QuadGrid grid = build_grid(spec, target.dim_x);
  const GridIntegral r = integrate_on_grid(
      grid, [&](const Eigen::VectorXd& x) { return std::exp(target.log_unnorm(x)); });
  if (r.max_abs > 0.0 && r.boundary_max_abs > kBoundaryWarnFraction * r.max_abs) {
    std::cerr << "warning: target '" << target.name
              << "' has boundary mass fraction " << r.boundary_max_abs / r.max_abs
              << "; widen the quadrature bounds\n";
  }
  return r.value;
}

namespace {

double quad_R_impl(const QuadGrid& grid, const Eigen::VectorXd& two_log_pi,
                   const ProposalFamily& proposal, const Theta& theta) {
  GridIntegral out;
  double comp = 0.0;
  double last = 0.0;
  double before_last = 0.0;
  for (Eigen::Index i = 0; i < grid.weights.size(); ++i) {
    const double lq = proposal.log_density(theta, grid.nodes.row(i).transpose());
    const double v = r_integrand(two_log_pi[i], lq);
    out.max_abs = std::max(out.max_abs, v);
    if (grid.on_boundary[static_cast<std::size_t>(i)]) {
      out.boundary_max_abs = std::max(out.boundary_max_abs, v);
    }
    before_last = last;
    last = v;
    const double y = grid.weights[i] * v - comp;
    const double t = out.value + y;
    comp = (t - out.value) - y;
    out.value = t;
  }
  if (out.max_abs > 0.0) {
    const bool massive_boundary = out.boundary_max_abs > kBoundaryFailFraction * out.max_abs;
    // A tail that stopped decaying is divergence even when still small.
    const bool rising_tail =
        last >= before_last * (1.0 - 1e-12) && last > 1e-12 * out.max_abs && last > 0.0;
    if (massive_boundary || rising_tail) {
      throw HeavyTailError("chi-square integrand does not decay inside the quadrature bounds");
    }
  }
  return out.value;
}

Eigen::VectorXd two_log_pi_on_grid(const TargetModel& target, const QuadGrid& grid) {
  Eigen::VectorXd out(grid.weights.size());
  for (Eigen::Index i = 0; i < grid.weights.size(); ++i) {
    out[i] = 2.0 * target.log_unnorm(grid.nodes.row(i).transpose());
  }
  return out;
}

}  // namespace

double quad_R(const TargetModel& target, const ProposalFamily& proposal, const Theta& theta,
              const QuadratureSpec& spec) {
  check_dim(target.dim_x);
  if (target.dim_x != proposal.dim_x()) {
    throw ContractViolation("target/proposal dimension mismatch in quad_R");
  }
  const QuadGrid grid = build_grid(spec, target.dim_x);
  return quad_R_impl(grid, two_log_pi_on_grid(target, grid), proposal, theta);
}

double quad_rho(const TargetModel& target, const ProposalFamily& proposal, const Theta& theta,
                const QuadratureSpec& spec) {
  const double z = quad_Z(target, spec);
  const double r = quad_R(target, proposal, theta, spec);
  return r / (z * z);
}

Eigen::VectorXd quad_grad_R(const TargetModel& target, const ProposalFamily& proposal,
                            const Theta& theta, const QuadratureSpec& spec, double h_rel) {
  const CachedRQuad cached(target, spec);
  const int d = proposal.dim_theta();
  Eigen::VectorXd grad(d);
  for (int j = 0; j < d; ++j) {
    const double h = h_rel * (1.0 + std::abs(theta.values[j]));
    Theta plus{theta.values};
    Theta minus{theta.values};
    plus.values[j] += h;
    minus.values[j] -= h;
    grad[j] = (cached.R(proposal, plus) - cached.R(proposal, minus)) / (2.0 * h);
  }
  return grad;
}

double midpoint_convexity_check(const TargetModel& target, const ProposalFamily& proposal,
                                const Theta& theta1, const Theta& theta2,
                                const QuadratureSpec& spec) {
  const CachedRQuad cached(target, spec);
  const Theta mid{0.5 * (theta1.values + theta2.values)};
  const double r1 = cached.R(proposal, theta1);
  const double r2 = cached.R(proposal, theta2);
  const double rm = cached.R(proposal, mid);
  return rm - 0.5 * (r1 + r2);
}

double quad_expectation(const TargetModel& target,
                        const std::function<double(const Eigen::VectorXd&)>& phi,
                        const QuadratureSpec& spec) {
  check_dim(target.dim_x);
  const QuadGrid grid = build_grid(spec, target.dim_x);
  double num = 0.0, den = 0.0, cn = 0.0, cd = 0.0;
  for (Eigen::Index i = 0; i < grid.weights.size(); ++i) {
    const Eigen::VectorXd x = grid.nodes.row(i).transpose();
    const double p = std::exp(target.log_unnorm(x));
    double y = grid.weights[i] * p - cd;
    double t = den + y;
    cd = (t - den) - y;
    den = t;
    y = grid.weights[i] * p * phi(x) - cn;
    t = num + y;
    cn = (t - num) - y;
    num = t;
  }
  return num / den;
}

ProbeReport assumption_probe(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_fn,
    const std::vector<Eigen::VectorXd>& grid) {
  const std::size_t p = grid.size();
  if (p < 2) throw ContractViolation("assumption probe needs at least two grid points");
  std::vector<Eigen::VectorXd> grads(p);
  for (std::size_t i = 0; i < p; ++i) grads[i] = grad_fn(grid[i]);

  ProbeReport report;
  report.probe_points = static_cast<int>(p);

  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const double dt = (grid[i] - grid[j]).norm();
      if (dt == 0.0) continue;
      report.lipschitz_hat =
          std::max(report.lipschitz_hat, (grads[i] - grads[j]).norm() / dt);
    }
  }

  // Ordinary least squares of <grad, theta> on |theta|^2 with intercept;
  // the intercept enters the growth inequality with a flipped sign.
  double ms = 0.0, my = 0.0;
  std::vector<double> s(p), y(p);
  for (std::size_t i = 0; i < p; ++i) {
    s[i] = grid[i].squaredNorm();
    y[i] = grads[i].dot(grid[i]);
    ms += s[i];
    my += y[i];
  }
  ms /= static_cast<double>(p);
  my /= static_cast<double>(p);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    sxx += (s[i] - ms) * (s[i] - ms);
    sxy += (s[i] - ms) * (y[i] - my);
  }
  report.dissip_m_hat = sxx > 0.0 ? sxy / sxx : 0.0;
  report.dissip_b_hat = report.dissip_m_hat * ms - my;

  int violations = 0;
  for (std::size_t i = 0; i < p; ++i) {
    const double lower = report.dissip_m_hat * s[i] - report.dissip_b_hat;
    if (y[i] < lower - 1e-9 * (1.0 + std::abs(y[i]))) ++violations;
  }
  report.violation_fraction = static_cast<double>(violations) / static_cast<double>(p);
  return report;
}

ProbeReport assumption_probe(const TargetModel& target, const ProposalFamily& proposal,
                             const std::vector<Eigen::VectorXd>& grid, EstimatorKind estimator,
                             const QuadratureSpec& spec, int draws) {
  if (estimator == EstimatorKind::kExact) {
    const CachedRQuad cached(target, spec);
    const auto grad_fn = [&](const Eigen::VectorXd& t) {
      const int d = proposal.dim_theta();
      Eigen::VectorXd g(d);
      for (int j = 0; j < d; ++j) {
        const double h = 1e-4 * (1.0 + std::abs(t[j]));
        Theta plus{t}, minus{t};
        plus.values[j] += h;
        minus.values[j] -= h;
        g[j] = (cached.R(proposal, plus) - cached.R(proposal, minus)) / (2.0 * h);
      }
      return g;
    };
    return assumption_probe(grad_fn, grid);
  }
  if (draws < 1) throw ContractViolation("probe needs at least one draw per point");
  // Deterministic per-point substream keyed by the grid position.
  std::vector<Eigen::VectorXd> grads;
  grads.reserve(grid.size());
  const SeededStream base(0x9A0BE5EEDULL);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SeededStream rng = base.substream(i);
    const Theta theta{grid[i]};
    const Eigen::MatrixXd eps = proposal.sample_eps(rng, draws);
    switch (estimator) {
      case EstimatorKind::kScore:
        grads.push_back(grad_score(target, proposal, theta, eps).grad);
        break;
      case EstimatorKind::kPathwise:
        grads.push_back(grad_pathwise(target, proposal, theta, eps).grad);
        break;
      case EstimatorKind::kPaperLiteral:
        grads.push_back(grad_paper_literal(target, proposal, theta, eps).grad);
        break;
      case EstimatorKind::kExact:
        break;
    }
  }
  std::size_t index = 0;
  return assumption_probe([&](const Eigen::VectorXd&) { return grads[index++]; }, grid);
}

std::vector<Eigen::VectorXd> probe_grid(int dim_theta, double radius, int min_points) {
  if (dim_theta < 1) throw ContractViolation("probe dimension must be positive");
  if (radius <= 0.0) throw ContractViolation("probe radius must be positive");
  if (min_points < 2) throw ContractViolation("probe needs at least two points");
  std::vector<Eigen::VectorXd> out;
  if (dim_theta == 1) {
    const int n = std::max(min_points, 2);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd t(1);
      t[0] = -radius + 2.0 * radius * i / (n - 1);
      out.push_back(t);
    }
    return out;
  }
  if (dim_theta == 2) {
    int side = 2;
    while (side * side < min_points) ++side;
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        Eigen::VectorXd t(2);
        t[0] = -radius + 2.0 * radius * i / (side - 1);
        t[1] = -radius + 2.0 * radius * j / (side - 1);
        out.push_back(t);
      }
    }
    return out;
  }
  SeededStream rng(0x9E37u ^ static_cast<std::uint64_t>(dim_theta));
  for (int i = 0; i < min_points; ++i) {
    Eigen::VectorXd t(dim_theta);
    for (int j = 0; j < dim_theta; ++j) t[j] = radius * (2.0 * rng.uniform() - 1.0);
    out.push_back(t);
  }
  return out;
}

double c3_estimate(const ProbeReport& report, double beta, int dim) {
  if (report.dissip_m_hat <= 0.0 || beta <= 0.0 || dim < 1) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double b = std::max(report.dissip_b_hat, 0.0);
  const double inner =
      std::exp(1.0) * report.lipschitz_hat * (b * beta / dim + 1.0) / report.dissip_m_hat;
  if (inner <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return dim / (2.0 * beta) * std::log(inner);
}

CachedRQuad::CachedRQuad(const TargetModel& target, const QuadratureSpec& spec)
    : grid_(build_grid(spec, target.dim_x)),
      two_log_pi_(two_log_pi_on_grid(target, grid_)) {
  GridIntegral zi;
  double comp = 0.0;
  for (Eigen::Index i = 0; i < grid_.weights.size(); ++i) {
    const double v = std::exp(0.5 * two_log_pi_[i]);
    const double y = grid_.weights[i] * v - comp;
    const double t = zi.value + y;
    comp = (t - zi.value) - y;
    zi.value = t;
  }
  z_ = zi.value;
}

double CachedRQuad::R(const ProposalFamily& proposal, const Theta& theta) const {
  return quad_R_impl(grid_, two_log_pi_, proposal, theta);
}

}  // namespace oais

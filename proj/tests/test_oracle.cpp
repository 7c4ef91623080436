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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>

#include "oais/errors.hpp"
#include "oais/grad.hpp"
#include "oais/oracle.hpp"
#include "test_util.hpp"

using namespace oais;
using namespace oais::test;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

const QuadratureSpec kSpec = QuadratureSpec::box(1, -15.0, 15.0, 2001);

TargetModel std_normal_target() {
  return make_gaussian_target(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
}

Theta meanchol_theta(double mu, double sigma2) {
  return Theta{vec({mu, 0.5 * std::log(sigma2)})};
}

// closed form for pi = N(0,1), q = N(mu, s2):
// rho = s2 / sqrt(2 s2 - 1) * exp(mu^2 / (2 s2 - 1))
double rho_closed(double mu, double s2) {
  return s2 / std::sqrt(2.0 * s2 - 1.0) * std::exp(mu * mu / (2.0 * s2 - 1.0));
}

}  // namespace

TEST_CASE("quad_Z closed forms") {
  CHECK(quad_Z(std_normal_target(), kSpec) ==
        doctest::Approx(std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-9));

  TargetModel box;
  box.dim_x = 1;
  box.name = "unit-box";
  box.log_unnorm = [](const Eigen::VectorXd& x) {
    return (x[0] >= 0.0 && x[0] < 1.0) ? 0.0
                                       : -std::numeric_limits<double>::infinity();
  };
  // grid aligned so the box edges fall on nodes; error is one trapezoid cell
  QuadratureSpec aligned = QuadratureSpec::box(1, -2.0, 2.0, 4001);
  CHECK(quad_Z(box, aligned) == doctest::Approx(1.0).epsilon(1e-3));

  const TargetModel mix = make_gaussian_mixture_target({0.5, 0.5}, {0.0, 3.0}, {1.0, 1.0});
  CHECK(quad_Z(mix, QuadratureSpec::box(1, -15.0, 18.0, 2001)) ==
        doctest::Approx(std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-9));
}

TEST_CASE("quad_Z matches the known normalizer on built-in targets") {
  const TargetModel g2 = make_gaussian_target(vec({0.5, -0.5}), vec({1.0, 2.0}));
  const double z = quad_Z(g2, QuadratureSpec::box(2, -15.0, 15.0, 1201));
  CHECK(z == doctest::Approx(std::exp(*g2.log_normalizer)).epsilon(1e-6));
}

TEST_CASE("quad_R closed forms and divergence detection") {
  const TargetModel target = std_normal_target();
  const ProposalFamily family = ProposalFamily::gaussian_meanchol(1);

  // normalized member of the family as target: R = 1
  const Theta member = meanchol_theta(0.3, 1.5);
  const TargetModel same = make_target_from_proposal(family, member);
  CHECK(quad_R(same, family, member, kSpec) == doctest::Approx(1.0).epsilon(1e-9));

  // pi = N(0,1) unnormalized (Z = sqrt(2 pi)), q = N(0,2)
  const double z = std::sqrt(2.0 * std::numbers::pi);
  CHECK(quad_R(target, family, meanchol_theta(0.0, 2.0), kSpec) ==
        doctest::Approx(z * z * 2.0 / std::sqrt(3.0)).epsilon(1e-9));

  // variance at or below half the target variance diverges
  CHECK_THROWS_AS(quad_R(target, family, meanchol_theta(0.0, 0.5), kSpec), HeavyTailError);
  CHECK_THROWS_AS(quad_R(target, family, meanchol_theta(0.0, 0.3), kSpec), HeavyTailError);
  CHECK_NOTHROW(quad_R(target, family, meanchol_theta(0.0, 0.7), kSpec));

  CHECK_THROWS_AS(
      quad_R(make_gaussian_target(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)),
             ProposalFamily::gaussian_mean(3), Theta{Eigen::VectorXd::Zero(3)},
             QuadratureSpec::box(3, -15.0, 15.0, 101)),
      UnsupportedDimensionError);
}

TEST_CASE("quad_rho closed forms and lower bound") {
  const TargetModel target = std_normal_target();
  const ProposalFamily family = ProposalFamily::gaussian_meanchol(1);

  // q = pi attains the lower bound 1
  CHECK(quad_rho(target, family, meanchol_theta(0.0, 1.0), kSpec) ==
        doctest::Approx(1.0).epsilon(1e-9));

  CHECK(quad_rho(target, family, meanchol_theta(0.0, 2.0), kSpec) ==
        doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-6));

  const double shifted = quad_rho(target, family, meanchol_theta(1.0, 2.0), kSpec);
  CHECK(shifted > 2.0 / std::sqrt(3.0));
  CHECK(shifted == doctest::Approx(rho_closed(1.0, 2.0)).epsilon(1e-9));

  // rho >= 1 wherever it is finite; wide bounds cover the shifted peaks
  const QuadratureSpec wide = QuadratureSpec::box(1, -40.0, 40.0, 4001);
  for (double mu : {-2.0, -0.5, 0.0, 1.5}) {
    for (double s2 : {0.6, 1.0, 3.0}) {
      CHECK(quad_rho(target, family, meanchol_theta(mu, s2), wide) >= 1.0 - 1e-9);
    }
  }
}

TEST_CASE("R = Z^2 rho identity and refinement stability") {
  const TargetModel target = std_normal_target();
  const ProposalFamily family = ProposalFamily::gaussian_meanchol(1);
  const Theta theta = meanchol_theta(0.7, 1.8);
  const double z = quad_Z(target, kSpec);
  const double r = quad_R(target, family, theta, kSpec);
  const double rho = quad_rho(target, family, theta, kSpec);
  CHECK(r == doctest::Approx(z * z * rho).epsilon(1e-9));

  QuadratureSpec doubled = kSpec;
  doubled.nodes_per_dim = 2 * kSpec.nodes_per_dim - 1;
  const double r2 = quad_R(target, family, theta, doubled);
  CHECK(std::abs(r2 - r) / r < 1e-7);
}

TEST_CASE("quad_grad_R: minimum, direction, Monte Carlo agreement") {
  const TargetModel target = std_normal_target();

  // zero gradient at the matching member
  const ProposalFamily chol = ProposalFamily::gaussian_meanchol(1);
  CHECK(quad_grad_R(target, chol, meanchol_theta(0.0, 1.0), kSpec).cwiseAbs().maxCoeff() <
        1e-5);

  // mean component pulls toward zero
  const ProposalFamily mean1 = ProposalFamily::gaussian_mean(1);
  CHECK(quad_grad_R(target, mean1, Theta{vec({0.5})}, kSpec)[0] > 0.0);
  CHECK(quad_grad_R(target, mean1, Theta{vec({-0.5})}, kSpec)[0] < 0.0);

  // matches the score-function Monte Carlo mean at five probe points
  int tag = 0;
  for (double mu : {0.2, 0.5, -0.4, 0.9, -1.1}) {
    const Theta theta{vec({mu})};
    const Eigen::VectorXd oracle = quad_grad_R(target, mean1, theta, kSpec);
    SeededStream rng(300 + tag++);
    const int n = 100'000;
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::MatrixXd eps = mean1.sample_eps(rng, 1);
      const double g = grad_score(target, mean1, theta, eps).grad[0];
      const double delta = g - mean;
      mean += delta / (i + 1);
      m2 += delta * (g - mean);
    }
    const double se = std::sqrt(m2 / (n - 1) / n);
    CHECK(std::abs(mean - oracle[0]) <= 4.0 * se);
  }
}

TEST_CASE("midpoint convexity: location family is convex") {
  const TargetModel target = std_normal_target();
  const ProposalFamily mean1 = ProposalFamily::gaussian_mean(1);
  SeededStream rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    const Theta t1{vec({4.0 * (rng.uniform() - 0.5)})};
    const Theta t2{vec({4.0 * (rng.uniform() - 0.5)})};
    const double v = midpoint_convexity_check(target, mean1, t1, t2, kSpec);
    const double scale = std::max(
        {1.0, quad_R(target, mean1, t1, kSpec), quad_R(target, mean1, t2, kSpec)});
    CHECK(v <= 1e-8 * scale);
  }
  const Theta same{vec({0.8})};
  CHECK(midpoint_convexity_check(target, mean1, same, same, kSpec) == doctest::Approx(0.0));
}

TEST_CASE("midpoint convexity: heavy-tailed family on a bimodal target is not convex") {
  const TargetModel mix = make_gaussian_mixture_target({0.5, 0.5}, {-4.0, 4.0}, {1.0, 1.0});
  const ProposalFamily family = ProposalFamily::student_t_locscale(1);
  const QuadratureSpec spec = QuadratureSpec::box(1, -25.0, 25.0, 2001);
  const CachedRQuad cached(mix, spec);

  // grid search over (mu, log scale) pairs
  std::vector<Theta> grid;
  for (double mu = -6.0; mu <= 6.0 + 1e-9; mu += 1.0) {
    for (double a : {-0.8, -0.4, 0.0, 0.4, 0.8}) {
      grid.push_back(Theta{vec({mu, a})});
    }
  }
  std::vector<double> r_values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) r_values[i] = cached.R(family, grid[i]);

  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const Theta mid{0.5 * (grid[i].values + grid[j].values)};
      const double rm = cached.R(family, mid);
      const double v = rm - 0.5 * (r_values[i] + r_values[j]);
      const double scale = std::max({1.0, rm, r_values[i], r_values[j]});
      best = std::max(best, v / scale);
    }
  }
  MESSAGE("largest relative midpoint violation: ", best);
  CHECK(best > 1e-3);
}

TEST_CASE("assumption probe on synthetic quadratics") {
  // R(t) = |t|^2: grad = 2t, so m = 2, b = 0, Lipschitz constant 2.
  const auto quad_grad = [](const Eigen::VectorXd& t) { return Eigen::VectorXd(2.0 * t); };
  const auto grid1 = probe_grid(1, 3.0, 101);
  CHECK(grid1.size() >= 100);
  const ProbeReport r1 = assumption_probe(quad_grad, grid1);
  CHECK(r1.dissip_m_hat == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r1.dissip_b_hat == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r1.lipschitz_hat == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r1.violation_fraction == doctest::Approx(0.0));

  // R(t) = <t, A t> with A = diag(1, 3): Lipschitz constant 6 on a lattice.
  const auto aniso_grad = [](const Eigen::VectorXd& t) {
    return Eigen::VectorXd(vec({2.0 * t[0], 6.0 * t[1]}));
  };
  const ProbeReport r2 = assumption_probe(aniso_grad, probe_grid(2, 5.0, 100));
  CHECK(r2.lipschitz_hat == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(r2.probe_points >= 100);
}

TEST_CASE("assumption probe on the location family is dissipative") {
  const TargetModel target = std_normal_target();
  const ProposalFamily mean1 = ProposalFamily::gaussian_mean(1);
  const CachedRQuad cached(target, kSpec);
  const auto grad_fn = [&](const Eigen::VectorXd& t) {
    return quad_grad_R(target, mean1, Theta{t}, kSpec);
  };
  const ProbeReport report = assumption_probe(grad_fn, probe_grid(1, 3.0, 101));
  MESSAGE("L_hat=", report.lipschitz_hat, " m_hat=", report.dissip_m_hat,
          " b_hat=", report.dissip_b_hat, " viol=", report.violation_fraction);
  CHECK(std::isfinite(report.lipschitz_hat));
  CHECK(std::isfinite(report.dissip_b_hat));
  CHECK(report.dissip_m_hat > 0.0);

  const double c3 = c3_estimate(report, 1e4, 1);
  MESSAGE("c3 estimate at beta=1e4: ", c3);
  CHECK(std::isfinite(c3));
}

TEST_CASE("assumption probe: estimator-driven overload agrees with the callback form") {
  const TargetModel target = std_normal_target();
  const ProposalFamily mean1 = ProposalFamily::gaussian_mean(1);
  const auto grid = probe_grid(1, 2.0, 21);

  const ProbeReport exact = assumption_probe(target, mean1, grid, EstimatorKind::kExact, kSpec);
  const auto grad_fn = [&](const Eigen::VectorXd& t) {
    return quad_grad_R(target, mean1, Theta{t}, kSpec);
  };
  const ProbeReport callback = assumption_probe(grad_fn, grid);
  CHECK(exact.dissip_m_hat == doctest::Approx(callback.dissip_m_hat));
  CHECK(exact.lipschitz_hat == doctest::Approx(callback.lipschitz_hat));

  // Monte Carlo probe lands near the exact one and is deterministic
  const ProbeReport mc1 =
      assumption_probe(target, mean1, grid, EstimatorKind::kScore, kSpec, 40'000);
  const ProbeReport mc2 =
      assumption_probe(target, mean1, grid, EstimatorKind::kScore, kSpec, 40'000);
  CHECK(mc1.dissip_m_hat == mc2.dissip_m_hat);
  CHECK(mc1.dissip_m_hat == doctest::Approx(exact.dissip_m_hat).epsilon(0.2));
}

TEST_CASE("probe grids cover the requested radius in any dimension") {
  const auto g3 = probe_grid(3, 2.5, 128);
  CHECK(g3.size() >= 128);
  for (const auto& t : g3) {
    CHECK(t.size() == 3);
    CHECK(t.cwiseAbs().maxCoeff() <= 2.5);
  }
}

TEST_CASE("narrow bounds trigger the boundary-mass warning") {
  const TargetModel target = std_normal_target();
  std::ostringstream captured;
  std::streambuf* old = std::cerr.rdbuf(captured.rdbuf());
  const double z = quad_Z(target, QuadratureSpec::box(1, -2.0, 2.0, 401));
  std::cerr.rdbuf(old);
  CHECK(captured.str().find("boundary mass") != std::string::npos);
  CHECK(z < std::sqrt(2.0 * std::numbers::pi));  // truncated mass
}

TEST_CASE("cached quadrature matches the plain entry point") {
  const TargetModel target = std_normal_target();
  const ProposalFamily family = ProposalFamily::gaussian_meanchol(1);
  const CachedRQuad cached(target, kSpec);
  const Theta theta = meanchol_theta(0.4, 1.3);
  CHECK(cached.R(family, theta) == doctest::Approx(quad_R(target, family, theta, kSpec)));
  CHECK(cached.Z() == doctest::Approx(quad_Z(target, kSpec)));
}

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
#include <limits>

#include "oais/adapt.hpp"
#include "oais/errors.hpp"

using namespace oais;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

GradEstimate grad_of(std::initializer_list<double> vals) {
  return GradEstimate{vec(vals), EstimatorKind::kScore, 1};
}

}  // namespace

TEST_CASE("sgld: zero gradient with noise disabled leaves theta unchanged") {
  const OptimizerState s = make_optimizer_state(Scheme::kSgld, Theta{vec({1.0, -2.0})}, 0.1, kInf);
  SeededStream rng(1);
  const OptimizerState next = sgld_step(s, grad_of({0.0, 0.0}), rng);
  CHECK(next.theta.values == s.theta.values);
  CHECK(next.iteration == 1);
}

TEST_CASE("sgld: eta = 0 leaves theta unchanged but advances the counter") {
  const OptimizerState s = make_optimizer_state(Scheme::kSgld, Theta{vec({0.7})}, 0.0, 4.0);
  SeededStream rng(2);
  const OptimizerState next = sgld_step(s, grad_of({123.0}), rng);
  CHECK(next.theta.values == s.theta.values);
  CHECK(next.iteration == 1);
}

TEST_CASE("sgld: seeded step replays bit-exactly from the recorded draw") {
  const std::uint64_t seed = 77;
  SeededStream record(seed);
  const double xi1 = record.normal();

  const OptimizerState s = make_optimizer_state(Scheme::kSgld, Theta{vec({0.0})}, 0.1, 4.0);
  SeededStream rng(seed);
  const OptimizerState next = sgld_step(s, grad_of({1.0}), rng);
  const double expected = (0.0 - 0.1 * 1.0) + std::sqrt(2.0 * 0.1 / 4.0) * xi1;
  CHECK(next.theta.values[0] == expected);

  // replaying the whole step with the same seed reproduces it exactly
  SeededStream rng2(seed);
  const OptimizerState again = sgld_step(s, grad_of({1.0}), rng2);
  CHECK(again.theta.values == next.theta.values);
}

TEST_CASE("sgld with infinite beta equals sgd on every input") {
  SeededStream gen(3);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::VectorXd t0 = gen.normal_vector(3);
    const Eigen::VectorXd g = gen.normal_vector(3) * std::exp(2.0 * gen.uniform());
    const double eta = 0.3 * gen.uniform();
    const OptimizerState langevin =
        make_optimizer_state(Scheme::kSgld, Theta{t0}, eta, kInf);
    const OptimizerState descent = make_optimizer_state(Scheme::kSgd, Theta{t0}, eta, kInf);
    const GradEstimate grad{g, EstimatorKind::kPathwise, 1};
    SeededStream rng(4);
    CHECK(sgld_step(langevin, grad, rng).theta.values ==
          sgd_step(descent, grad).theta.values);
  }
}

TEST_CASE("sgd closed forms") {
  const OptimizerState s = make_optimizer_state(Scheme::kSgd, Theta{vec({2.0})}, 1.0, kInf);
  CHECK(sgd_step(s, grad_of({2.0})).theta.values[0] == doctest::Approx(0.0));
  CHECK(sgd_step(s, grad_of({0.0})).theta.values == s.theta.values);
}

TEST_CASE("sghmc: frozen inputs and the printed update order") {
  // V = 0, grad = 0, noise off: nothing moves
  OptimizerState s = make_optimizer_state(Scheme::kSghmc, Theta{vec({0.5})}, 0.1, kInf, 1.0);
  SeededStream rng(5);
  const OptimizerState still = sghmc_step(s, grad_of({0.0}), rng);
  CHECK(still.theta.values == s.theta.values);
  CHECK(*still.momentum == *s.momentum);

  // gamma = 0, eta = 0.1, V = 1, theta = 0, grad = 2:
  // theta' = theta + eta*V_old = 0.1, V' = 1 - 0.1*2 = 0.8
  OptimizerState moving =
      make_optimizer_state(Scheme::kSghmc, Theta{vec({0.0})}, 0.1, kInf, 1.0);
  moving.friction = 0.0;  // gamma = 0 disables the drag for this closed form
  moving.momentum = vec({1.0});
  const OptimizerState next = sghmc_step(moving, grad_of({2.0}), rng);
  CHECK(next.theta.values[0] == doctest::Approx(0.1));
  CHECK((*next.momentum)[0] == doctest::Approx(0.8));

  // the updated-momentum variant moves with V' instead
  moving.momentum_order = MomentumOrder::kUpdatedMomentum;
  const OptimizerState alt = sghmc_step(moving, grad_of({2.0}), rng);
  CHECK(alt.theta.values[0] == doctest::Approx(0.1 * 0.8));
}

TEST_CASE("sghmc: seeded step replays bit-exactly") {
  const std::uint64_t seed = 99;
  OptimizerState s = make_optimizer_state(Scheme::kSghmc, Theta{vec({0.2})}, 0.05, 10.0, 2.0);
  s.momentum = vec({0.4});
  SeededStream a(seed), b(seed);
  const OptimizerState n1 = sghmc_step(s, grad_of({1.5}), a);
  const OptimizerState n2 = sghmc_step(s, grad_of({1.5}), b);
  CHECK(n1.theta.values == n2.theta.values);
  CHECK(*n1.momentum == *n2.momentum);

  SeededStream record(seed);
  const double xi1 = record.normal();
  const double v_new = (0.4 - 0.05 * (2.0 * 0.4 + 1.5)) + std::sqrt(2.0 * 2.0 * 0.05 / 10.0) * xi1;
  CHECK((*n1.momentum)[0] == v_new);
  CHECK(n1.theta.values[0] == 0.2 + 0.05 * 0.4);
}

TEST_CASE("noise variance matches the injected law") {
  // sgld: var(theta' - theta + eta grad) = 2 eta / beta
  const double eta = 0.05, beta = 7.0;
  const OptimizerState s =
      make_optimizer_state(Scheme::kSgld, Theta{vec({0.3, -0.7})}, eta, beta);
  const GradEstimate g{vec({1.3, -0.2}), EstimatorKind::kScore, 1};
  SeededStream rng(6);
  const int n = 100'000;
  Eigen::ArrayXXd noise(n, 2);
  for (int i = 0; i < n; ++i) {
    const OptimizerState next = sgld_step(s, g, rng);
    noise.row(i) =
        (next.theta.values - s.theta.values + eta * g.grad).transpose().array();
  }
  for (int j = 0; j < 2; ++j) {
    const double var = (noise.col(j) - noise.col(j).mean()).square().sum() / (n - 1);
    CHECK(var == doctest::Approx(2.0 * eta / beta).epsilon(0.02));
  }

  // sghmc: var(V' - V + eta (gamma V + grad)) = 2 gamma eta / beta
  const double gamma = 3.0;
  OptimizerState hm =
      make_optimizer_state(Scheme::kSghmc, Theta{vec({0.0, 0.0})}, eta, beta, gamma);
  hm.momentum = vec({0.5, -0.1});
  Eigen::ArrayXXd vnoise(n, 2);
  for (int i = 0; i < n; ++i) {
    const OptimizerState next = sghmc_step(hm, g, rng);
    vnoise.row(i) =
        (*next.momentum - *hm.momentum + eta * (gamma * *hm.momentum + g.grad))
            .transpose()
            .array();
  }
  for (int j = 0; j < 2; ++j) {
    const double var = (vnoise.col(j) - vnoise.col(j).mean()).square().sum() / (n - 1);
    CHECK(var == doctest::Approx(2.0 * gamma * eta / beta).epsilon(0.02));
  }
}

TEST_CASE("divergence guard carries the iteration and norm") {
  OptimizerState s = make_optimizer_state(Scheme::kSgld, Theta{vec({0.0})}, 1.0, kInf);
  s.divergence_radius = 10.0;
  SeededStream rng(7);
  try {
    sgld_step(s, grad_of({-100.0}), rng);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.iteration() == 1);
    CHECK(e.theta_norm() == doctest::Approx(100.0));
  }
  const GradEstimate nan_grad{vec({std::nan("")}), EstimatorKind::kScore, 1};
  CHECK_THROWS_AS(sgld_step(s, nan_grad, rng), DivergenceError);
}

TEST_CASE("state invariants are validated") {
  CHECK_THROWS_AS(make_optimizer_state(Scheme::kSgld, Theta{vec({0.0})}, 2.0, 1.0),
                  ConfigError);  // eta > eta_max
  CHECK_THROWS_AS(make_optimizer_state(Scheme::kSghmc, Theta{vec({0.0})}, 0.1, 1.0, 0.0),
                  ConfigError);  // sghmc needs friction
  CHECK_THROWS_AS(make_optimizer_state(Scheme::kSgld, Theta{vec({0.0})}, 0.1, -1.0),
                  ConfigError);  // bad beta
  const OptimizerState sgld = make_optimizer_state(Scheme::kSgld, Theta{vec({0.0})}, 0.1, 1.0);
  CHECK_FALSE(sgld.momentum.has_value());
  const OptimizerState sghmc =
      make_optimizer_state(Scheme::kSghmc, Theta{vec({0.0})}, 0.1, 1.0, 2.0);
  CHECK(sghmc.momentum.has_value());
  SeededStream rng(8);
  CHECK_THROWS_AS(sghmc_step(sgld, grad_of({0.0}), rng), ContractViolation);
  CHECK_THROWS_AS(sgd_step(sgld, grad_of({0.0})), ContractViolation);
}

TEST_CASE("exact-langevin states use the langevin update") {
  const OptimizerState s =
      make_optimizer_state(Scheme::kExactLangevin, Theta{vec({1.0})}, 0.1, kInf);
  SeededStream rng(9);
  const OptimizerState next = sgld_step(s, grad_of({1.0}), rng);
  CHECK(next.theta.values[0] == doctest::Approx(0.9));
}

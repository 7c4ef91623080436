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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oais/errors.hpp"
#include "oais/harness.hpp"

using namespace oais;

namespace {

const char* kBaseConfig = R"(
# 1-d Gaussian problem
[target]
name = "gauss"
mean = [0.0]
var = [1.0]

[proposal]
family = "gaussian-mean"
dim = 1
theta0 = [0.5]

[optimizer]
scheme = "sgld"
eta = 1e-3
beta = 1e4
grad_estimator = "pathwise"
grad_batch = 1

[run]
N = 20
K = 10
replicates = 3
master_seed = 42
test_functions = ["tanh", "indicator:0.5", "const1"]
quad_nodes = 801
)";

RunConfig base_config() { return parse_config(kBaseConfig); }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("toml subset parsing") {
  const TomlDocument doc = parse_toml("[a]\nx = 1\ny = 2.5 # comment\nz = \"s\"\nw = [1, 2]\n"
                                      "f = inf\nb = true\n");
  CHECK(std::get<std::int64_t>(doc.at("a").at("x").data) == 1);
  CHECK(std::get<double>(doc.at("a").at("y").data) == doctest::Approx(2.5));
  CHECK(std::get<std::string>(doc.at("a").at("z").data) == "s");
  CHECK(doc.at("a").at("w").is_array());
  CHECK(std::isinf(std::get<double>(doc.at("a").at("f").data)));
  CHECK(std::get<bool>(doc.at("a").at("b").data));

  CHECK_THROWS_AS(parse_toml("x = 1\n"), ConfigError);          // key outside section
  CHECK_THROWS_AS(parse_toml("[a]\nx = 1\nx = 2\n"), ConfigError);  // duplicate
  CHECK_THROWS_AS(parse_toml("[a]\nx 1\n"), ConfigError);       // missing '='
}

TEST_CASE("config binding and validation") {
  const RunConfig c = base_config();
  CHECK(c.n_samples == 20);
  CHECK(c.n_iterations == 10);
  CHECK(c.replicates == 3);
  CHECK(c.master_seed == 42);
  CHECK(c.test_functions.size() == 3);
  CHECK(c.test_functions[1].name == "indicator");
  CHECK(c.test_functions[1].threshold == doctest::Approx(0.5));
  CHECK(c.quad.nodes_per_dim == 801);
  CHECK(c.quad.bounds.size() == 1);

  // unknown keys anywhere are errors
  CHECK_THROWS_AS(parse_config(std::string(kBaseConfig) + "\n[run]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string(kBaseConfig) + "bogus = 1\n"), ConfigError);
  std::string bad_section(kBaseConfig);
  bad_section += "\n[plotting]\nstyle = \"x\"\n";
  CHECK_THROWS_AS(parse_config(bad_section), ConfigError);

  // nu outside student-t is rejected
  std::string with_nu(kBaseConfig);
  const auto pos = with_nu.find("theta0 = [0.5]");
  with_nu.insert(pos + std::string("theta0 = [0.5]").size(), "\nnu = 5.0");
  CHECK_THROWS_AS(parse_config(with_nu), ConfigError);

  // theta0 length must match the family
  std::string bad_theta(kBaseConfig);
  const auto tpos = bad_theta.find("theta0 = [0.5]");
  bad_theta.replace(tpos, std::string("theta0 = [0.5]").size(), "theta0 = [0.5, 1.0]");
  CHECK_THROWS_AS(parse_config(bad_theta), ConfigError);

  CHECK(config_hash(c) == config_hash(base_config()));
}

TEST_CASE("csv writing, reading, exact round trip") {
  Table t;
  t.columns = {"a", "b", "s"};
  const std::string path = temp_path("oais_test_roundtrip.csv");

  SUBCASE("empty table gives a header-only file") {
    write_csv(t, path);
    CHECK(slurp(path) == "a,b,s\n");
  }

  SUBCASE("values reparse exactly") {
    t.rows.push_back({Cell{std::int64_t{-3}}, Cell{0.1 + 0.2}, Cell{std::string("x")}});
    t.rows.push_back({Cell{std::uint64_t{18446744073709551615ULL}},
                      Cell{1.2345678901234567e-101}, Cell{std::string("y")}});
    write_csv(t, path);
    const RawCsv back = read_csv(path);
    REQUIRE(back.columns == t.columns);
    REQUIRE(back.rows.size() == 2);
    CHECK(parse_double(back.rows[0][1]) == 0.1 + 0.2);
    CHECK(parse_double(back.rows[1][1]) == 1.2345678901234567e-101);
    CHECK(back.rows[1][0] == "18446744073709551615");
  }
  std::remove(path.c_str());
}

TEST_CASE("run_ais: frozen adaptation keeps theta0") {
  RunConfig c = base_config();
  c.optimizer.eta = 0.0;
  const RunRecord record = run_ais(c, 7);
  REQUIRE(record.rows.size() == 10);
  for (const auto& row : record.rows) {
    CHECK(row.theta[0] == doctest::Approx(0.5));
  }
  CHECK_FALSE(record.aborted());
}

TEST_CASE("run_ais: single iteration, single sample") {
  RunConfig c = base_config();
  c.n_samples = 1;
  c.n_iterations = 1;
  const RunRecord record = run_ais(c, 9);
  REQUIRE(record.rows.size() == 1);
  const RunRow& row = record.rows[0];
  CHECK(row.k == 1);
  CHECK(row.ess == doctest::Approx(1.0));
  // with one sample the estimate is phi of that sample; est_const1 is 1
  CHECK(row.estimates[2] == doctest::Approx(1.0));
  CHECK(std::abs(row.estimates[0]) <= 1.0);
}

TEST_CASE("run_ais is deterministic in the seed") {
  const RunConfig c = base_config();
  const RunRecord a = run_ais(c, 1234);
  const RunRecord b = run_ais(c, 1234);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].theta == b.rows[i].theta);
    CHECK(a.rows[i].rho_hat == b.rows[i].rho_hat);
    CHECK(a.rows[i].estimates == b.rows[i].estimates);
  }
}

TEST_CASE("run_ais aborts with a reason on divergence") {
  RunConfig c = base_config();
  c.optimizer.eta = 1.0;
  c.optimizer.eta_max = 10.0;
  c.optimizer.divergence_radius = 2.0;
  c.optimizer.beta = std::numeric_limits<double>::infinity();
  c.n_iterations = 200;
  const RunRecord record = run_ais(c, 3);
  CHECK(record.aborted());
  CHECK(record.rows.size() < 200);
  CHECK(record.abort_reason.find("divergence") != std::string::npos);
}

TEST_CASE("run_replicates: determinism, constant phi, abort handling") {
  const RunConfig c = base_config();
  const ReplicateResult r1 = run_replicates(c);
  const ReplicateResult r2 = run_replicates(c);
  REQUIRE(r1.rows.size() == 10);
  CHECK(r1.n_failed == 0);

  for (std::size_t i = 0; i < r1.rows.size(); ++i) {
    CHECK(r1.rows[i].mse == r2.rows[i].mse);
    CHECK(r1.rows[i].mean_R_quad == r2.rows[i].mean_R_quad);
  }

  // the const1 column has (numerically) zero error
  for (const auto& row : r1.rows) {
    CHECK(row.mse[2] < 1e-24);
    CHECK(std::abs(row.bias[2]) < 1e-12);
  }

  // identical seeds forced: identical per-run traces
  const std::uint64_t seed = replicate_seed(c.master_seed, 0);
  const RunRecord ra = run_ais(c, seed);
  const RunRecord rb = run_ais(c, seed);
  for (std::size_t i = 0; i < ra.rows.size(); ++i) {
    CHECK(ra.rows[i].estimates == rb.rows[i].estimates);
  }
}

TEST_CASE("replicate summary table matches the schema") {
  const RunConfig c = base_config();
  const ReplicateResult r = run_replicates(c);
  const Table t = replicate_summary_table(r, c);
  CHECK(t.columns ==
        std::vector<std::string>{"k", "mse_tanh", "mse_indicator", "mse_const1", "bias_tanh",
                                 "bias_indicator", "bias_const1", "mean_rho_hat",
                                 "mean_R_quad"});
  CHECK(t.rows.size() == r.rows.size());

  const Table run_table = run_record_table(run_ais(c, 1), c, 0);
  CHECK(run_table.columns ==
        std::vector<std::string>{"run_id", "seed", "k", "theta_0", "rho_hat", "r_hat", "z_hat",
                                 "ess", "est_tanh", "est_indicator", "est_const1", "wall_ms"});
}

TEST_CASE("fit_rate recovers synthetic decay parameters") {
  std::vector<std::pair<double, double>> curve;
  for (int k = 1; k <= 400; ++k) {
    curve.emplace_back(k, 3.0 * std::exp(-0.02 * k) + 1.2);
  }
  const double eta = 5e-3;
  const RateFit fit = fit_rate(curve, eta);
  CHECK(fit.converged);
  CHECK(fit.c0_hat * eta == doctest::Approx(0.02).epsilon(0.01));
  CHECK(fit.c1_hat == doctest::Approx(3.0).epsilon(0.01));
  CHECK(fit.offset_hat == doctest::Approx(1.2).epsilon(0.01));
  CHECK(fit.residual < 1e-6);
}

TEST_CASE("fit_rate on flat and rising curves") {
  std::vector<std::pair<double, double>> flat;
  for (int k = 1; k <= 50; ++k) flat.emplace_back(k, 2.0);
  const RateFit f = fit_rate(flat, 1.0);
  CHECK(std::abs(f.c1_hat) < 1e-6);
  CHECK(f.offset_hat == doctest::Approx(2.0).epsilon(1e-6));

  std::vector<std::pair<double, double>> rising;
  for (int k = 1; k <= 50; ++k) rising.emplace_back(k, 1.0 + 0.1 * k);
  const RateFit r = fit_rate(rising, 1.0);
  CHECK_FALSE(r.converged);
  CHECK(std::isfinite(r.residual));

  CHECK_THROWS_AS(fit_rate({{1.0, 1.0}}, 1.0), ContractViolation);
}

TEST_CASE("exact-gradient Langevin drives rho toward one") {
  RunConfig c = base_config();
  c.optimizer.scheme = Scheme::kExactLangevin;
  c.optimizer.eta = 0.02;
  c.optimizer.beta = 1e4;
  c.n_iterations = 300;
  c.n_samples = 50;
  const RunRecord record = run_ais(c, 5);
  REQUIRE_FALSE(record.aborted());
  CHECK(std::abs(record.rows.back().theta[0]) < 0.1);
  double tail = 0.0;
  for (std::size_t i = record.rows.size() - 50; i < record.rows.size(); ++i) {
    tail += record.rows[i].rho_hat;
  }
  CHECK(tail / 50.0 <= 1.05);
}

TEST_CASE("sgd and sgld baselines reach the optimum on the exponential family") {
  for (const Scheme scheme : {Scheme::kSgd, Scheme::kSgld}) {
    RunConfig c = base_config();
    c.optimizer.scheme = scheme;
    c.optimizer.eta = 5e-3;
    c.optimizer.beta = scheme == Scheme::kSgld ? 1e4 : std::numeric_limits<double>::infinity();
    c.optimizer.grad_batch = 8;
    c.optimizer.clip_norm = 100.0;
    c.n_iterations = 2000;
    c.n_samples = 50;
    const RunRecord record = run_ais(c, 11);
    REQUIRE_FALSE(record.aborted());
    double tail = 0.0;
    for (std::size_t i = record.rows.size() - 500; i < record.rows.size(); ++i) {
      tail += record.rows[i].rho_hat;
    }
    INFO("scheme ", scheme_to_string(scheme));
    CHECK(tail / 500.0 <= 1.05);
  }
}

TEST_CASE("two-dimensional problems run end to end") {
  RunConfig c = base_config();
  c.target.mean = Eigen::VectorXd::Zero(2);
  c.target.var = Eigen::VectorXd::Ones(2);
  c.proposal.family = FamilyKind::kGaussianMeanChol;
  c.proposal.dim = 2;
  c.proposal.theta0 = Eigen::VectorXd::Zero(5);
  c.proposal.theta0[0] = 0.5;
  c.optimizer.grad_batch = 4;
  c.optimizer.clip_norm = 100.0;
  c.quad = QuadratureSpec::box(2, -12.0, 12.0, 401);
  c.n_iterations = 5;
  c.replicates = 2;
  const ReplicateResult rep = run_replicates(c);
  CHECK(rep.rows.size() == 5);
  CHECK(rep.n_failed == 0);
  for (const auto& row : rep.rows) {
    CHECK(std::isfinite(row.mean_R_quad));
    CHECK(row.mse[2] < 1e-24);
  }
}

TEST_CASE("calibration sweep: cell equivalence and alpha = 0") {
  RunConfig base = base_config();
  base.n_iterations = 8;
  base.replicates = 3;

  const SweepResult sweep = calibration_sweep(base, {0.0, 1.0}, {1e-2});
  REQUIRE(sweep.cells.size() == 2);
  CHECK(sweep.cells[0].alpha == 0.0);
  CHECK(sweep.cells[0].n_samples == 1);  // eta^0 = 1
  CHECK(sweep.cells[1].n_samples == 100);

  // one cell equals a direct replicate run with the derived N
  RunConfig direct = base;
  direct.optimizer.eta = 1e-2;
  direct.n_samples = 100;
  const ReplicateResult rep = run_replicates(direct);
  const long k_from = base.n_iterations / 2 + 1;
  double mse = 0.0;
  int count = 0;
  for (const auto& row : rep.rows) {
    if (row.k >= k_from) {
      mse += row.mse[0];
      ++count;
    }
  }
  mse /= count;
  CHECK(sweep.cells[1].plateau_mse[0] == doctest::Approx(mse).epsilon(1e-12));

  const Table cells = sweep_table(sweep, base);
  CHECK(cells.columns.front() == "alpha");
  CHECK(cells.rows.size() == 2);
}

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

#ifndef OAIS_HARNESS_HPP
#define OAIS_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "oais/config.hpp"
#include "oais/csv.hpp"
#include "oais/snis.hpp"

namespace oais {

/// Bounded named test function phi.
struct TestFunction {
  std::string name;
  double sup_norm;
  std::function<double(const Eigen::VectorXd&)> fn;
};

TestFunction build_test_function(const TestFunctionSpec& spec);
std::vector<TestFunction> build_test_functions(const RunConfig& config);

struct RunRow {
  long k = 0;
  Eigen::VectorXd theta;
  double rho_hat = 0, r_hat = 0, z_hat = 0, ess = 0;
  std::vector<double> estimates;  // one per test function, config order
  double wall_ms = 0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<RunRow> rows;
  std::string abort_reason;  // empty on success

  bool aborted() const { return !abort_reason.empty(); }
};

/// One adaptive run: per iteration, adapt theta with a fresh gradient batch,
/// sample N points from the adapted proposal, weigh them and record
/// diagnostics and one estimate per test function. Gradient noise and
/// integration samples come from separate substreams of `seed`. Divergence
/// or a degenerate ensemble aborts with the partial record and a reason.
RunRecord run_ais(const RunConfig& config, std::uint64_t seed);

/// Seed used for replicate `index` under `master_seed`.
std::uint64_t replicate_seed(std::uint64_t master_seed, int index);

struct SummaryRow {
  long k = 0;
  std::vector<double> mse;   // per test function
  std::vector<double> bias;  // per test function
  double mean_rho_hat = 0;
  double mean_R_quad = 0;
};

struct ReplicateResult {
  std::vector<SummaryRow> rows;
  std::vector<RunRecord> runs;
  std::vector<double> truths;  // quadrature value of each test function
  int n_runs = 0;
  int n_failed = 0;
  std::vector<std::string> failure_reasons;
};

/// Replicated runs with per-iteration mean squared error and bias against
/// quadrature ground truth, plus the replicate-averaged diagnostics and the
/// quadrature value of the objective along the parameter trajectories.
/// Deterministic in master_seed; failed replicates are recorded and excluded
/// from the averages.
ReplicateResult run_replicates(const RunConfig& config);

struct RateFit {
  double c0_hat = 0;      ///< decay rate per unit of k*eta
  double c1_hat = 0;      ///< amplitude
  double offset_hat = 0;  ///< floor the curve decays to
  double residual = 0;    ///< RMSE of the fit in log space
  bool converged = false;
};

/// Least-squares fit of c1 * exp(-c0 * eta * k) + offset to a curve of
/// (k, value) points; damped Gauss-Newton with multi-start over decay
/// decades. A curve with no decaying component comes back with
/// converged == false and the residual of the best attempt.
RateFit fit_rate(const std::vector<std::pair<double, double>>& curve, double eta);

struct SweepCell {
  double alpha = 0, eta = 0;
  int n_samples = 0;
  std::vector<double> plateau_mse;     // per test function
  std::vector<double> plateau_mse_se;  // jackknife standard error
  bool failed = false;
  std::string note;
};

struct SweepSlope {
  double alpha = 0;
  std::string phi;
  double slope = 0, slope_se = 0, ci95_lo = 0, ci95_hi = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SweepSlope> slopes;
};

/// For each (alpha, eta) runs the replicate harness with N = ceil(eta^-alpha)
/// and summarizes the plateau MSE; per alpha, fits the slope of log MSE
/// against log eta weighted by the cell standard errors.
SweepResult calibration_sweep(const RunConfig& base, const std::vector<double>& alphas,
                              const std::vector<double>& etas);

// CSV table renderings (schemas documented in the README).
Table run_record_table(const RunRecord& record, const RunConfig& config, int run_id);
Table replicate_summary_table(const ReplicateResult& result, const RunConfig& config);
Table sweep_table(const SweepResult& result, const RunConfig& config);
Table sweep_slope_table(const SweepResult& result);
Table rate_fit_table(const RateFit& fit);

}  // namespace oais

#endif  // OAIS_HARNESS_HPP

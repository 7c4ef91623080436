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

#include "oais/harness.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Dense>

#include "oais/adapt.hpp"
#include "oais/errors.hpp"
#include "oais/oracle.hpp"

namespace oais {

namespace {

constexpr std::uint64_t kAdaptNoiseTag = 1;
constexpr std::uint64_t kAdaptEpsTag = 2;
constexpr std::uint64_t kIntegrateTag = 3;

GradEstimate stochastic_gradient(const RunConfig& config, const TargetModel& target,
                                 const ProposalFamily& proposal, const Theta& theta,
                                 SeededStream& eps_stream) {
  const Eigen::MatrixXd eps = proposal.sample_eps(eps_stream, config.optimizer.grad_batch);
  GradEstimate g = [&] {
    switch (config.optimizer.grad_estimator) {
      case EstimatorKind::kScore:
        return grad_score(target, proposal, theta, eps);
      case EstimatorKind::kPathwise:
        return grad_pathwise(target, proposal, theta, eps);
      case EstimatorKind::kPaperLiteral:
        return grad_paper_literal(target, proposal, theta, eps);
      case EstimatorKind::kExact:
        break;
    }
    throw ContractViolation("exact gradients are not sampled");
  }();
  return clip(std::move(g), config.optimizer.clip_norm);
}

}  // namespace

TestFunction build_test_function(const TestFunctionSpec& spec) {
  if (spec.name == "tanh") {
    return TestFunction{"tanh", 1.0,
                        [](const Eigen::VectorXd& x) { return std::tanh(x[0]); }};
  }
  if (spec.name == "indicator") {
    const double c = spec.threshold;
    return TestFunction{"indicator", 1.0,
                        [c](const Eigen::VectorXd& x) { return x[0] > c ? 1.0 : 0.0; }};
  }
  if (spec.name == "const1") {
    return TestFunction{"const1", 1.0, [](const Eigen::VectorXd&) { return 1.0; }};
  }
  throw ConfigError("unknown test function '" + spec.name + "'");
}

std::vector<TestFunction> build_test_functions(const RunConfig& config) {
  std::vector<TestFunction> out;
  for (const auto& spec : config.test_functions) out.push_back(build_test_function(spec));
  return out;
}

std::uint64_t replicate_seed(std::uint64_t master_seed, int index) {
  return mix_seed(mix_seed(master_seed) ^ mix_seed(static_cast<std::uint64_t>(index) + 0x517C));
}

RunRecord run_ais(const RunConfig& config, std::uint64_t seed) {
  const TargetModel target = build_target(config);
  const ProposalFamily proposal = build_proposal(config);
  OptimizerState state = build_optimizer(config);
  const std::vector<TestFunction> phis = build_test_functions(config);

  const SeededStream base(seed);
  SeededStream noise_stream = base.substream(kAdaptNoiseTag);
  SeededStream eps_stream = base.substream(kAdaptEpsTag);
  SeededStream integrate_stream = base.substream(kIntegrateTag);

  // The exact-gradient scheme drives the update with the quadrature gradient.
  std::unique_ptr<CachedRQuad> cached;
  if (config.optimizer.scheme == Scheme::kExactLangevin) {
    cached = std::make_unique<CachedRQuad>(target, config.quad);
  }

  RunRecord record;
  record.seed = seed;
  record.config_hash = config_hash(config);
  record.rows.reserve(static_cast<std::size_t>(config.n_iterations));

  for (int k = 1; k <= config.n_iterations; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      GradEstimate grad;
      switch (config.optimizer.scheme) {
        case Scheme::kExactLangevin: {
          const int d = proposal.dim_theta();
          Eigen::VectorXd g(d);
          for (int j = 0; j < d; ++j) {
            const double h = 1e-4 * (1.0 + std::abs(state.theta.values[j]));
            Theta plus{state.theta.values}, minus{state.theta.values};
            plus.values[j] += h;
            minus.values[j] -= h;
            g[j] = (cached->R(proposal, plus) - cached->R(proposal, minus)) / (2.0 * h);
          }
          grad = GradEstimate{std::move(g), EstimatorKind::kExact, 0};
          state = sgld_step(state, grad, noise_stream);
          break;
        }
        case Scheme::kSgld:
          grad = stochastic_gradient(config, target, proposal, state.theta, eps_stream);
          state = sgld_step(state, grad, noise_stream);
          break;
        case Scheme::kSghmc:
          grad = stochastic_gradient(config, target, proposal, state.theta, eps_stream);
          state = sghmc_step(state, grad, noise_stream);
          break;
        case Scheme::kSgd:
          grad = stochastic_gradient(config, target, proposal, state.theta, eps_stream);
          state = sgd_step(state, grad);
          break;
      }

      const Eigen::MatrixXd eps = proposal.sample_eps(integrate_stream, config.n_samples);
      Eigen::MatrixXd samples(config.n_samples, proposal.dim_x());
      for (int i = 0; i < config.n_samples; ++i) {
        samples.row(i) = proposal.push_forward(state.theta, eps.row(i).transpose()).transpose();
      }
      const WeightedEnsemble ensemble = make_ensemble(target, proposal, state.theta, samples);
      const Diagnostics diag = diagnostics(ensemble.log_w_unnorm);

      RunRow row;
      row.k = k;
      row.theta = state.theta.values;
      row.rho_hat = diag.rho_hat;
      row.r_hat = diag.r_hat;
      row.z_hat = diag.z_hat;
      row.ess = diag.ess;
      for (const auto& phi : phis) row.estimates.push_back(snis_estimate(ensemble, phi.fn));
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      record.rows.push_back(std::move(row));
    } catch (const NumericalError& e) {
      record.abort_reason = e.what();
      break;
    }
  }
  return record;
}

ReplicateResult run_replicates(const RunConfig& config) {
  if (config.replicates < 2) throw ConfigError("run_replicates needs replicates >= 2");
  const TargetModel target = build_target(config);
  const ProposalFamily proposal = build_proposal(config);
  const std::vector<TestFunction> phis = build_test_functions(config);

  ReplicateResult result;
  result.n_runs = config.replicates;
  for (const auto& phi : phis) {
    result.truths.push_back(quad_expectation(target, phi.fn, config.quad));
  }

  for (int r = 0; r < config.replicates; ++r) {
    RunRecord record = run_ais(config, replicate_seed(config.master_seed, r));
    if (record.aborted()) {
      ++result.n_failed;
      result.failure_reasons.push_back("replicate " + std::to_string(r) + ": " +
                                       record.abort_reason);
    }
    result.runs.push_back(std::move(record));
  }

  const CachedRQuad cached(target, config.quad);
  const std::size_t n_phi = phis.size();
  result.rows.reserve(static_cast<std::size_t>(config.n_iterations));
  for (int k = 1; k <= config.n_iterations; ++k) {
    SummaryRow row;
    row.k = k;
    row.mse.assign(n_phi, 0.0);
    row.bias.assign(n_phi, 0.0);
    int count = 0;
    for (const auto& run : result.runs) {
      if (static_cast<std::size_t>(k) > run.rows.size()) continue;
      const RunRow& rr = run.rows[static_cast<std::size_t>(k - 1)];
      ++count;
      row.mean_rho_hat += rr.rho_hat;
      double r_quad;
      try {
        r_quad = cached.R(proposal, Theta{rr.theta});
      } catch (const HeavyTailError&) {
        r_quad = std::numeric_limits<double>::infinity();
      }
      row.mean_R_quad += r_quad;
      for (std::size_t p = 0; p < n_phi; ++p) {
        const double err = rr.estimates[p] - result.truths[p];
        row.mse[p] += err * err;
        row.bias[p] += err;
      }
    }
    if (count == 0) break;  // all replicates aborted before k
    row.mean_rho_hat /= count;
    row.mean_R_quad /= count;
    for (std::size_t p = 0; p < n_phi; ++p) {
      row.mse[p] /= count;
      row.bias[p] /= count;
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

namespace {

struct FitAttempt {
  double c1 = 0, log_decay = 0, offset = 0;
  double rss = std::numeric_limits<double>::infinity();
  bool ok = false;
};

// Residuals of c1*exp(-s*k) + b against the curve, s = exp(v).
FitAttempt gauss_newton(const std::vector<std::pair<double, double>>& curve, double c1_0,
                        double v0, double b0) {
  double c1 = c1_0, v = v0, b = b0;
  double lambda = 1e-3;
  auto rss_at = [&](double c1x, double vx, double bx) {
    double rss = 0.0;
    const double s = std::exp(vx);
    for (const auto& [k, y] : curve) {
      const double r = c1x * std::exp(-s * k) + bx - y;
      rss += r * r;
    }
    return rss;
  };
  double rss = rss_at(c1, v, b);
  for (int iter = 0; iter < 200; ++iter) {
    const double s = std::exp(v);
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (const auto& [k, y] : curve) {
      const double e = std::exp(-s * k);
      const double r = c1 * e + b - y;
      Eigen::Vector3d j(e, -c1 * k * e * s, 1.0);
      jtj += j * j.transpose();
      jtr += j * r;
    }
    Eigen::Matrix3d damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::Vector3d step = damped.ldlt().solve(jtr);
    const double c1n = c1 - step[0];
    const double vn = std::clamp(v - step[1], -40.0, 10.0);
    const double bn = b - step[2];
    const double rss_new = rss_at(c1n, vn, bn);
    if (std::isfinite(rss_new) && rss_new < rss) {
      const bool tiny = (rss - rss_new) < 1e-14 * (1.0 + rss);
      c1 = c1n;
      v = vn;
      b = bn;
      rss = rss_new;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (tiny) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  FitAttempt out;
  out.c1 = c1;
  out.log_decay = v;
  out.offset = b;
  out.rss = rss;
  out.ok = std::isfinite(rss);
  return out;
}

}  // namespace

RateFit fit_rate(const std::vector<std::pair<double, double>>& curve, double eta) {
  if (curve.size() < 20) throw ContractViolation("rate fit needs at least 20 points");
  if (eta <= 0.0) throw ContractViolation("rate fit needs a positive eta");

  double y_first = curve.front().second;
  double y_min = std::numeric_limits<double>::infinity();
  for (const auto& [k, y] : curve) {
    if (!std::isfinite(y)) throw ContractViolation("rate fit needs finite curve values");
    y_min = std::min(y_min, y);
  }

  FitAttempt best;
  const double b0 = y_min;
  const double c1_0 = std::max(y_first - y_min, 1e-12);
  for (double s0 = 1e-6; s0 <= 1.0; s0 *= 10.0) {
    const FitAttempt attempt = gauss_newton(curve, c1_0, std::log(s0), b0);
    if (attempt.ok && attempt.rss < best.rss) best = attempt;
  }

  RateFit fit;
  const double s = std::exp(best.log_decay);
  fit.c0_hat = s / eta;
  fit.c1_hat = best.c1;
  fit.offset_hat = best.offset;

  double log_rss = 0.0;
  int log_n = 0;
  bool log_ok = true;
  for (const auto& [k, y] : curve) {
    const double yhat = best.c1 * std::exp(-s * k) + best.offset;
    if (y <= 0.0 || yhat <= 0.0) {
      log_ok = false;
      break;
    }
    const double d = std::log(y) - std::log(yhat);
    log_rss += d * d;
    ++log_n;
  }
  if (log_ok && log_n > 0) {
    fit.residual = std::sqrt(log_rss / log_n);
  } else {
    fit.residual = std::sqrt(best.rss / static_cast<double>(curve.size()));
  }
  // A negative decaying component means the best explanation of the curve
  // is growth; report a failure rather than inventing a rate. Amplitudes
  // within rounding of zero (flat curves) still count as converged.
  fit.converged = best.ok && std::isfinite(fit.c0_hat) && fit.c1_hat >= -1e-9;
  fit.c0_hat = std::max(fit.c0_hat, 0.0);
  return fit;
}

namespace {

// Mean plateau MSE per test function plus a leave-one-replicate-out
// standard error.
void plateau_stats(const ReplicateResult& rep, const RunConfig& config,
                   const std::vector<double>& truths, SweepCell& cell) {
  const std::size_t n_phi = truths.size();
  const long k_from =
      static_cast<long>(std::floor((1.0 - config.plateau_frac) * config.n_iterations)) + 1;
  std::vector<const RunRecord*> complete;
  for (const auto& run : rep.runs) {
    if (!run.aborted() &&
        run.rows.size() == static_cast<std::size_t>(config.n_iterations)) {
      complete.push_back(&run);
    }
  }
  const std::size_t m = complete.size();
  if (m < 2) {
    cell.failed = true;
    cell.note = "fewer than two complete replicates";
    cell.plateau_mse.assign(n_phi, std::numeric_limits<double>::quiet_NaN());
    cell.plateau_mse_se.assign(n_phi, std::numeric_limits<double>::quiet_NaN());
    return;
  }
  for (std::size_t p = 0; p < n_phi; ++p) {
    // per-replicate mean squared error over the plateau window
    std::vector<double> rep_mse(m, 0.0);
    long n_k = 0;
    for (std::size_t r = 0; r < m; ++r) {
      double acc = 0.0;
      n_k = 0;
      for (long k = k_from; k <= config.n_iterations; ++k) {
        const double err =
            complete[r]->rows[static_cast<std::size_t>(k - 1)].estimates[p] - truths[p];
        acc += err * err;
        ++n_k;
      }
      rep_mse[r] = acc / static_cast<double>(n_k);
    }
    double total = 0.0;
    for (double v : rep_mse) total += v;
    const double mse = total / static_cast<double>(m);
    double jk_var = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      const double loo = (total - rep_mse[r]) / static_cast<double>(m - 1);
      jk_var += (loo - mse) * (loo - mse);
    }
    jk_var *= static_cast<double>(m - 1) / static_cast<double>(m);
    cell.plateau_mse.push_back(mse);
    cell.plateau_mse_se.push_back(std::sqrt(jk_var));
  }
}

}  // namespace

SweepResult calibration_sweep(const RunConfig& base, const std::vector<double>& alphas,
                              const std::vector<double>& etas) {
  if (alphas.empty() || etas.empty()) {
    throw ContractViolation("calibration sweep needs non-empty alpha and eta grids");
  }
  SweepResult result;
  for (double alpha : alphas) {
    for (double eta : etas) {
      SweepCell cell;
      cell.alpha = alpha;
      cell.eta = eta;
      cell.n_samples = static_cast<int>(std::ceil(std::pow(eta, -alpha)));
      RunConfig config = base;
      config.optimizer.eta = eta;
      config.n_samples = cell.n_samples;
      try {
        const ReplicateResult rep = run_replicates(config);
        plateau_stats(rep, config, rep.truths, cell);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.note = e.what();
        const std::size_t n_phi = base.test_functions.size();
        cell.plateau_mse.assign(n_phi, std::numeric_limits<double>::quiet_NaN());
        cell.plateau_mse_se.assign(n_phi, std::numeric_limits<double>::quiet_NaN());
      }
      result.cells.push_back(std::move(cell));
    }
  }

  // Per alpha and test function: weighted OLS of log(mse) on log(eta).
  for (double alpha : alphas) {
    for (std::size_t p = 0; p < base.test_functions.size(); ++p) {
      std::vector<double> x, y, w;
      for (const auto& cell : result.cells) {
        if (cell.alpha != alpha || cell.failed) continue;
        const double mse = cell.plateau_mse[p];
        const double se = cell.plateau_mse_se[p];
        if (!(mse > 0.0) || !std::isfinite(se)) continue;
        x.push_back(std::log(cell.eta));
        y.push_back(std::log(mse));
        // delta method: sd(log mse) ~ se/mse, floored to keep weights finite
        w.push_back(1.0 / std::max(se / mse, 1e-6));
      }
      if (x.size() < 2) continue;
      double sw = 0, swx = 0, swy = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double wi = w[i] * w[i];
        sw += wi;
        swx += wi * x[i];
        swy += wi * y[i];
      }
      const double mx = swx / sw, my = swy / sw;
      double sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double wi = w[i] * w[i];
        sxx += wi * (x[i] - mx) * (x[i] - mx);
        sxy += wi * (x[i] - mx) * (y[i] - my);
      }
      SweepSlope slope;
      slope.alpha = alpha;
      slope.phi = base.test_functions[p].name;
      slope.slope = sxy / sxx;
      slope.slope_se = std::sqrt(1.0 / sxx);
      slope.ci95_lo = slope.slope - 1.959963984540054 * slope.slope_se;
      slope.ci95_hi = slope.slope + 1.959963984540054 * slope.slope_se;
      result.slopes.push_back(slope);
    }
  }
  return result;
}

Table run_record_table(const RunRecord& record, const RunConfig& config, int run_id) {
  Table t;
  t.columns = {"run_id", "seed", "k"};
  const int d = static_cast<int>(config.proposal.theta0.size());
  for (int j = 0; j < d; ++j) t.columns.push_back("theta_" + std::to_string(j));
  t.columns.insert(t.columns.end(), {"rho_hat", "r_hat", "z_hat", "ess"});
  for (const auto& phi : config.test_functions) t.columns.push_back("est_" + phi.name);
  t.columns.push_back("wall_ms");
  for (const auto& row : record.rows) {
    std::vector<Cell> cells;
    cells.emplace_back(static_cast<std::int64_t>(run_id));
    cells.emplace_back(record.seed);
    cells.emplace_back(static_cast<std::int64_t>(row.k));
    for (int j = 0; j < d; ++j) cells.emplace_back(row.theta[j]);
    cells.emplace_back(row.rho_hat);
    cells.emplace_back(row.r_hat);
    cells.emplace_back(row.z_hat);
    cells.emplace_back(row.ess);
    for (double est : row.estimates) cells.emplace_back(est);
    cells.emplace_back(row.wall_ms);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table replicate_summary_table(const ReplicateResult& result, const RunConfig& config) {
  Table t;
  t.columns = {"k"};
  for (const auto& phi : config.test_functions) t.columns.push_back("mse_" + phi.name);
  for (const auto& phi : config.test_functions) t.columns.push_back("bias_" + phi.name);
  t.columns.push_back("mean_rho_hat");
  t.columns.push_back("mean_R_quad");
  for (const auto& row : result.rows) {
    std::vector<Cell> cells;
    cells.emplace_back(static_cast<std::int64_t>(row.k));
    for (double v : row.mse) cells.emplace_back(v);
    for (double v : row.bias) cells.emplace_back(v);
    cells.emplace_back(row.mean_rho_hat);
    cells.emplace_back(row.mean_R_quad);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table sweep_table(const SweepResult& result, const RunConfig& config) {
  Table t;
  t.columns = {"alpha", "eta", "N"};
  for (const auto& phi : config.test_functions) {
    t.columns.push_back("plateau_mse_" + phi.name);
  }
  for (const auto& phi : config.test_functions) {
    t.columns.push_back("plateau_mse_se_" + phi.name);
  }
  for (const auto& cell : result.cells) {
    std::vector<Cell> cells;
    cells.emplace_back(cell.alpha);
    cells.emplace_back(cell.eta);
    cells.emplace_back(static_cast<std::int64_t>(cell.n_samples));
    for (double v : cell.plateau_mse) cells.emplace_back(v);
    for (double v : cell.plateau_mse_se) cells.emplace_back(v);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table sweep_slope_table(const SweepResult& result) {
  Table t;
  t.columns = {"alpha", "phi", "slope", "slope_se", "ci95_lo", "ci95_hi"};
  for (const auto& s : result.slopes) {
    t.rows.push_back({Cell{s.alpha}, Cell{s.phi}, Cell{s.slope}, Cell{s.slope_se},
                      Cell{s.ci95_lo}, Cell{s.ci95_hi}});
  }
  return t;
}

Table rate_fit_table(const RateFit& fit) {
  Table t;
  t.columns = {"c0_hat", "c1_hat", "offset_hat", "residual", "converged"};
  t.rows.push_back({Cell{fit.c0_hat}, Cell{fit.c1_hat}, Cell{fit.offset_hat},
                    Cell{fit.residual}, Cell{std::string(fit.converged ? "true" : "false")}});
  return t;
}

}  // namespace oais

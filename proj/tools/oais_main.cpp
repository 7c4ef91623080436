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

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oais/config.hpp"
#include "oais/errors.hpp"
#include "oais/harness.hpp"
#include "oais/oracle.hpp"

namespace {

using namespace oais;

int cmd_run(const std::string& config_path, const std::string& out_path,
            std::optional<std::uint64_t> seed) {
  const RunConfig config = load_config(config_path);
  const std::uint64_t run_seed = seed.value_or(replicate_seed(config.master_seed, 0));
  const RunRecord record = run_ais(config, run_seed);
  write_csv(run_record_table(record, config, 0), out_path);
  if (record.aborted()) {
    std::cerr << "run aborted: " << record.abort_reason << " (partial record written)\n";
    return kExitNumerical;
  }
  std::cout << "wrote " << record.rows.size() << " rows to " << out_path << "\n";
  return kExitOk;
}

int cmd_replicate(const std::string& config_path, const std::string& out_path,
                  const std::string& runs_out) {
  const RunConfig config = load_config(config_path);
  const ReplicateResult result = run_replicates(config);
  write_csv(replicate_summary_table(result, config), out_path);
  if (!runs_out.empty()) {
    Table all;
    for (int r = 0; r < static_cast<int>(result.runs.size()); ++r) {
      Table t = run_record_table(result.runs[static_cast<std::size_t>(r)], config, r);
      if (all.columns.empty()) all.columns = t.columns;
      all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
    }
    write_csv(all, runs_out);
  }
  for (const auto& reason : result.failure_reasons) {
    std::cerr << "failed: " << reason << "\n";
  }
  std::cout << "replicates: " << result.n_runs << " (" << result.n_failed << " failed), wrote "
            << result.rows.size() << " summary rows to " << out_path << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path,
              const std::vector<double>& alphas, const std::vector<double>& etas,
              const std::string& slopes_out) {
  const RunConfig config = load_config(config_path);
  const SweepResult result = calibration_sweep(config, alphas, etas);
  write_csv(sweep_table(result, config), out_path);
  if (!slopes_out.empty()) write_csv(sweep_slope_table(result), slopes_out);
  for (const auto& s : result.slopes) {
    std::cout << "alpha=" << s.alpha << " phi=" << s.phi << " slope=" << s.slope << " 95% CI ["
              << s.ci95_lo << ", " << s.ci95_hi << "]\n";
  }
  return kExitOk;
}

int cmd_fit(const std::string& in_path, const std::string& out_path, double eta,
            const std::string& column) {
  const RawCsv csv = read_csv(in_path);
  const int k_col = csv.column_index("k");
  int v_col = csv.column_index(column);
  if (k_col < 0) throw ConfigError("input csv has no 'k' column");
  if (v_col < 0) throw ConfigError("input csv has no '" + column + "' column");
  std::vector<std::pair<double, double>> curve;
  for (const auto& row : csv.rows) {
    const double k = parse_double(row[static_cast<std::size_t>(k_col)]);
    const double v = parse_double(row[static_cast<std::size_t>(v_col)]);
    if (std::isfinite(v)) curve.emplace_back(k, v);
  }
  const RateFit fit = fit_rate(curve, eta);
  write_csv(rate_fit_table(fit), out_path);
  std::cout << "c0_hat=" << fit.c0_hat << " c1_hat=" << fit.c1_hat
            << " offset_hat=" << fit.offset_hat << " residual=" << fit.residual
            << (fit.converged ? "" : " (no decaying component)") << "\n";
  return fit.converged ? kExitOk : kExitNumerical;
}

int cmd_oracle_rho(const std::string& config_path) {
  const RunConfig config = load_config(config_path);
  const TargetModel target = build_target(config);
  const ProposalFamily proposal = build_proposal(config);
  const Theta theta{config.proposal.theta0};
  const double z = quad_Z(target, config.quad);
  const double r = quad_R(target, proposal, theta, config.quad);
  std::cout << "quad_Z = " << z << "\n"
            << "quad_R(theta0) = " << r << "\n"
            << "quad_rho(theta0) = " << r / (z * z) << "\n";
  return kExitOk;
}

int cmd_oracle_gradcheck(const std::string& config_path) {
  const RunConfig config = load_config(config_path);
  const TargetModel target = build_target(config);
  const ProposalFamily proposal = build_proposal(config);
  const Theta theta{config.proposal.theta0};
  const Eigen::VectorXd oracle = quad_grad_R(target, proposal, theta, config.quad);

  const int n = config.n_samples;
  SeededStream rng(config.master_seed);
  auto mc_mean = [&](auto estimator) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(proposal.dim_theta());
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(proposal.dim_theta());
    for (int i = 0; i < n; ++i) {
      const Eigen::MatrixXd eps = proposal.sample_eps(rng, 1);
      const Eigen::VectorXd g = estimator(eps).grad;
      const Eigen::VectorXd delta = g - mean;
      mean += delta / (i + 1);
      m2 += delta.cwiseProduct(g - mean);
    }
    Eigen::VectorXd se = (m2 / (n > 1 ? n - 1 : 1)).cwiseSqrt() / std::sqrt(double(n));
    return std::make_pair(mean, se);
  };

  const auto [score_mean, score_se] = mc_mean([&](const Eigen::MatrixXd& eps) {
    return grad_score(target, proposal, theta, eps);
  });
  std::cout << "quad_grad_R = " << oracle.transpose() << "\n";
  std::cout << "score  mean = " << score_mean.transpose() << "  se = " << score_se.transpose()
            << "\n";
  if (target.has_grad()) {
    const auto [pw_mean, pw_se] = mc_mean([&](const Eigen::MatrixXd& eps) {
      return grad_pathwise(target, proposal, theta, eps);
    });
    std::cout << "pathwise mean = " << pw_mean.transpose() << "  se = " << pw_se.transpose()
              << "\n";
  }
  return kExitOk;
}

int cmd_oracle_probe(const std::string& config_path, double radius, int points) {
  const RunConfig config = load_config(config_path);
  const TargetModel target = build_target(config);
  const ProposalFamily proposal = build_proposal(config);
  const CachedRQuad cached(target, config.quad);
  const auto grid = probe_grid(proposal.dim_theta(), radius, points);
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
  // For scale families parts of the box make the objective non-integrable;
  // those grid points carry no gradient information and are dropped.
  std::vector<Eigen::VectorXd> usable;
  for (const auto& t : grid) {
    try {
      grad_fn(t);
      usable.push_back(t);
    } catch (const NumericalError&) {
    }
  }
  if (usable.size() < grid.size()) {
    std::cerr << "note: " << grid.size() - usable.size() << " of " << grid.size()
              << " probe points are outside the integrable region and were skipped\n";
  }
  const ProbeReport report = assumption_probe(grad_fn, usable);
  std::cout << "probe_points = " << report.probe_points << "\n"
            << "lipschitz_hat = " << report.lipschitz_hat << "\n"
            << "dissip_m_hat = " << report.dissip_m_hat << "\n"
            << "dissip_b_hat = " << report.dissip_b_hat << "\n"
            << "violation_fraction = " << report.violation_fraction << "\n"
            << "c3_estimate = "
            << c3_estimate(report, config.optimizer.beta, proposal.dim_theta())
            << "  (plug-in estimate)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive importance sampling with chi-square-optimized proposals"};
  app.require_subcommand(1);

  std::string config_path, out_path, in_path, runs_out, slopes_out, fit_column = "mean_R_quad";
  std::uint64_t seed_value = 0;
  bool seed_given = false;
  double fit_eta = 1.0, probe_radius = 3.0;
  int probe_points = 121;
  std::vector<double> alphas, etas;

  auto* run = app.add_subcommand("run", "single adaptive run, CSV trace");
  run->add_option("--config", config_path)->required();
  run->add_option("--out", out_path)->required();
  run->add_option("--seed", seed_value)->each([&](const std::string&) { seed_given = true; });

  auto* replicate = app.add_subcommand("replicate", "replicated runs, MSE/bias summary CSV");
  replicate->add_option("--config", config_path)->required();
  replicate->add_option("--out", out_path)->required();
  replicate->add_option("--runs-out", runs_out, "also write every per-run trace");

  auto* sweep = app.add_subcommand("sweep", "step-size / sample-count calibration sweep");
  sweep->add_option("--config", config_path)->required();
  sweep->add_option("--alphas", alphas)->required()->delimiter(',');
  sweep->add_option("--etas", etas)->required()->delimiter(',');
  sweep->add_option("--out", out_path)->required();
  sweep->add_option("--slopes-out", slopes_out, "also write the fitted slopes");

  auto* fit = app.add_subcommand("fit", "fit c1*exp(-c0*eta*k) + offset to a curve CSV");
  fit->add_option("--in", in_path)->required();
  fit->add_option("--out", out_path)->required();
  fit->add_option("--eta", fit_eta, "step size that scales k in the exponent");
  fit->add_option("--column", fit_column, "value column to fit");

  auto* oracle = app.add_subcommand("oracle", "quadrature ground-truth utilities");
  oracle->require_subcommand(1);
  auto* oracle_rho = oracle->add_subcommand("rho", "normalizer and divergence at theta0");
  oracle_rho->add_option("--config", config_path)->required();
  auto* oracle_gradcheck =
      oracle->add_subcommand("gradcheck", "Monte Carlo gradients against quadrature");
  oracle_gradcheck->add_option("--config", config_path)->required();
  auto* oracle_probe = oracle->add_subcommand("probe", "smoothness and growth probes");
  oracle_probe->add_option("--config", config_path)->required();
  oracle_probe->add_option("--radius", probe_radius);
  oracle_probe->add_option("--points", probe_points);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, out_path,
                     seed_given ? std::optional<std::uint64_t>(seed_value) : std::nullopt);
    }
    if (replicate->parsed()) return cmd_replicate(config_path, out_path, runs_out);
    if (sweep->parsed()) return cmd_sweep(config_path, out_path, alphas, etas, slopes_out);
    if (fit->parsed()) return cmd_fit(in_path, out_path, fit_eta, fit_column);
    if (oracle->parsed()) {
      if (oracle_rho->parsed()) return cmd_oracle_rho(config_path);
      if (oracle_gradcheck->parsed()) return cmd_oracle_gradcheck(config_path);
      if (oracle_probe->parsed()) return cmd_oracle_probe(config_path, probe_radius, probe_points);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return oais::exit_code_for(e);
  }
  return 1;
}

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

#ifndef OAIS_CONFIG_HPP
#define OAIS_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "oais/adapt.hpp"
#include "oais/grad.hpp"
#include "oais/model.hpp"
#include "oais/oracle.hpp"

namespace oais {

// ---------------------------------------------------------------------------
// Minimal TOML reader: [section], key = value, with strings, integers,
// floats (inf accepted), booleans and flat arrays. That is the whole config
// schema; anything fancier in the file is a config error.
// ---------------------------------------------------------------------------

struct TomlValue {
  std::variant<std::int64_t, double, bool, std::string, std::vector<TomlValue>> data;
  int line = 0;

  bool is_array() const { return std::holds_alternative<std::vector<TomlValue>>(data); }
};

using TomlSection = std::map<std::string, TomlValue>;
using TomlDocument = std::map<std::string, TomlSection>;

TomlDocument parse_toml(const std::string& text);

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct TargetSpec {
  std::string name;  // "gauss" or "gauss-mix"
  Eigen::VectorXd mean, var;                 // gauss
  std::vector<double> weights, means, vars;  // gauss-mix
};

struct ProposalSpec {
  FamilyKind family = FamilyKind::kGaussianMean;
  int dim = 1;
  Eigen::VectorXd theta0;
  double nu = 5.0;
};

struct OptimizerSpec {
  Scheme scheme = Scheme::kSgld;
  double eta = 0.0;
  double beta = std::numeric_limits<double>::infinity();
  double gamma = 0.0;
  EstimatorKind grad_estimator = EstimatorKind::kPathwise;
  int grad_batch = 1;
  std::optional<double> clip_norm;
  MomentumOrder momentum_order = MomentumOrder::kOldMomentum;
  double eta_max = 1.0;
  double divergence_radius = 1e6;
};

struct TestFunctionSpec {
  std::string name;      // tanh | indicator | const1
  double threshold = 0;  // indicator only
};

struct RunConfig {
  TargetSpec target;
  ProposalSpec proposal;
  OptimizerSpec optimizer;
  int n_samples = 1;       // N
  int n_iterations = 1;    // K
  int replicates = 1;
  std::uint64_t master_seed = 1;
  std::vector<TestFunctionSpec> test_functions;
  QuadratureSpec quad;
  double plateau_frac = 0.5;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical one-line-per-key rendering; hashed into run records.
std::string canonical_config(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

TargetModel build_target(const RunConfig& config);
ProposalFamily build_proposal(const RunConfig& config);
OptimizerState build_optimizer(const RunConfig& config);

}  // namespace oais

#endif  // OAIS_CONFIG_HPP

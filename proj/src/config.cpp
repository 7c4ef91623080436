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

#include "oais/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "oais/csv.hpp"
#include "oais/errors.hpp"

namespace oais {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

TomlValue parse_scalar(std::string tok, int line) {
  TomlValue v;
  v.line = line;
  tok = trim(tok);
  if (tok.empty()) fail(line, "empty value");
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"') fail(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
      if (tok[i] == '\\' && i + 2 < tok.size()) {
        ++i;
        switch (tok[i]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(line, "unsupported escape in string");
        }
      } else {
        out += tok[i];
      }
    }
    v.data = out;
    return v;
  }
  if (tok == "true" || tok == "false") {
    v.data = (tok == "true");
    return v;
  }
  std::string digits;
  digits.reserve(tok.size());
  for (char c : tok) {
    if (c != '_') digits += c;
  }
  if (digits == "inf" || digits == "+inf") {
    v.data = std::numeric_limits<double>::infinity();
    return v;
  }
  if (digits == "-inf") {
    v.data = -std::numeric_limits<double>::infinity();
    return v;
  }
  const bool looks_float = digits.find_first_of(".eE") != std::string::npos &&
                           digits.find_first_of("0123456789") != std::string::npos;
  if (!looks_float) {
    std::int64_t iv = 0;
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), iv);
    if (res.ec == std::errc{} && res.ptr == digits.data() + digits.size()) {
      v.data = iv;
      return v;
    }
  }
  double dv = 0.0;
  const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), dv);
  if (res.ec == std::errc{} && res.ptr == digits.data() + digits.size()) {
    v.data = dv;
    return v;
  }
  fail(line, "cannot parse value '" + tok + "'");
}

TomlValue parse_value(const std::string& raw, int line) {
  const std::string tok = trim(raw);
  if (!tok.empty() && tok.front() == '[') {
    if (tok.back() != ']') fail(line, "unterminated array (arrays must stay on one line)");
    TomlValue v;
    v.line = line;
    std::vector<TomlValue> items;
    std::string body = tok.substr(1, tok.size() - 2);
    std::string current;
    bool in_string = false;
    for (char c : body) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!trim(current).empty()) items.push_back(parse_scalar(current, line));
        current.clear();
      } else {
        current += c;
      }
    }
    if (!trim(current).empty()) items.push_back(parse_scalar(current, line));
    v.data = items;
    return v;
  }
  return parse_scalar(tok, line);
}

}  // namespace

TomlDocument parse_toml(const std::string& text) {
  TomlDocument doc;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(line_no, "empty section name");
      if (doc.count(section) != 0) fail(line_no, "duplicate section [" + section + "]");
      doc.try_emplace(section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(line_no, "empty key");
    if (section.empty()) fail(line_no, "key outside of any section");
    auto& sec = doc[section];
    if (sec.count(key) != 0) fail(line_no, "duplicate key '" + key + "'");
    sec.emplace(key, parse_value(line.substr(eq + 1), line_no));
  }
  return doc;
}

namespace {

// Tracks which keys were consumed so leftovers become errors.
class SectionReader {
 public:
  SectionReader(const TomlDocument& doc, const std::string& name) : name_(name) {
    const auto it = doc.find(name);
    if (it != doc.end()) section_ = &it->second;
  }

  bool has(const std::string& key) const {
    return section_ != nullptr && section_->count(key) != 0;
  }

  const TomlValue& get(const std::string& key) {
    if (!has(key)) throw ConfigError("[" + name_ + "] is missing required key '" + key + "'");
    used_.insert(key);
    return section_->at(key);
  }

  std::optional<TomlValue> maybe(const std::string& key) {
    if (!has(key)) return std::nullopt;
    used_.insert(key);
    return section_->at(key);
  }

  void finish() const {
    if (section_ == nullptr) return;
    for (const auto& [key, value] : *section_) {
      if (used_.count(key) == 0) {
        throw ConfigError("unknown key '" + key + "' in [" + name_ + "] (line " +
                          std::to_string(value.line) + ")");
      }
    }
  }

 private:
  std::string name_;
  const TomlSection* section_ = nullptr;
  std::set<std::string> used_;
};

double as_double(const TomlValue& v, const std::string& what) {
  if (std::holds_alternative<double>(v.data)) return std::get<double>(v.data);
  if (std::holds_alternative<std::int64_t>(v.data)) {
    return static_cast<double>(std::get<std::int64_t>(v.data));
  }
  throw ConfigError(what + " must be a number (line " + std::to_string(v.line) + ")");
}

std::int64_t as_int(const TomlValue& v, const std::string& what) {
  if (std::holds_alternative<std::int64_t>(v.data)) return std::get<std::int64_t>(v.data);
  throw ConfigError(what + " must be an integer (line " + std::to_string(v.line) + ")");
}

std::string as_string(const TomlValue& v, const std::string& what) {
  if (std::holds_alternative<std::string>(v.data)) return std::get<std::string>(v.data);
  throw ConfigError(what + " must be a string (line " + std::to_string(v.line) + ")");
}

std::vector<double> as_double_array(const TomlValue& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array (line " + std::to_string(v.line) + ")");
  std::vector<double> out;
  for (const auto& item : std::get<std::vector<TomlValue>>(v.data)) {
    out.push_back(as_double(item, what + " entry"));
  }
  return out;
}

std::vector<std::string> as_string_array(const TomlValue& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array (line " + std::to_string(v.line) + ")");
  std::vector<std::string> out;
  for (const auto& item : std::get<std::vector<TomlValue>>(v.data)) {
    out.push_back(as_string(item, what + " entry"));
  }
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

TestFunctionSpec parse_test_function(const std::string& token) {
  TestFunctionSpec spec;
  const auto colon = token.find(':');
  spec.name = token.substr(0, colon);
  if (spec.name != "tanh" && spec.name != "indicator" && spec.name != "const1") {
    throw ConfigError("unknown test function '" + spec.name + "'");
  }
  if (colon != std::string::npos) {
    if (spec.name != "indicator") {
      throw ConfigError("only the indicator test function takes a threshold");
    }
    spec.threshold = parse_double(token.substr(colon + 1));
  }
  return spec;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  const TomlDocument doc = parse_toml(text);
  for (const auto& [name, _] : doc) {
    if (name != "target" && name != "proposal" && name != "optimizer" && name != "run") {
      throw ConfigError("unknown section [" + name + "]");
    }
  }

  RunConfig c;

  SectionReader target(doc, "target");
  c.target.name = as_string(target.get("name"), "target.name");
  if (c.target.name == "gauss") {
    c.target.mean = to_vector(as_double_array(target.get("mean"), "target.mean"));
    c.target.var = to_vector(as_double_array(target.get("var"), "target.var"));
    if (c.target.mean.size() != c.target.var.size()) {
      throw ConfigError("target.mean and target.var must have the same length");
    }
  } else if (c.target.name == "gauss-mix") {
    c.target.weights = as_double_array(target.get("weights"), "target.weights");
    c.target.means = as_double_array(target.get("means"), "target.means");
    c.target.vars = as_double_array(target.get("vars"), "target.vars");
  } else {
    throw ConfigError("unknown target '" + c.target.name + "'");
  }
  target.finish();

  SectionReader proposal(doc, "proposal");
  c.proposal.family = family_from_string(as_string(proposal.get("family"), "proposal.family"));
  c.proposal.dim = static_cast<int>(as_int(proposal.get("dim"), "proposal.dim"));
  c.proposal.theta0 = to_vector(as_double_array(proposal.get("theta0"), "proposal.theta0"));
  if (auto nu = proposal.maybe("nu")) {
    if (c.proposal.family != FamilyKind::kStudentTLocScale) {
      throw ConfigError("proposal.nu is only valid for student-t-locscale");
    }
    c.proposal.nu = as_double(*nu, "proposal.nu");
  }
  proposal.finish();

  SectionReader optimizer(doc, "optimizer");
  c.optimizer.scheme = scheme_from_string(as_string(optimizer.get("scheme"), "optimizer.scheme"));
  c.optimizer.eta = as_double(optimizer.get("eta"), "optimizer.eta");
  if (auto beta = optimizer.maybe("beta")) c.optimizer.beta = as_double(*beta, "optimizer.beta");
  if (auto gamma = optimizer.maybe("gamma")) c.optimizer.gamma = as_double(*gamma, "optimizer.gamma");
  if (auto est = optimizer.maybe("grad_estimator")) {
    c.optimizer.grad_estimator = estimator_from_string(as_string(*est, "optimizer.grad_estimator"));
    if (c.optimizer.grad_estimator == EstimatorKind::kExact) {
      throw ConfigError("grad_estimator must be score, pathwise or paper-literal; "
                        "use scheme = \"exact-langevin\" for oracle gradients");
    }
  }
  if (auto batch = optimizer.maybe("grad_batch")) {
    c.optimizer.grad_batch = static_cast<int>(as_int(*batch, "optimizer.grad_batch"));
    if (c.optimizer.grad_batch < 1) throw ConfigError("optimizer.grad_batch must be >= 1");
  }
  if (auto clip = optimizer.maybe("clip_norm")) {
    const double v = as_double(*clip, "optimizer.clip_norm");
    if (v <= 0.0) throw ConfigError("optimizer.clip_norm must be positive");
    c.optimizer.clip_norm = v;
  }
  if (auto order = optimizer.maybe("sghmc_momentum_order")) {
    c.optimizer.momentum_order =
        momentum_order_from_string(as_string(*order, "optimizer.sghmc_momentum_order"));
  }
  if (auto eta_max = optimizer.maybe("eta_max")) {
    c.optimizer.eta_max = as_double(*eta_max, "optimizer.eta_max");
  }
  if (auto radius = optimizer.maybe("divergence_radius")) {
    c.optimizer.divergence_radius = as_double(*radius, "optimizer.divergence_radius");
  }
  optimizer.finish();

  SectionReader run(doc, "run");
  c.n_samples = static_cast<int>(as_int(run.get("N"), "run.N"));
  c.n_iterations = static_cast<int>(as_int(run.get("K"), "run.K"));
  if (auto reps = run.maybe("replicates")) {
    c.replicates = static_cast<int>(as_int(*reps, "run.replicates"));
  }
  if (auto seed = run.maybe("master_seed")) {
    c.master_seed = static_cast<std::uint64_t>(as_int(*seed, "run.master_seed"));
  }
  if (c.n_samples < 1 || c.n_iterations < 1 || c.replicates < 1) {
    throw ConfigError("run.N, run.K and run.replicates must all be >= 1");
  }
  c.test_functions = {TestFunctionSpec{"tanh", 0.0}};
  if (auto fns = run.maybe("test_functions")) {
    c.test_functions.clear();
    std::set<std::string> seen;
    for (const auto& token : as_string_array(*fns, "run.test_functions")) {
      TestFunctionSpec spec = parse_test_function(token);
      if (!seen.insert(spec.name).second) {
        throw ConfigError("duplicate test function '" + spec.name + "'");
      }
      c.test_functions.push_back(spec);
    }
    if (c.test_functions.empty()) throw ConfigError("run.test_functions must not be empty");
  }

  double quad_lo = -15.0, quad_hi = 15.0;
  std::vector<double> quad_lo_v, quad_hi_v;
  if (auto lo = run.maybe("quad_lo")) {
    if (lo->is_array()) {
      quad_lo_v = as_double_array(*lo, "run.quad_lo");
    } else {
      quad_lo = as_double(*lo, "run.quad_lo");
    }
  }
  if (auto hi = run.maybe("quad_hi")) {
    if (hi->is_array()) {
      quad_hi_v = as_double_array(*hi, "run.quad_hi");
    } else {
      quad_hi = as_double(*hi, "run.quad_hi");
    }
  }
  int nodes = 2001;
  if (auto qn = run.maybe("quad_nodes")) {
    nodes = static_cast<int>(as_int(*qn, "run.quad_nodes"));
  }
  const int dim = c.proposal.dim;
  c.quad.nodes_per_dim = nodes;
  c.quad.bounds.clear();
  for (int i = 0; i < dim; ++i) {
    const double lo = quad_lo_v.empty() ? quad_lo : quad_lo_v.at(static_cast<std::size_t>(i));
    const double hi = quad_hi_v.empty() ? quad_hi : quad_hi_v.at(static_cast<std::size_t>(i));
    c.quad.bounds.push_back({lo, hi});
  }
  if (auto pf = run.maybe("plateau_frac")) {
    c.plateau_frac = as_double(*pf, "run.plateau_frac");
    if (!(c.plateau_frac > 0.0 && c.plateau_frac <= 1.0)) {
      throw ConfigError("run.plateau_frac must lie in (0, 1]");
    }
  }
  run.finish();

  // Cross-field validation: identifiers resolve and dimensions agree.
  build_target(c);
  build_proposal(c);
  build_optimizer(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream out;
  out << "target.name=" << c.target.name << '\n';
  auto put_vec = [&out](const std::string& key, const Eigen::VectorXd& v) {
    out << key << '=';
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? "," : "") << cell_to_string(v[i]);
    out << '\n';
  };
  auto put_std = [&out](const std::string& key, const std::vector<double>& v) {
    out << key << '=';
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << cell_to_string(v[i]);
    out << '\n';
  };
  if (c.target.name == "gauss") {
    put_vec("target.mean", c.target.mean);
    put_vec("target.var", c.target.var);
  } else {
    put_std("target.weights", c.target.weights);
    put_std("target.means", c.target.means);
    put_std("target.vars", c.target.vars);
  }
  out << "proposal.family=" << family_to_string(c.proposal.family) << '\n';
  out << "proposal.dim=" << c.proposal.dim << '\n';
  put_vec("proposal.theta0", c.proposal.theta0);
  out << "proposal.nu=" << cell_to_string(c.proposal.nu) << '\n';
  out << "optimizer.scheme=" << scheme_to_string(c.optimizer.scheme) << '\n';
  out << "optimizer.eta=" << cell_to_string(c.optimizer.eta) << '\n';
  out << "optimizer.beta=" << cell_to_string(c.optimizer.beta) << '\n';
  out << "optimizer.gamma=" << cell_to_string(c.optimizer.gamma) << '\n';
  out << "optimizer.grad_estimator=" << estimator_to_string(c.optimizer.grad_estimator) << '\n';
  out << "optimizer.grad_batch=" << c.optimizer.grad_batch << '\n';
  out << "optimizer.clip_norm="
      << (c.optimizer.clip_norm ? cell_to_string(*c.optimizer.clip_norm) : std::string("none"))
      << '\n';
  out << "optimizer.sghmc_momentum_order="
      << (c.optimizer.momentum_order == MomentumOrder::kOldMomentum ? "as-paper" : "updated")
      << '\n';
  out << "optimizer.eta_max=" << cell_to_string(c.optimizer.eta_max) << '\n';
  out << "optimizer.divergence_radius=" << cell_to_string(c.optimizer.divergence_radius) << '\n';
  out << "run.N=" << c.n_samples << '\n';
  out << "run.K=" << c.n_iterations << '\n';
  out << "run.replicates=" << c.replicates << '\n';
  out << "run.master_seed=" << c.master_seed << '\n';
  out << "run.test_functions=";
  for (std::size_t i = 0; i < c.test_functions.size(); ++i) {
    out << (i ? "," : "") << c.test_functions[i].name;
    if (c.test_functions[i].name == "indicator") {
      out << ':' << cell_to_string(c.test_functions[i].threshold);
    }
  }
  out << '\n';
  out << "run.quad_nodes=" << c.quad.nodes_per_dim << '\n';
  for (std::size_t i = 0; i < c.quad.bounds.size(); ++i) {
    out << "run.quad_bounds." << i << '=' << cell_to_string(c.quad.bounds[i][0]) << ','
        << cell_to_string(c.quad.bounds[i][1]) << '\n';
  }
  out << "run.plateau_frac=" << cell_to_string(c.plateau_frac) << '\n';
  return out.str();
}

std::uint64_t config_hash(const RunConfig& config) {
  // FNV-1a.
  const std::string text = canonical_config(config);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char byte : text) {
    h ^= byte;
    h *= 0x100000001B3ULL;
  }
  return h;
}

TargetModel build_target(const RunConfig& config) {
  if (config.target.name == "gauss") {
    TargetModel t = make_gaussian_target(config.target.mean, config.target.var);
    if (t.dim_x != config.proposal.dim) {
      throw ConfigError("target and proposal dimensions differ");
    }
    return t;
  }
  TargetModel t = make_gaussian_mixture_target(config.target.weights, config.target.means,
                                               config.target.vars);
  if (t.dim_x != config.proposal.dim) {
    throw ConfigError("gauss-mix is one-dimensional; proposal.dim must be 1");
  }
  return t;
}

ProposalFamily build_proposal(const RunConfig& config) {
  ProposalFamily family =
      ProposalFamily::make(config.proposal.family, config.proposal.dim, config.proposal.nu);
  if (config.proposal.theta0.size() != family.dim_theta()) {
    throw ConfigError("proposal.theta0 has length " +
                      std::to_string(config.proposal.theta0.size()) + ", family needs " +
                      std::to_string(family.dim_theta()));
  }
  return family;
}

OptimizerState build_optimizer(const RunConfig& config) {
  return make_optimizer_state(config.optimizer.scheme, Theta{config.proposal.theta0},
                              config.optimizer.eta, config.optimizer.beta,
                              config.optimizer.gamma, config.optimizer.momentum_order,
                              config.optimizer.eta_max, config.optimizer.divergence_radius);
}

}  // namespace oais

#include "hotinfer/simulation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "hotinfer/errors.hpp"
#include "hotinfer/parallel.hpp"

namespace hotinfer {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Eigen::MatrixXd gen_design(int n, int p, double rho, Rng& rng) {
  if (n < 1 || p < 1)
    fail(ErrorCode::DimensionMismatch, "design dimensions must be positive");
  if (!(std::fabs(rho) < 1.0))
    fail(ErrorCode::ConfigError, "rho must lie in (-1, 1)");
  const double innovation = std::sqrt(1.0 - rho * rho);
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.gaussian();
    for (int k = 1; k < p; ++k)
      X(i, k) = rho * X(i, k - 1) + innovation * rng.gaussian();
  }
  return X;
}

Eigen::VectorXd gen_coefficients(const PatternSpec& pattern, int n, int p,
                                 Rng& rng) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (pattern.kind == PatternSpec::Kind::SparseUniform) {
    if (pattern.s < 0 || pattern.s > p)
      fail(ErrorCode::InvalidPattern, "sparsity s must lie in [0, p]");
    if (!(pattern.lo <= pattern.hi))
      fail(ErrorCode::InvalidPattern, "need lo <= hi");
    for (int k = 0; k < pattern.s; ++k)
      beta[k] = rng.uniform(pattern.lo, pattern.hi);
    return beta;
  }
  if (pattern.spike_indices.empty())
    fail(ErrorCode::InvalidPattern, "approx_sparse needs spike indices");
  std::set<int> seen;
  for (int idx : pattern.spike_indices) {
    if (idx < 1 || idx > p)
      fail(ErrorCode::InvalidPattern,
           "spike index " + std::to_string(idx) + " outside [1, p]");
    if (!seen.insert(idx).second)
      fail(ErrorCode::InvalidPattern,
           "spike index " + std::to_string(idx) + " listed twice");
  }
  const double lambda_univ = universal_lambda(n, p);
  for (int k = 0; k < p; ++k) {
    const double pos = static_cast<double>(k + 1);
    beta[k] = pattern.decay_scale * lambda_univ / (pos * pos);
  }
  for (int idx : pattern.spike_indices)
    beta[idx - 1] = pattern.spike_scale * lambda_univ;
  return beta;
}

Eigen::VectorXd precision_diagonal(double rho, int p) {
  if (p < 1) fail(ErrorCode::DimensionMismatch, "p must be positive");
  if (!(std::fabs(rho) < 1.0))
    fail(ErrorCode::ConfigError, "rho must lie in (-1, 1)");
  Eigen::MatrixXd cov(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) cov(i, j) = std::pow(rho, std::abs(i - j));
  const Eigen::MatrixXd inv =
      Eigen::LLT<Eigen::MatrixXd>(cov).solve(Eigen::MatrixXd::Identity(p, p));
  return inv.diagonal();
}

MethodSpec parse_method(const std::string& name) {
  MethodSpec spec;
  spec.name = name;
  std::string rest = name;
  if (rest == "ldpe") {
    spec.method = Method::Ldpe;
    return spec;
  }
  if (rest.size() > 6 && rest.substr(rest.size() - 6) == "-split") {
    spec.split = true;
    rest = rest.substr(0, rest.size() - 6);
  }
  std::string base;
  for (const char* candidate : {"hot-a", "partial", "hot"}) {
    const std::string prefix = std::string(candidate) + "-";
    if (rest.rfind(prefix, 0) == 0) {
      base = candidate;
      rest = rest.substr(prefix.size());
      break;
    }
  }
  if (base.empty())
    fail(ErrorCode::ConfigError, "unknown method '" + name + "'");
  if (base == "hot") spec.method = Method::Hot;
  else if (base == "hot-a") spec.method = Method::HotAlternative;
  else spec.method = Method::Partial;
  if (rest == "sis") spec.screen = ScreenKind::Sis;
  else if (rest == "holp") spec.screen = ScreenKind::Holp;
  else
    fail(ErrorCode::ConfigError,
         "method '" + name + "' needs a -sis or -holp screening suffix");
  return spec;
}

namespace {

struct PerMethodRep {
  long covered_all = 0;
  long judged_all = 0;
  long covered_max = 0;
  long judged_max = 0;
  double length_sum = 0.0;
  double sigma_hat = 0.0;
  double max_identity_gap = 0.0;
  double max_orth_violation = 0.0;
  double max_inner_lower_slack = 0.0;
  double max_tau_excess = 0.0;
  std::vector<std::string> warnings;
  std::vector<RepRecord> records;
};

struct RepSlot {
  bool failed = false;
  std::string fail_message;
  std::vector<PerMethodRep> per_method;
};

void validate_config(const SimConfig& config) {
  if (config.n < 4 || config.p < 2)
    fail(ErrorCode::ConfigError, "need n >= 4 and p >= 2");
  if (!(std::fabs(config.rho) < 1.0))
    fail(ErrorCode::ConfigError, "rho must lie in (-1, 1)");
  if (!(config.sigma > 0.0) || !std::isfinite(config.sigma))
    fail(ErrorCode::ConfigError, "sigma must be finite and positive");
  if (config.reps < 1) fail(ErrorCode::ConfigError, "reps must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    fail(ErrorCode::InvalidAlpha, "alpha must lie strictly between 0 and 1");
  if (config.methods.empty())
    fail(ErrorCode::ConfigError, "methods list is empty");
  for (int k : config.cp_max_set)
    if (k < 0 || k >= config.p)
      fail(ErrorCode::ConfigError, "cp_max_set entry outside [0, p)");
}

}  // namespace

SimulationReport run_replications(const SimConfig& config, bool keep_records) {
  validate_config(config);
  std::vector<MethodSpec> specs;
  specs.reserve(config.methods.size());
  for (const auto& name : config.methods) specs.push_back(parse_method(name));

  // Coordinates entering CP_max: declared override, else the true support
  // (sparse_uniform) or the spike set (approx_sparse).
  std::vector<int> target_set = config.cp_max_set;
  if (target_set.empty()) {
    if (config.pattern.kind == PatternSpec::Kind::SparseUniform) {
      for (int k = 0; k < config.pattern.s; ++k) target_set.push_back(k);
    } else {
      for (int idx : config.pattern.spike_indices)
        target_set.push_back(idx - 1);
      std::sort(target_set.begin(), target_set.end());
    }
  }
  std::vector<char> in_target(static_cast<size_t>(config.p), 0);
  for (int k : target_set) in_target[static_cast<size_t>(k)] = 1;

  std::vector<RepSlot> slots(static_cast<size_t>(config.reps));

  auto run_rep = [&](int rep) {
    RepSlot& slot = slots[static_cast<size_t>(rep)];
    try {
      Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(rep)));
      const Eigen::MatrixXd X =
          gen_design(config.n, config.p, config.rho, rng);
      const Eigen::VectorXd beta =
          gen_coefficients(config.pattern, config.n, config.p, rng);
      Eigen::VectorXd noise(config.n);
      for (int i = 0; i < config.n; ++i)
        noise[i] = config.sigma * rng.gaussian();
      const Eigen::VectorXd y = X * beta + noise;
      const Dataset data = standardize(X, y, config.scale_response);
      OracleTruth truth;
      truth.beta = beta;
      truth.noise = noise;
      truth.sigma = config.sigma;

      slot.per_method.resize(specs.size());
      for (size_t m = 0; m < specs.size(); ++m) {
        const MethodSpec& spec = specs[m];
        InferenceConfig icfg;
        icfg.method = spec.method;
        icfg.screen_kind = spec.screen;
        icfg.split_screening = spec.split;
        icfg.alpha = config.alpha;
        icfg.tuning = config.tuning;
        icfg.sigma = config.sigma_mode;
        icfg.d_max = config.d_max;
        icfg.ridge_eps = config.ridge_eps;
        icfg.solve = config.solve;
        icfg.threads = 1;
        const InferenceReport rep_report =
            infer_all(data, icfg, spec.split ? nullptr : &truth);

        PerMethodRep& acc = slot.per_method[m];
        acc.sigma_hat = rep_report.sigma_hat;
        acc.max_identity_gap = rep_report.diagnostics.max_identity_gap;
        acc.max_orth_violation = rep_report.diagnostics.max_orth_violation;
        acc.max_inner_lower_slack =
            rep_report.diagnostics.max_inner_lower_slack;
        acc.max_tau_excess = rep_report.diagnostics.max_tau_excess;
        for (const auto& w : rep_report.warnings)
          acc.warnings.push_back("rep " + std::to_string(rep) + " " +
                                 spec.name + ": " + w);
        for (const auto& r : rep_report.results) {
          const double truth_j = beta[r.j];
          const bool covered = r.ci_lo <= truth_j && truth_j <= r.ci_hi;
          ++acc.judged_all;
          acc.covered_all += covered ? 1 : 0;
          if (in_target[static_cast<size_t>(r.j)]) {
            ++acc.judged_max;
            acc.covered_max += covered ? 1 : 0;
          }
          acc.length_sum += r.ci_hi - r.ci_lo;
          if (keep_records) {
            RepRecord record;
            record.rep = rep;
            record.method = spec.name;
            record.j = r.j;
            record.beta_true = truth_j;
            record.beta_hat = r.beta_hat;
            record.ci_lo = r.ci_lo;
            record.ci_hi = r.ci_hi;
            record.covered = covered;
            record.length = r.ci_hi - r.ci_lo;
            acc.records.push_back(std::move(record));
          }
        }
      }
    } catch (const std::exception& err) {
      slot.failed = true;
      slot.fail_message = err.what();
    }
  };

  parallel_for(config.reps, resolve_threads(config.threads), run_rep);

  SimulationReport report;
  report.config = config;
  if (config.pattern.kind == PatternSpec::Kind::ApproxSparse)
    report.lambda_univ = universal_lambda(config.n, config.p);

  std::vector<MethodAggregate> agg(specs.size());
  for (size_t m = 0; m < specs.size(); ++m) agg[m].name = specs[m].name;
  std::vector<double> sigma_sums(specs.size(), 0.0);
  std::vector<long> covered_all(specs.size(), 0), judged_all(specs.size(), 0);
  std::vector<long> covered_max(specs.size(), 0), judged_max(specs.size(), 0);
  std::vector<double> length_sums(specs.size(), 0.0);

  int failures = 0;
  for (int rep = 0; rep < config.reps; ++rep) {
    const RepSlot& slot = slots[static_cast<size_t>(rep)];
    if (slot.failed) {
      ++failures;
      report.warnings.push_back("rep " + std::to_string(rep) +
                                " dropped: " + slot.fail_message);
      continue;
    }
    ++report.reps_completed;
    for (size_t m = 0; m < specs.size(); ++m) {
      const PerMethodRep& acc = slot.per_method[m];
      covered_all[m] += acc.covered_all;
      judged_all[m] += acc.judged_all;
      covered_max[m] += acc.covered_max;
      judged_max[m] += acc.judged_max;
      length_sums[m] += acc.length_sum;
      sigma_sums[m] += acc.sigma_hat;
      agg[m].max_identity_gap =
          std::max(agg[m].max_identity_gap, acc.max_identity_gap);
      agg[m].max_orth_violation =
          std::max(agg[m].max_orth_violation, acc.max_orth_violation);
      agg[m].max_inner_lower_slack =
          std::max(agg[m].max_inner_lower_slack, acc.max_inner_lower_slack);
      agg[m].max_tau_excess =
          std::max(agg[m].max_tau_excess, acc.max_tau_excess);
      for (const auto& w : acc.warnings) report.warnings.push_back(w);
      for (const auto& r : acc.records) report.records.push_back(r);
    }
  }

  if (failures > 0 && 20L * failures >= static_cast<long>(config.reps))
    fail(ErrorCode::FatalSimFailure,
         std::to_string(failures) + " of " + std::to_string(config.reps) +
             " replications failed");
  if (report.reps_completed == 0)
    fail(ErrorCode::FatalSimFailure, "no replication completed");

  for (size_t m = 0; m < specs.size(); ++m) {
    agg[m].judged = judged_all[m];
    agg[m].cp_all = judged_all[m] > 0
                        ? static_cast<double>(covered_all[m]) / judged_all[m]
                        : 0.0;
    agg[m].cp_max = judged_max[m] > 0
                        ? static_cast<double>(covered_max[m]) / judged_max[m]
                        : 0.0;
    agg[m].mean_length =
        judged_all[m] > 0 ? length_sums[m] / judged_all[m] : 0.0;
    agg[m].mean_sigma_hat = sigma_sums[m] / report.reps_completed;
  }
  report.methods = std::move(agg);
  return report;
}

namespace {

void expect_keys(const json& obj, const char* where,
                 const std::vector<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      fail(ErrorCode::ConfigError,
           std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
T require(const json& obj, const char* where, const char* key) {
  if (!obj.contains(key))
    fail(ErrorCode::ConfigError,
         std::string(where) + ": missing required key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::ConfigError,
         std::string(where) + ": bad value for '" + key + "'");
  }
}

template <typename T>
T optional_of(const json& obj, const char* where, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::ConfigError,
         std::string(where) + ": bad value for '" + key + "'");
  }
}

}  // namespace

SimConfig parse_sim_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& err) {
    fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") +
                                     err.what());
  }
  if (!doc.is_object()) fail(ErrorCode::ConfigError, "config must be an object");
  expect_keys(doc, "config",
              {"n", "p", "rho", "sigma", "pattern", "reps", "alpha", "seed",
               "methods", "screening", "sigma_mode", "tuning",
               "scale_response", "solver", "threads", "cp_max_set"});

  SimConfig config;
  config.n = require<int>(doc, "config", "n");
  config.p = require<int>(doc, "config", "p");
  config.rho = require<double>(doc, "config", "rho");
  config.sigma = require<double>(doc, "config", "sigma");
  config.reps = require<int>(doc, "config", "reps");
  config.seed = require<std::uint64_t>(doc, "config", "seed");
  config.alpha = optional_of<double>(doc, "config", "alpha", 0.05);
  config.methods = optional_of<std::vector<std::string>>(
      doc, "config", "methods", {"hot-sis", "ldpe"});
  config.scale_response =
      optional_of<bool>(doc, "config", "scale_response", false);
  config.threads = optional_of<int>(doc, "config", "threads", 1);
  config.cp_max_set =
      optional_of<std::vector<int>>(doc, "config", "cp_max_set", {});

  const json pattern = doc.contains("pattern") ? doc.at("pattern") : json();
  if (!pattern.is_object())
    fail(ErrorCode::ConfigError, "pattern must be an object");
  const std::string kind = require<std::string>(pattern, "pattern", "type");
  if (kind == "sparse_uniform") {
    expect_keys(pattern, "pattern", {"type", "s", "lo", "hi"});
    config.pattern.kind = PatternSpec::Kind::SparseUniform;
    config.pattern.s = require<int>(pattern, "pattern", "s");
    config.pattern.lo = optional_of<double>(pattern, "pattern", "lo", 0.0);
    config.pattern.hi = optional_of<double>(pattern, "pattern", "hi", 2.0);
  } else if (kind == "approx_sparse") {
    expect_keys(pattern, "pattern",
                {"type", "spike_indices", "spike_scale", "decay_scale"});
    config.pattern.kind = PatternSpec::Kind::ApproxSparse;
    config.pattern.spike_indices =
        require<std::vector<int>>(pattern, "pattern", "spike_indices");
    config.pattern.spike_scale =
        optional_of<double>(pattern, "pattern", "spike_scale", 3.0);
    config.pattern.decay_scale =
        optional_of<double>(pattern, "pattern", "decay_scale", 3.0);
  } else {
    fail(ErrorCode::ConfigError, "pattern type must be sparse_uniform or approx_sparse");
  }

  if (doc.contains("screening")) {
    const json& screening = doc.at("screening");
    expect_keys(screening, "screening", {"d_max", "ridge_eps"});
    config.d_max = optional_of<int>(screening, "screening", "d_max", 0);
    config.ridge_eps =
        optional_of<double>(screening, "screening", "ridge_eps", 0.0);
  }
  if (doc.contains("sigma_mode")) {
    const json& mode = doc.at("sigma_mode");
    expect_keys(mode, "sigma_mode", {"type", "value"});
    const std::string type = require<std::string>(mode, "sigma_mode", "type");
    if (type == "scaled_lasso") {
      config.sigma_mode.kind = SigmaMode::Kind::ScaledLasso;
    } else if (type == "fixed") {
      config.sigma_mode.kind = SigmaMode::Kind::Fixed;
      config.sigma_mode.value = require<double>(mode, "sigma_mode", "value");
    } else {
      fail(ErrorCode::ConfigError, "sigma_mode type must be scaled_lasso or fixed");
    }
  }
  if (doc.contains("tuning")) {
    const json& tuning = doc.at("tuning");
    expect_keys(tuning, "tuning", {"type", "lambda", "grid_size", "grid_ratio"});
    const std::string type = require<std::string>(tuning, "tuning", "type");
    if (type == "gic") {
      config.tuning.kind = TuningSpec::Kind::Gic;
    } else if (type == "fixed") {
      config.tuning.kind = TuningSpec::Kind::Fixed;
      config.tuning.fixed_lambda = require<double>(tuning, "tuning", "lambda");
    } else {
      fail(ErrorCode::ConfigError, "tuning type must be gic or fixed");
    }
    config.tuning.grid_size =
        optional_of<int>(tuning, "tuning", "grid_size", 50);
    config.tuning.grid_ratio =
        optional_of<double>(tuning, "tuning", "grid_ratio", 0.01);
  }
  if (doc.contains("solver")) {
    const json& solver = doc.at("solver");
    expect_keys(solver, "solver", {"tol", "max_iter"});
    config.solve.tol = optional_of<double>(solver, "solver", "tol", 1e-7);
    config.solve.max_iter =
        optional_of<int>(solver, "solver", "max_iter", 10000);
  }
  return config;
}

namespace {

ordered_json config_echo(const SimConfig& config) {
  ordered_json doc;
  doc["n"] = config.n;
  doc["p"] = config.p;
  doc["rho"] = config.rho;
  doc["sigma"] = config.sigma;
  if (config.pattern.kind == PatternSpec::Kind::SparseUniform) {
    doc["pattern"] = {{"type", "sparse_uniform"},
                      {"s", config.pattern.s},
                      {"lo", config.pattern.lo},
                      {"hi", config.pattern.hi}};
  } else {
    doc["pattern"] = {{"type", "approx_sparse"},
                      {"spike_indices", config.pattern.spike_indices},
                      {"spike_scale", config.pattern.spike_scale},
                      {"decay_scale", config.pattern.decay_scale}};
  }
  doc["reps"] = config.reps;
  doc["alpha"] = config.alpha;
  doc["seed"] = config.seed;
  doc["methods"] = config.methods;
  doc["screening"] = {{"d_max", config.d_max}, {"ridge_eps", config.ridge_eps}};
  doc["sigma_mode"] =
      config.sigma_mode.kind == SigmaMode::Kind::ScaledLasso
          ? ordered_json{{"type", "scaled_lasso"}}
          : ordered_json{{"type", "fixed"}, {"value", config.sigma_mode.value}};
  doc["tuning"] =
      config.tuning.kind == TuningSpec::Kind::Gic
          ? ordered_json{{"type", "gic"},
                         {"grid_size", config.tuning.grid_size},
                         {"grid_ratio", config.tuning.grid_ratio}}
          : ordered_json{{"type", "fixed"},
                         {"lambda", config.tuning.fixed_lambda}};
  doc["scale_response"] = config.scale_response;
  doc["solver"] = {{"tol", config.solve.tol},
                   {"max_iter", config.solve.max_iter}};
  if (!config.cp_max_set.empty()) doc["cp_max_set"] = config.cp_max_set;
  return doc;
}

}  // namespace

std::string to_json_string(const SimulationReport& report, int indent) {
  ordered_json doc;
  doc["config"] = config_echo(report.config);
  if (report.config.pattern.kind == PatternSpec::Kind::ApproxSparse)
    doc["lambda_univ"] = report.lambda_univ;
  doc["reps_completed"] = report.reps_completed;
  doc["methods"] = ordered_json::array();
  for (const auto& m : report.methods) {
    ordered_json row;
    row["name"] = m.name;
    row["cp_all"] = m.cp_all;
    row["cp_max"] = m.cp_max;
    row["mean_length"] = m.mean_length;
    row["mean_sigma_hat"] = m.mean_sigma_hat;
    row["judged"] = m.judged;
    row["max_identity_gap"] = m.max_identity_gap;
    row["max_orth_violation"] = m.max_orth_violation;
    row["max_inner_lower_slack"] = m.max_inner_lower_slack;
    row["max_tau_excess"] = m.max_tau_excess;
    doc["methods"].push_back(std::move(row));
  }
  doc["warnings"] = report.warnings;
  return doc.dump(indent) + "\n";
}

std::string records_csv(const SimulationReport& report) {
  std::string out =
      "rep,method,j,beta_true,beta_hat,ci_lo,ci_hi,covered,length\n";
  for (const auto& r : report.records) {
    out += std::to_string(r.rep);
    out += ',';
    out += r.method;
    out += ',';
    out += std::to_string(r.j);
    for (double v : {r.beta_true, r.beta_hat, r.ci_lo, r.ci_hi}) {
      out += ',';
      out += format_double(v);
    }
    out += r.covered ? ",1," : ",0,";
    out += format_double(r.length);
    out += '\n';
  }
  return out;
}

}  // namespace hotinfer

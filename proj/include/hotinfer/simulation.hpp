#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hotinfer/dataset.hpp"
#include "hotinfer/inference.hpp"
#include "hotinfer/rng.hpp"

namespace hotinfer {

/// Coefficient layouts: the first s coordinates uniform on [lo, hi]
/// (sparse_uniform), or spikes of height spike_scale * sqrt(2 log(p)/n) on
/// the listed 1-based positions with decay_scale * sqrt(2 log(p)/n) / j^2
/// elsewhere (approx_sparse).
struct PatternSpec {
  enum class Kind { SparseUniform, ApproxSparse };
  Kind kind = Kind::SparseUniform;
  int s = 0;
  double lo = 0.0;
  double hi = 2.0;
  std::vector<int> spike_indices;  // 1-based positions
  double spike_scale = 3.0;
  double decay_scale = 3.0;
};

struct SimConfig {
  int n = 0;
  int p = 0;
  double rho = 0.0;
  double sigma = 1.0;
  PatternSpec pattern;
  int reps = 0;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::vector<std::string> methods = {"hot-sis", "ldpe"};
  int d_max = 0;
  double ridge_eps = 0.0;
  TuningSpec tuning{};
  SigmaMode sigma_mode{};
  bool scale_response = false;
  SolveOptions solve{};
  int threads = 1;
  std::vector<int> cp_max_set;  // optional 0-based override for CP_max
};

/// Rows are independent AR(1) paths: x_1 ~ N(0,1),
/// x_{k+1} = rho x_k + sqrt(1 - rho^2) N(0,1); entries are drawn row by row
/// in column order.
Eigen::MatrixXd gen_design(int n, int p, double rho, Rng& rng);

Eigen::VectorXd gen_coefficients(const PatternSpec& pattern, int n, int p,
                                 Rng& rng);

/// Diagonal of the inverse of the AR(1) Toeplitz correlation matrix
/// (rho^|i-j|), computed by dense factorization.
Eigen::VectorXd precision_diagonal(double rho, int p);

/// "hot-sis", "hot-holp", "ldpe", "hot-a-sis", "partial-sis", with an
/// optional "-split" suffix on screened methods.
struct MethodSpec {
  std::string name;
  Method method = Method::Hot;
  ScreenKind screen = ScreenKind::Sis;
  bool split = false;
};

MethodSpec parse_method(const std::string& name);

struct MethodAggregate {
  std::string name;
  double cp_all = 0.0;
  double cp_max = 0.0;
  double mean_length = 0.0;
  double mean_sigma_hat = 0.0;
  double max_identity_gap = 0.0;
  double max_orth_violation = 0.0;
  double max_inner_lower_slack = 0.0;
  double max_tau_excess = 0.0;
  long judged = 0;  // coordinate intervals entering cp_all
};

struct RepRecord {
  int rep = 0;
  std::string method;
  int j = 0;
  double beta_true = 0.0;
  double beta_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool covered = false;
  double length = 0.0;
};

struct SimulationReport {
  SimConfig config;
  double lambda_univ = 0.0;  // set for approx_sparse patterns
  int reps_completed = 0;
  std::vector<MethodAggregate> methods;
  std::vector<std::string> warnings;
  std::vector<RepRecord> records;  // only when keep_records
};

/// Runs the Monte-Carlo study. Replications are independent (child seed
/// derived from the master seed and the rep index) and may run on any number
/// of workers with byte-identical aggregates. A replication that fails is
/// dropped from every method with a warning; the run aborts when 5% or more
/// of the replications fail.
SimulationReport run_replications(const SimConfig& config,
                                  bool keep_records = false);

SimConfig parse_sim_config(const std::string& json_text);
std::string to_json_string(const SimulationReport& report, int indent = 2);
std::string records_csv(const SimulationReport& report);

}  // namespace hotinfer

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hotinfer/dataset.hpp"
#include "hotinfer/ortho.hpp"
#include "hotinfer/screening.hpp"
#include "hotinfer/solvers.hpp"

namespace hotinfer {

enum class Method { Hot, Ldpe, HotAlternative, Partial };

std::string method_name(Method method);

enum class ScreenKind { Sis, Holp, User };

struct SigmaMode {
  enum class Kind { ScaledLasso, Fixed };
  Kind kind = Kind::ScaledLasso;
  double value = 1.0;  // raw-scale noise level when fixed
};

struct InferenceConfig {
  Method method = Method::Hot;
  ScreenKind screen_kind = ScreenKind::Sis;
  std::vector<int> user_screen;   // ascending original column ids
  bool split_screening = false;   // first half screens, second half infers
  double alpha = 0.05;
  TuningSpec tuning{};
  SigmaMode sigma{};
  double lambda0 = 0.0;  // scaled lasso penalty; 0 means quantile-calibrated
  int d_max = 0;         // screened-set cap; 0 means the n / 2 guardrail
  double ridge_eps = 0.0;
  SolveOptions solve{};
  int threads = 1;  // 0 resolves HOTINFER_THREADS, then hardware
};

/// Raw-scale interval for one coordinate. tau and se satisfy
/// se = sigma_hat * tau on the raw scale; eta is the worst remaining
/// correlation of the direction on the standardized design.
struct InferenceResult {
  int j = 0;
  double beta_hat = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double p_value = 1.0;
  double tau = 0.0;
  double eta = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double p_value = 1.0;
};

/// Two-sided normal interval beta_hat -+ q_{1-alpha/2} * se and the matching
/// p-value for beta_j = 0.
Interval confidence_interval(double beta_hat, double se, double alpha);

/// Ratio estimator z'y / z'x_j.
double ratio_estimate(const Dataset& data, const HybridDirection& dir);

/// De-biased estimator init_j + z'(y - X init) / z'x_j.
double debiased_estimate(const Dataset& data, const HybridDirection& dir,
                         const Eigen::VectorXd& beta_init);

/// Exact error split of an estimate when the generating truth is known:
/// beta_hat - gamma_j = w_term + delta_term + identity_gap, with w_term the
/// noise part z'eps / z'x_j and delta_term the leakage from the coordinates
/// the direction was not exactly orthogonalized against.
struct DecompositionDiagnostic {
  double w_term = 0.0;
  double delta_term = 0.0;
  double identity_gap = 0.0;
};

DecompositionDiagnostic decompose_error(
    const Dataset& data, const HybridDirection& dir, double beta_hat_std,
    const Eigen::VectorXd& gamma, const Eigen::VectorXd& eps_std,
    const Eigen::VectorXd* beta_init = nullptr);

/// Standardized-model truth (gamma, eps_std) implied by raw-scale truth for
/// the given dataset: y_std = X_std gamma + eps_std exactly.
void standardized_truth(const Dataset& data, const OracleTruth& truth,
                        Eigen::VectorXd& gamma, Eigen::VectorXd& eps_std);

struct InferenceDiagnostics {
  double max_kkt_violation = 0.0;
  double max_orth_violation = 0.0;
  double max_inner_lower_slack = 0.0;
  double max_tau_excess = 0.0;
  double max_identity_gap = 0.0;  // only when truth supplied
  int directions_checked = 0;
};

struct InferenceReport {
  std::string method;
  double alpha = 0.05;
  double sigma_hat = 0.0;  // raw scale
  std::vector<InferenceResult> results;  // successful coordinates, j ascending
  std::vector<std::string> warnings;
  std::vector<int> screen_indices;
  int num_significant = 0;
  InferenceDiagnostics diagnostics;
};

/// Runs the full pipeline on standardized data: noise level, screening,
/// per-coordinate direction construction and intervals. Per-coordinate
/// failures become warnings rather than errors. Estimates are reported on
/// the raw data scale. When truth is given (and screening is not split) the
/// exact error decomposition is checked for every coordinate.
InferenceReport infer_all(const Dataset& data, const InferenceConfig& config,
                          const OracleTruth* truth = nullptr);

std::string to_json_string(const InferenceReport& report, int indent = 2);
std::string to_csv_string(const InferenceReport& report);

/// Writes content to path via a temp file and rename, so readers never see
/// a partial file.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace hotinfer

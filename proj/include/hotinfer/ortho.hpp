#pragma once

#include <string>
#include <vector>

#include "hotinfer/dataset.hpp"
#include "hotinfer/solvers.hpp"

namespace hotinfer {

/// Residuals of a column block against the span of a projection set.
struct ProjectedFeatures {
  int j = -1;                      // target column, -1 for a shared block
  std::vector<int> projection_set; // ascending
  std::vector<int> columns;        // ascending, the residualized columns
  int target_pos = -1;             // position of j within columns
  Eigen::MatrixXd psi;             // n x columns.size()
  Eigen::VectorXd psi_norms;       // L2 norms of psi columns
};

/// psi_k = (I - P_{S \ {j}}) x_k for k in {j} union S^c, computed through a
/// pivoted QR of the projection block. Fails with RankDeficientScreenSet
/// when the projection columns are linearly dependent.
ProjectedFeatures exact_orthogonalize(const Dataset& data,
                                      const std::vector<int>& screen, int j);

/// Residualizes every non-screened column against the full screen set. For
/// any j outside the screen set this block coincides with
/// exact_orthogonalize(data, screen, j) column for column.
ProjectedFeatures shared_orthogonalize(const Dataset& data,
                                       const std::vector<int>& screen);

struct TuningSpec {
  enum class Kind { Gic, Fixed };
  Kind kind = Kind::Gic;
  double fixed_lambda = 0.0;
  int grid_size = 50;
  double grid_ratio = 0.01;
};

/// A direction z_j for de-biased inference on coordinate j, together with
/// the quantities the interval construction needs. tau = ||z|| / |z'x_j| is
/// the standard-error factor, eta the worst remaining correlation
/// max_{k != j} |z'x_k| / ||z||.
struct HybridDirection {
  int j = -1;
  std::string method;  // "hot" | "partial" | "ldpe"
  Eigen::VectorXd z;
  double lambda_j = 0.0;
  double tau = 0.0;
  double eta = 0.0;
  double z_norm = 0.0;
  double zx_j = 0.0;
  std::vector<int> relaxed_columns;  // original ids of penalized columns
  Eigen::VectorXd omega;             // their fitted coefficients
  std::vector<int> omega_support;    // original ids with omega != 0
  Eigen::VectorXd free_coefficients; // partial route only, aligned with screen \ {j}
  bool converged = true;
  double kkt_violation = 0.0;
};

/// Two-step construction: exact orthogonalization against the screen set,
/// then a weighted lasso of psi_j on the remaining psi columns with weights
/// ||psi_k|| / sqrt(n), lambda picked by GIC unless fixed.
HybridDirection hybrid_direction(const Dataset& data,
                                 const std::vector<int>& screen, int j,
                                 const TuningSpec& tuning = {},
                                 const SolveOptions& opts = {});

/// Same, reusing a precomputed projection block (j must be one of its
/// columns).
HybridDirection hybrid_direction_from(const Dataset& data,
                                      const ProjectedFeatures& pf, int j,
                                      const TuningSpec& tuning = {},
                                      const SolveOptions& opts = {});

/// One-step equivalent route: weighted lasso of x_j on all other columns
/// with the screen coordinates unpenalized and weights ||psi_k|| / sqrt(n)
/// on the rest. With the same lambda and weights its residual matches the
/// two-step construction.
HybridDirection partial_penalized_direction(const Dataset& data,
                                            const std::vector<int>& screen,
                                            int j, double lambda,
                                            const SolveOptions& opts = {});

/// Baseline direction: plain lasso residual of x_j on the other columns.
HybridDirection ldpe_direction(const Dataset& data, int j,
                               const TuningSpec& tuning = {},
                               const SolveOptions& opts = {});

/// Recomputed optimality and orthogonality certificates for a direction.
struct DirectionCertificate {
  double orth_violation = 0.0;    // max_s in S\{j} |z'x_s|
  double kkt_excess = 0.0;        // max_k max(0, |z'psi_k| - sqrt(n) lam ||psi_k||)
  double inner_identity_gap = 0.0; // z'x_j - ||z||^2 - sqrt(n) lam sum_k ||psi_k|| |omega_k|
  double inner_lower_slack = 0.0; // max(0, ||z||^2 (1 - 1e-8) - z'x_j)
  double tau_excess = 0.0;        // max(0, tau - 1/||z||)
};

DirectionCertificate certify_direction(const Dataset& data,
                                       const std::vector<int>& screen,
                                       const HybridDirection& dir);

}  // namespace hotinfer

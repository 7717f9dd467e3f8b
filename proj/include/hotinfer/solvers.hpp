#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace hotinfer {

/// Penalty for a weighted lasso problem on q coordinates:
///   (2n)^-1 ||target - design b||^2 + lambda * sum_{k penalized} w_k |b_k|.
/// Coordinates listed in free_set carry no penalty; their weights entries
/// are ignored.
struct PenaltySpec {
  double lambda = 0.0;
  Eigen::VectorXd weights;
  std::vector<int> free_set;
};

struct SolveOptions {
  double tol = 1e-7;
  int max_iter = 10000;
  bool check_rank = true;
};

struct LassoFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residual;  // target - design * coefficients, recomputed
  double lambda_used = 0.0;
  int iterations = 0;  // coordinate sweeps
  bool converged = false;
  double kkt_violation = 0.0;
};

/// Cyclic coordinate descent with an active-set strategy. Sweeps run in
/// ascending coordinate order, so the result is deterministic. Free
/// coordinates are updated by unpenalized coordinate minimization; their
/// columns are checked for full rank up front. On iteration exhaustion the
/// best iterate is returned with converged = false.
LassoFit weighted_lasso(const Eigen::MatrixXd& design,
                        const Eigen::VectorXd& target,
                        const PenaltySpec& penalty,
                        const Eigen::VectorXd* warm_start = nullptr,
                        const SolveOptions& opts = {});

/// Max KKT slack of b for the weighted lasso objective; residual must equal
/// target - design * b.
double lasso_kkt_violation(const Eigen::MatrixXd& design,
                           const Eigen::VectorXd& residual,
                           const Eigen::VectorXd& coefficients,
                           const PenaltySpec& penalty);

struct ScaledLassoFit {
  Eigen::VectorXd beta;
  double sigma_hat = 0.0;
  double lambda0 = 0.0;
  int iterations = 0;  // outer sigma updates
  bool converged = false;
};

/// Joint estimation of coefficients and noise level by alternating a lasso
/// step at penalty sigma * lambda0 with the update sigma = ||r||_2 / sqrt(n),
/// started from sigma = ||target||_2 / sqrt(n).
ScaledLassoFit scaled_lasso(const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& target, double lambda0,
                            const SolveOptions& opts = {},
                            double sigma_tol = 1e-8, int max_outer = 100);

/// Conventional choice sqrt(2 log(p) / n) for the scaled lasso penalty.
double universal_lambda(int n, int p);

/// Quantile-calibrated penalty level sqrt(2/n) * L, where L solves the
/// damped fixed point L = Phi^{-1}(1 - (L^4 + 2 L^2) / p). Sits below the
/// universal level and removes most of the upward bias the universal choice
/// puts on the jointly estimated noise level when many coefficients are
/// active. Default for the scaled lasso when no explicit lambda0 is given.
double quantile_lambda(int n, int p);

struct GicPoint {
  double lambda = 0.0;
  double gic = 0.0;
  double rss = 0.0;
  int support_size = 0;
  bool converged = false;
  Eigen::VectorXd coefficients;
};

struct GicPath {
  std::vector<GicPoint> points;  // in grid order (descending lambda)
  int best_index = -1;
  LassoFit best_fit;
};

/// Null-model threshold: smallest lambda at which every penalized
/// coefficient is zero (free coordinates fitted by least squares first).
double lambda_max(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                  const PenaltySpec& penalty);

/// Log-spaced descending grid from lambda_max down to ratio * lambda_max.
std::vector<double> default_lambda_grid(const Eigen::MatrixXd& design,
                                        const Eigen::VectorXd& target,
                                        const PenaltySpec& penalty,
                                        int size = 50, double ratio = 0.01);

/// Fits the grid with warm starts and scores each point by
///   GIC(lambda) = log(RSS/n) + |support| * log(log n) * log(q) / n.
/// Ties are broken toward the larger lambda.
GicPath gic_tune(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                 const PenaltySpec& penalty, const std::vector<double>& grid,
                 const SolveOptions& opts = {});

}  // namespace hotinfer

#include "hotinfer/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hotinfer/errors.hpp"
#include "hotinfer/normal.hpp"

namespace hotinfer {

namespace {

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

std::vector<char> free_mask_of(const PenaltySpec& penalty, int q) {
  std::vector<char> mask(static_cast<size_t>(q), 0);
  for (int k : penalty.free_set) {
    if (k < 0 || k >= q)
      fail(ErrorCode::IndexOutOfRange,
           "free coordinate " + std::to_string(k) + " outside [0, " +
               std::to_string(q) + ")");
    if (mask[static_cast<size_t>(k)])
      fail(ErrorCode::IndexOutOfRange,
           "free coordinate " + std::to_string(k) + " listed twice");
    mask[static_cast<size_t>(k)] = 1;
  }
  return mask;
}

void validate_problem(const Eigen::MatrixXd& design,
                      const Eigen::VectorXd& target,
                      const PenaltySpec& penalty) {
  if (design.rows() != target.size())
    fail(ErrorCode::DimensionMismatch, "design rows != target length");
  if (design.cols() < 1)
    fail(ErrorCode::DimensionMismatch, "design has no columns");
  if (!design.allFinite() || !target.allFinite())
    fail(ErrorCode::NonFiniteInput, "design or target contains NaN/Inf");
  if (!(penalty.lambda >= 0.0) || !std::isfinite(penalty.lambda))
    fail(ErrorCode::ConfigError, "lambda must be finite and nonnegative");
  if (penalty.weights.size() != design.cols())
    fail(ErrorCode::DimensionMismatch, "weights length != design columns");
  for (int k = 0; k < penalty.weights.size(); ++k)
    if (!(penalty.weights[k] >= 0.0) || !std::isfinite(penalty.weights[k]))
      fail(ErrorCode::ConfigError, "weights must be finite and nonnegative");
}

void check_free_rank(const Eigen::MatrixXd& design,
                     const std::vector<int>& free_set) {
  if (free_set.empty()) return;
  Eigen::MatrixXd block(design.rows(), static_cast<Eigen::Index>(free_set.size()));
  double max_norm = 0.0;
  for (size_t i = 0; i < free_set.size(); ++i) {
    block.col(static_cast<Eigen::Index>(i)) = design.col(free_set[i]);
    max_norm = std::max(max_norm, block.col(static_cast<Eigen::Index>(i)).norm());
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(block);
  const Eigen::Index m = std::min(block.rows(), block.cols());
  int rank = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::fabs(qr.matrixR()(i, i)) > 1e-10 * max_norm) ++rank;
  if (rank < static_cast<int>(free_set.size()))
    fail(ErrorCode::RankDeficientFreeSet,
         "free columns have rank " + std::to_string(rank) + " < " +
             std::to_string(free_set.size()));
}

}  // namespace

double lasso_kkt_violation(const Eigen::MatrixXd& design,
                           const Eigen::VectorXd& residual,
                           const Eigen::VectorXd& coefficients,
                           const PenaltySpec& penalty) {
  const int q = static_cast<int>(design.cols());
  const double n = static_cast<double>(design.rows());
  const std::vector<char> is_free = free_mask_of(penalty, q);
  double worst = 0.0;
  for (int k = 0; k < q; ++k) {
    const double g = design.col(k).dot(residual) / n;
    double slack;
    if (is_free[static_cast<size_t>(k)]) {
      slack = std::fabs(g);
    } else {
      const double thr = penalty.lambda * penalty.weights[k];
      if (coefficients[k] != 0.0)
        slack = std::fabs(g - thr * (coefficients[k] > 0.0 ? 1.0 : -1.0));
      else
        slack = std::max(0.0, std::fabs(g) - thr);
    }
    worst = std::max(worst, slack);
  }
  return worst;
}

LassoFit weighted_lasso(const Eigen::MatrixXd& design,
                        const Eigen::VectorXd& target,
                        const PenaltySpec& penalty,
                        const Eigen::VectorXd* warm_start,
                        const SolveOptions& opts) {
  validate_problem(design, target, penalty);
  const int n = static_cast<int>(design.rows());
  const int q = static_cast<int>(design.cols());
  const std::vector<char> is_free = free_mask_of(penalty, q);
  if (opts.check_rank) check_free_rank(design, penalty.free_set);

  Eigen::VectorXd col_sq(q);
  for (int k = 0; k < q; ++k) col_sq[k] = design.col(k).squaredNorm() / n;
  const double max_sq = col_sq.maxCoeff();
  // Columns this small are numerically in the span of nothing useful; their
  // coefficients are pinned to zero.
  const double inert_below = std::max(1e-20 * max_sq, 1e-300);
  std::vector<char> inert(static_cast<size_t>(q), 0);
  for (int k = 0; k < q; ++k)
    if (col_sq[k] <= inert_below) inert[static_cast<size_t>(k)] = 1;

  Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
  if (warm_start != nullptr) {
    if (warm_start->size() != q)
      fail(ErrorCode::DimensionMismatch, "warm start length != columns");
    b = *warm_start;
    for (int k = 0; k < q; ++k)
      if (inert[static_cast<size_t>(k)]) b[k] = 0.0;
  }

  Eigen::VectorXd r = target;
  if ((b.array() != 0.0).any()) r.noalias() -= design * b;

  Eigen::VectorXd thr(q);
  for (int k = 0; k < q; ++k) thr[k] = penalty.lambda * penalty.weights[k];

  std::vector<char> active(static_cast<size_t>(q), 0);
  auto refresh_active = [&] {
    for (int k = 0; k < q; ++k)
      active[static_cast<size_t>(k)] =
          !inert[static_cast<size_t>(k)] &&
          (is_free[static_cast<size_t>(k)] || b[k] != 0.0);
  };
  refresh_active();

  auto update = [&](int k) -> double {
    if (inert[static_cast<size_t>(k)]) return 0.0;
    const double g = design.col(k).dot(r) / n;
    const double bk = b[k];
    double candidate;
    if (is_free[static_cast<size_t>(k)])
      candidate = bk + g / col_sq[k];
    else
      candidate = soft_threshold(g + col_sq[k] * bk, thr[k]) / col_sq[k];
    const double delta = candidate - bk;
    if (delta != 0.0) {
      r.noalias() -= design.col(k) * delta;
      b[k] = candidate;
    }
    return std::fabs(delta);
  };

  const double kkt_tol = opts.tol * std::max(1.0, max_sq);
  int sweeps = 0;
  bool converged = false;
  double kkt = std::numeric_limits<double>::infinity();
  while (sweeps < opts.max_iter) {
    while (sweeps < opts.max_iter) {
      double dmax = 0.0;
      for (int k = 0; k < q; ++k)
        if (active[static_cast<size_t>(k)]) dmax = std::max(dmax, update(k));
      ++sweeps;
      if (dmax <= opts.tol) break;
    }
    if (sweeps >= opts.max_iter) break;

    double dmax = 0.0;
    for (int k = 0; k < q; ++k) dmax = std::max(dmax, update(k));
    ++sweeps;
    refresh_active();
    if (dmax <= opts.tol) {
      r = target;
      r.noalias() -= design * b;
      kkt = lasso_kkt_violation(design, r, b, penalty);
      if (kkt <= kkt_tol) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    r = target;
    r.noalias() -= design * b;
    kkt = lasso_kkt_violation(design, r, b, penalty);
  }

  LassoFit fit;
  fit.coefficients = std::move(b);
  fit.residual = std::move(r);
  fit.lambda_used = penalty.lambda;
  fit.iterations = sweeps;
  fit.converged = converged;
  fit.kkt_violation = kkt;
  return fit;
}

double universal_lambda(int n, int p) {
  if (n < 1 || p < 2)
    fail(ErrorCode::DimensionMismatch, "universal lambda needs n >= 1, p >= 2");
  return std::sqrt(2.0 * std::log(static_cast<double>(p)) / n);
}

double quantile_lambda(int n, int p) {
  if (n < 1 || p < 2)
    fail(ErrorCode::DimensionMismatch, "quantile lambda needs n >= 1, p >= 2");
  // Damped fixed point for L = Phi^{-1}(1 - (L^4 + 2 L^2) / p). Averaging
  // successive iterates makes the map contractive for any realistic p; for
  // tiny p the slope at the root exceeds one even damped and the iteration
  // wanders, in which case the universal level is the sensible answer. The
  // universal level is also an upper clamp so the quantile choice never
  // penalises harder.
  const double pd = static_cast<double>(p);
  double level = 0.1;
  bool settled = false;
  for (int it = 0; it < 1000; ++it) {
    const double mass = (std::pow(level, 4) + 2.0 * level * level) / pd;
    const double next = normal_quantile(1.0 - std::min(mass, 0.99));
    const double updated = 0.5 * (level + next);
    if (std::abs(updated - level) < 1e-12) {
      level = updated;
      settled = true;
      break;
    }
    level = updated;
  }
  if (!settled || !(level > 0.0) || !std::isfinite(level))
    return universal_lambda(n, p);
  return std::min(std::sqrt(2.0 / n) * level, universal_lambda(n, p));
}

ScaledLassoFit scaled_lasso(const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& target, double lambda0,
                            const SolveOptions& opts, double sigma_tol,
                            int max_outer) {
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
    fail(ErrorCode::ConfigError, "lambda0 must be finite and positive");
  const int n = static_cast<int>(design.rows());
  const int q = static_cast<int>(design.cols());
  const double root_n = std::sqrt(static_cast<double>(n));

  ScaledLassoFit out;
  out.lambda0 = lambda0;
  double sigma = target.norm() / root_n;
  if (sigma < 1e-12)
    fail(ErrorCode::SigmaCollapse, "response is numerically zero");

  PenaltySpec penalty;
  penalty.weights = Eigen::VectorXd::Ones(q);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  for (int outer = 1; outer <= max_outer; ++outer) {
    penalty.lambda = sigma * lambda0;
    const LassoFit fit = weighted_lasso(design, target, penalty, &beta, opts);
    beta = fit.coefficients;
    const double sigma_new = fit.residual.norm() / root_n;
    if (sigma_new < 1e-12)
      fail(ErrorCode::SigmaCollapse,
           "residual norm collapsed; noise level is not identifiable");
    out.iterations = outer;
    const bool done = std::fabs(sigma_new - sigma) <= sigma_tol;
    sigma = sigma_new;
    if (done) {
      out.converged = true;
      break;
    }
  }
  out.beta = std::move(beta);
  out.sigma_hat = sigma;
  return out;
}

double lambda_max(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                  const PenaltySpec& penalty) {
  validate_problem(design, target, penalty);
  const int q = static_cast<int>(design.cols());
  const double n = static_cast<double>(design.rows());
  const std::vector<char> is_free = free_mask_of(penalty, q);

  Eigen::VectorXd base = target;
  if (!penalty.free_set.empty()) {
    Eigen::MatrixXd block(design.rows(),
                          static_cast<Eigen::Index>(penalty.free_set.size()));
    for (size_t i = 0; i < penalty.free_set.size(); ++i)
      block.col(static_cast<Eigen::Index>(i)) = design.col(penalty.free_set[i]);
    base -= block * Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(block).solve(target);
  }

  double max_col_sq = 0.0;
  for (int k = 0; k < q; ++k)
    max_col_sq = std::max(max_col_sq, design.col(k).squaredNorm() / n);
  const double inert_below = std::max(1e-20 * max_col_sq, 1e-300);

  double lmax = 0.0;
  for (int k = 0; k < q; ++k) {
    if (is_free[static_cast<size_t>(k)]) continue;
    if (design.col(k).squaredNorm() / n <= inert_below) continue;
    if (penalty.weights[k] <= 0.0) continue;
    lmax = std::max(lmax,
                    std::fabs(design.col(k).dot(base)) / (n * penalty.weights[k]));
  }
  return lmax;
}

std::vector<double> default_lambda_grid(const Eigen::MatrixXd& design,
                                        const Eigen::VectorXd& target,
                                        const PenaltySpec& penalty, int size,
                                        double ratio) {
  if (size < 1 || !(ratio > 0.0 && ratio < 1.0))
    fail(ErrorCode::ConfigError, "grid needs size >= 1 and ratio in (0, 1)");
  // Nudged upward so the top of the grid reproduces the null model even
  // after rounding in the threshold comparison.
  const double lmax = lambda_max(design, target, penalty) * (1.0 + 1e-10);
  if (lmax <= 1e-300) return {0.0};
  if (size == 1) return {lmax};
  std::vector<double> grid(static_cast<size_t>(size));
  for (int i = 0; i < size; ++i)
    grid[static_cast<size_t>(i)] =
        lmax * std::pow(ratio, static_cast<double>(i) / (size - 1));
  return grid;
}

GicPath gic_tune(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                 const PenaltySpec& penalty, const std::vector<double>& grid,
                 const SolveOptions& opts) {
  if (grid.empty()) fail(ErrorCode::ConfigError, "empty lambda grid");
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i]))
      fail(ErrorCode::ConfigError, "grid values must be finite and positive");
    if (i > 0 && grid[i] >= grid[i - 1])
      fail(ErrorCode::ConfigError, "grid must be strictly decreasing");
  }
  const double n = static_cast<double>(design.rows());
  const double q = static_cast<double>(design.cols());
  const double rss_floor = std::max(1e-24 * target.squaredNorm(), 1e-300);
  const double dim_cost = std::log(std::log(n)) * std::log(q) / n;

  if (opts.check_rank) check_free_rank(design, penalty.free_set);
  SolveOptions inner = opts;
  inner.check_rank = false;

  GicPath path;
  PenaltySpec point_penalty = penalty;
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(design.cols());
  int failures = 0;
  for (double lambda : grid) {
    point_penalty.lambda = lambda;
    GicPoint point;
    point.lambda = lambda;
    LassoFit fit;
    try {
      fit = weighted_lasso(design, target, point_penalty, &warm, inner);
    } catch (const Error&) {
      ++failures;
      continue;
    }
    warm = fit.coefficients;
    point.rss = fit.residual.squaredNorm();
    point.support_size =
        static_cast<int>((fit.coefficients.array() != 0.0).count());
    point.gic = std::log(std::max(point.rss, rss_floor) / n) +
                point.support_size * dim_cost;
    point.converged = fit.converged;
    point.coefficients = fit.coefficients;
    path.points.push_back(std::move(point));
    const int idx = static_cast<int>(path.points.size()) - 1;
    if (path.best_index < 0 ||
        path.points[static_cast<size_t>(idx)].gic <
            path.points[static_cast<size_t>(path.best_index)].gic) {
      path.best_index = idx;
      path.best_fit = std::move(fit);
    }
  }
  if (path.points.empty())
    fail(ErrorCode::AllFitsFailed,
         "all " + std::to_string(failures) + " grid points failed");
  return path;
}

}  // namespace hotinfer

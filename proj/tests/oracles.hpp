// Independent reference implementations used to validate the production
// solvers. Deliberately slow and brute-force: the exhaustive lasso oracle
// enumerates sign patterns, the projection oracle goes through normal
// equations, and the scaled-lasso oracle pairs a FISTA inner solver with the
// noise-level fixed point. Frozen; do not "optimize" these toward the
// implementations they check.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hotinfer/dataset.hpp"
#include "hotinfer/rng.hpp"
#include "hotinfer/solvers.hpp"

namespace oracle {

inline double lasso_objective(const Eigen::MatrixXd& design,
                              const Eigen::VectorXd& target,
                              const hotinfer::PenaltySpec& penalty,
                              const Eigen::VectorXd& b) {
  const double n = static_cast<double>(design.rows());
  double value = (target - design * b).squaredNorm() / (2.0 * n);
  std::vector<char> is_free(static_cast<size_t>(design.cols()), 0);
  for (int k : penalty.free_set) is_free[static_cast<size_t>(k)] = 1;
  for (int k = 0; k < design.cols(); ++k)
    if (!is_free[static_cast<size_t>(k)])
      value += penalty.lambda * penalty.weights[k] * std::abs(b[k]);
  return value;
}

/// Exact weighted-lasso solution by enumerating every support/sign pattern
/// of the penalized coordinates and solving the stationarity equations.
/// Requires at most 12 penalized coordinates.
inline Eigen::VectorXd exhaustive_lasso(const Eigen::MatrixXd& design,
                                        const Eigen::VectorXd& target,
                                        const hotinfer::PenaltySpec& penalty) {
  const int q = static_cast<int>(design.cols());
  const double n = static_cast<double>(design.rows());
  std::vector<char> is_free(static_cast<size_t>(q), 0);
  for (int k : penalty.free_set) is_free[static_cast<size_t>(k)] = 1;
  std::vector<int> penalized;
  for (int k = 0; k < q; ++k)
    if (!is_free[static_cast<size_t>(k)]) penalized.push_back(k);
  if (penalized.size() > 12)
    throw std::runtime_error("exhaustive_lasso: too many penalized columns");

  long patterns = 1;
  for (size_t i = 0; i < penalized.size(); ++i) patterns *= 3;

  Eigen::VectorXd best = Eigen::VectorXd::Zero(q);
  double best_obj = std::numeric_limits<double>::infinity();
  bool found = false;

  std::vector<int> state(penalized.size(), 0);  // 0, +1, -1 per coordinate
  for (long code = 0; code < patterns; ++code) {
    long c = code;
    for (size_t i = 0; i < penalized.size(); ++i) {
      const int digit = static_cast<int>(c % 3);
      state[i] = digit == 2 ? -1 : digit;
      c /= 3;
    }

    std::vector<int> active = penalty.free_set;
    std::vector<double> sign_of(static_cast<size_t>(q), 0.0);
    for (size_t i = 0; i < penalized.size(); ++i) {
      if (state[i] != 0) {
        active.push_back(penalized[i]);
        sign_of[static_cast<size_t>(penalized[i])] = state[i];
      }
    }

    Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
    if (!active.empty()) {
      Eigen::MatrixXd block(design.rows(), static_cast<int>(active.size()));
      Eigen::VectorXd rhs(static_cast<int>(active.size()));
      for (size_t i = 0; i < active.size(); ++i) {
        const int k = active[i];
        block.col(static_cast<int>(i)) = design.col(k);
        double shift = 0.0;
        if (!is_free[static_cast<size_t>(k)])
          shift = n * penalty.lambda * penalty.weights[k] *
                  sign_of[static_cast<size_t>(k)];
        rhs[static_cast<int>(i)] = design.col(k).dot(target) - shift;
      }
      const Eigen::MatrixXd gram = block.transpose() * block;
      const Eigen::VectorXd sol = gram.ldlt().solve(rhs);
      if ((gram * sol - rhs).norm() >
          1e-8 * std::max(1.0, rhs.norm()))
        continue;  // singular pattern
      for (size_t i = 0; i < active.size(); ++i) b[active[i]] = sol[static_cast<int>(i)];
    }

    // Feasibility: declared signs must hold and inactive penalized gradients
    // must stay inside the subdifferential box.
    bool feasible = true;
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    for (size_t i = 0; i < penalized.size() && feasible; ++i) {
      const int k = penalized[i];
      if (state[i] != 0 && state[i] * b[k] < -1e-10 * scale) feasible = false;
    }
    if (feasible) {
      const Eigen::VectorXd r = target - design * b;
      for (int k : penalized) {
        if (sign_of[static_cast<size_t>(k)] != 0.0) continue;
        const double bound = n * penalty.lambda * penalty.weights[k];
        if (std::abs(design.col(k).dot(r)) > bound * (1.0 + 1e-9) + 1e-9) {
          feasible = false;
          break;
        }
      }
    }
    if (!feasible) continue;

    const double obj = lasso_objective(design, target, penalty, b);
    if (obj < best_obj) {
      best_obj = obj;
      best = b;
      found = true;
    }
  }
  if (!found)
    throw std::runtime_error("exhaustive_lasso: no feasible sign pattern");
  return best;
}

/// FISTA for the weighted lasso, independent of the coordinate-descent
/// implementation. Free coordinates take plain gradient steps.
inline Eigen::VectorXd fista_lasso(const Eigen::MatrixXd& design,
                                   const Eigen::VectorXd& target,
                                   const hotinfer::PenaltySpec& penalty,
                                   const Eigen::VectorXd* warm = nullptr,
                                   double tol = 1e-11,
                                   int max_iter = 400000) {
  const int q = static_cast<int>(design.cols());
  const double n = static_cast<double>(design.rows());
  std::vector<char> is_free(static_cast<size_t>(q), 0);
  for (int k : penalty.free_set) is_free[static_cast<size_t>(k)] = 1;

  const Eigen::MatrixXd gram = design.transpose() * design / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double lips = std::max(eig.eigenvalues().maxCoeff(), 1e-12);

  Eigen::VectorXd b = warm ? *warm : Eigen::VectorXd::Zero(q);
  Eigen::VectorXd v = b;
  double momentum = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd grad = gram * v - design.transpose() * target / n;
    Eigen::VectorXd next = v - grad / lips;
    for (int k = 0; k < q; ++k) {
      if (is_free[static_cast<size_t>(k)]) continue;
      const double thresh = penalty.lambda * penalty.weights[k] / lips;
      if (next[k] > thresh) next[k] -= thresh;
      else if (next[k] < -thresh) next[k] += thresh;
      else next[k] = 0.0;
    }
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    v = next + ((momentum - 1.0) / momentum_next) * (next - b);
    // Function-value restart keeps the momentum from overshooting.
    if (lasso_objective(design, target, penalty, next) >
        lasso_objective(design, target, penalty, b)) {
      v = b;
      momentum = 1.0;
    } else {
      b = next;
      momentum = momentum_next;
    }
    if (it % 50 == 0) {
      const Eigen::VectorXd r = target - design * b;
      if (hotinfer::lasso_kkt_violation(design, r, b, penalty) <= tol) break;
    }
  }
  return b;
}

struct ScaledOracle {
  Eigen::VectorXd beta;
  double sigma = 0.0;
};

/// Scaled-lasso fixed point with a FISTA inner solver.
inline ScaledOracle prox_scaled_lasso(const Eigen::MatrixXd& design,
                                      const Eigen::VectorXd& target,
                                      double lambda0) {
  const double n = static_cast<double>(design.rows());
  double sigma = target.norm() / std::sqrt(n);
  hotinfer::PenaltySpec penalty;
  penalty.weights = Eigen::VectorXd::Ones(design.cols());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(design.cols());
  for (int outer = 0; outer < 500; ++outer) {
    penalty.lambda = sigma * lambda0;
    b = fista_lasso(design, target, penalty, &b);
    const double sigma_next = (target - design * b).norm() / std::sqrt(n);
    if (std::abs(sigma_next - sigma) <= 1e-12) {
      sigma = sigma_next;
      break;
    }
    sigma = sigma_next;
  }
  return {b, sigma};
}

/// Residual of x against the span of block, through the normal equations.
inline Eigen::VectorXd project_out_oracle(const Eigen::MatrixXd& block,
                                          const Eigen::VectorXd& x) {
  if (block.cols() == 0) return x;
  const Eigen::MatrixXd gram = block.transpose() * block;
  const Eigen::VectorXd coef = gram.ldlt().solve(block.transpose() * x);
  return x - block * coef;
}

/// Standardized AR(1) toy dataset with a short true signal.
inline hotinfer::Dataset toy_dataset(int n, int p, double rho,
                                     std::uint64_t seed, int s = 3,
                                     double noise = 0.5) {
  hotinfer::Rng rng(seed);
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.gaussian();
    for (int k = 1; k < p; ++k)
      X(i, k) = rho * X(i, k - 1) +
                std::sqrt(1.0 - rho * rho) * rng.gaussian();
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int k = 0; k < s && k < p; ++k) beta[k] = 1.0 + 0.5 * k;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = X.row(i).dot(beta) + noise * rng.gaussian();
  return hotinfer::standardize(X, y, false);
}

}  // namespace oracle

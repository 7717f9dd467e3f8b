#include "hotinfer/screening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hotinfer/errors.hpp"

namespace hotinfer {

namespace {

std::vector<int> rank_by_score(const Eigen::VectorXd& score) {
  std::vector<int> order(static_cast<size_t>(score.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  return order;
}

}  // namespace

std::vector<int> sis_rank(const Dataset& data) {
  const Eigen::VectorXd score = (data.X.transpose() * data.y).cwiseAbs();
  return rank_by_score(score);
}

std::vector<int> holp_rank(const Dataset& data, double ridge_eps) {
  if (!(ridge_eps >= 0.0) || !std::isfinite(ridge_eps))
    fail(ErrorCode::ConfigError, "ridge_eps must be finite and nonnegative");
  const int n = data.n();
  Eigen::MatrixXd gram = data.X * data.X.transpose();
  Eigen::VectorXd u;
  if (ridge_eps > 0.0) {
    gram.diagonal().array() += ridge_eps;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
      fail(ErrorCode::SingularGram, "ridged Gram matrix is not positive definite");
    u = llt.solve(data.y);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    u = qr.solve(data.y);
    const double gap = (gram * u - data.y).norm();
    if (gap > 1e-8 * std::max(data.y.norm(), 1e-300))
      fail(ErrorCode::SingularGram,
           "Gram system unsolvable for this response (n = " +
               std::to_string(n) + "); pass ridge_eps > 0");
  }
  const Eigen::VectorXd score = (data.X.transpose() * u).cwiseAbs();
  return rank_by_score(score);
}

int default_d_max(int n, int p) {
  // The screened-set size is chosen by BIC; this cap is only a guardrail
  // that keeps the OLS scan well-posed (at least half the observations left
  // as residual degrees of freedom). A rate-style cap such as n / log(n)
  // silently truncates the screen below the signal count on moderate
  // samples, and the exact projection then loses its strongest columns.
  return std::max(1, std::min({n / 2, n - 2, p}));
}

ScreenSet bic_select(const Dataset& data, const std::vector<int>& ranking,
                     int d_max, const std::string& method) {
  const int n = data.n();
  const int p = data.p();
  if (ranking.empty())
    fail(ErrorCode::ConfigError, "empty ranking");
  std::vector<char> seen(static_cast<size_t>(p), 0);
  for (int k : ranking) {
    if (k < 0 || k >= p)
      fail(ErrorCode::IndexOutOfRange,
           "ranked column " + std::to_string(k) + " outside [0, " +
               std::to_string(p) + ")");
    if (seen[static_cast<size_t>(k)])
      fail(ErrorCode::IndexOutOfRange,
           "column " + std::to_string(k) + " ranked twice");
    seen[static_cast<size_t>(k)] = 1;
  }
  if (d_max < 1) fail(ErrorCode::ConfigError, "d_max must be >= 1");
  d_max = std::min({d_max, n - 2, static_cast<int>(ranking.size())});
  if (d_max < 1)
    fail(ErrorCode::ConfigError, "too few rows for any screened set");

  const double rss_floor = std::max(1e-24 * data.y.squaredNorm(), 1e-300);
  ScreenSet out;
  out.method = method;
  out.ranking = ranking;

  Eigen::MatrixXd block(n, d_max);
  double best_bic = 0.0;
  int best_d = -1;
  for (int d = 1; d <= d_max; ++d) {
    block.col(d - 1) = data.X.col(ranking[static_cast<size_t>(d - 1)]);
    const auto prefix = block.leftCols(d);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(prefix);
    double max_norm = 0.0;
    for (int c = 0; c < d; ++c)
      max_norm = std::max(max_norm, prefix.col(c).norm());
    int rank = 0;
    for (int i = 0; i < std::min(n, d); ++i)
      if (std::fabs(qr.matrixR()(i, i)) > 1e-10 * max_norm) ++rank;
    if (rank < d) {
      out.warnings.push_back("bic: d=" + std::to_string(d) +
                             " skipped, rank-deficient prefix");
      continue;
    }
    const Eigen::VectorXd coef = qr.solve(data.y);
    const double rss = (data.y - prefix * coef).squaredNorm();
    const double bic = n * std::log(std::max(rss, rss_floor) / n) +
                       d * std::log(static_cast<double>(n));
    if (best_d < 0 || bic < best_bic) {
      best_bic = bic;
      best_d = d;
    }
  }
  if (best_d < 0)
    fail(ErrorCode::AllRankDeficient, "every prefix size was rank-deficient");

  out.d = best_d;
  out.indices.assign(ranking.begin(), ranking.begin() + best_d);
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

}  // namespace hotinfer

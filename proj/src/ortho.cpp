#include "hotinfer/ortho.hpp"

#include <algorithm>
#include <cmath>

#include "hotinfer/errors.hpp"

namespace hotinfer {

namespace {

void validate_screen(const Dataset& data, const std::vector<int>& screen) {
  const int p = data.p();
  for (size_t i = 0; i < screen.size(); ++i) {
    if (screen[i] < 0 || screen[i] >= p)
      fail(ErrorCode::IndexOutOfRange,
           "screen index " + std::to_string(screen[i]) + " outside [0, " +
               std::to_string(p) + ")");
    if (i > 0 && screen[i] <= screen[i - 1])
      fail(ErrorCode::IndexOutOfRange, "screen set must be strictly ascending");
  }
  if (static_cast<int>(screen.size()) >= data.n())
    fail(ErrorCode::RankDeficientScreenSet,
         "screen set size must be below the number of rows");
}

ProjectedFeatures project_out(const Dataset& data,
                              std::vector<int> projection_set,
                              std::vector<int> columns) {
  const int n = data.n();
  ProjectedFeatures pf;
  pf.projection_set = std::move(projection_set);
  pf.columns = std::move(columns);

  const int m = static_cast<int>(pf.columns.size());
  pf.psi.resize(n, m);
  for (int c = 0; c < m; ++c) pf.psi.col(c) = data.X.col(pf.columns[static_cast<size_t>(c)]);

  const int d = static_cast<int>(pf.projection_set.size());
  if (d > 0) {
    Eigen::MatrixXd block(n, d);
    double max_norm = 0.0;
    for (int c = 0; c < d; ++c) {
      block.col(c) = data.X.col(pf.projection_set[static_cast<size_t>(c)]);
      max_norm = std::max(max_norm, block.col(c).norm());
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(block);
    int rank = 0;
    for (int i = 0; i < std::min(n, d); ++i)
      if (std::fabs(qr.matrixR()(i, i)) > 1e-10 * max_norm) ++rank;
    if (rank < d)
      fail(ErrorCode::RankDeficientScreenSet,
           "projection block has rank " + std::to_string(rank) + " < " +
               std::to_string(d));
    const Eigen::MatrixXd thin_q =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
    pf.psi.noalias() -= thin_q * (thin_q.transpose() * pf.psi);
  }

  pf.psi_norms.resize(m);
  for (int c = 0; c < m; ++c) pf.psi_norms[c] = pf.psi.col(c).norm();
  return pf;
}

/// Fits the relaxed step (target on design with the given weights) at a
/// GIC-tuned or fixed lambda. Returns the fit and the lambda used.
std::pair<LassoFit, double> relaxed_fit(const Eigen::MatrixXd& design,
                                        const Eigen::VectorXd& target,
                                        const Eigen::VectorXd& weights,
                                        const TuningSpec& tuning,
                                        const SolveOptions& opts) {
  PenaltySpec penalty;
  penalty.weights = weights;
  if (tuning.kind == TuningSpec::Kind::Fixed) {
    if (!(tuning.fixed_lambda >= 0.0) || !std::isfinite(tuning.fixed_lambda))
      fail(ErrorCode::ConfigError, "fixed lambda must be finite and nonnegative");
    penalty.lambda = tuning.fixed_lambda;
    return {weighted_lasso(design, target, penalty, nullptr, opts),
            penalty.lambda};
  }
  const std::vector<double> grid =
      default_lambda_grid(design, target, penalty, tuning.grid_size,
                          tuning.grid_ratio);
  if (grid.size() == 1 && grid[0] == 0.0) {
    penalty.lambda = 0.0;
    return {weighted_lasso(design, target, penalty, nullptr, opts), 0.0};
  }
  GicPath path = gic_tune(design, target, penalty, grid, opts);
  return {std::move(path.best_fit),
          path.points[static_cast<size_t>(path.best_index)].lambda};
}

/// Fills the shared statistics (tau, eta, guards) of a direction whose z,
/// lambda and support are already set.
void finalize_direction(const Dataset& data, int j, HybridDirection& dir) {
  const double root_n = std::sqrt(static_cast<double>(data.n()));
  dir.z_norm = dir.z.norm();
  if (dir.z_norm <= 1e-10 * root_n)
    fail(ErrorCode::DegenerateDirection,
         "direction for j=" + std::to_string(j) + " is numerically zero");
  dir.zx_j = data.X.col(j).dot(dir.z);
  const double xj_norm = data.X.col(j).norm();
  if (std::fabs(dir.zx_j) <= 1e-12 * dir.z_norm * xj_norm)
    fail(ErrorCode::DegenerateInnerProduct,
         "z'x_j vanishes for j=" + std::to_string(j));
  dir.tau = dir.z_norm / std::fabs(dir.zx_j);

  const Eigen::VectorXd corr = data.X.transpose() * dir.z;
  double worst = 0.0;
  for (int k = 0; k < data.p(); ++k)
    if (k != j) worst = std::max(worst, std::fabs(corr[k]));
  dir.eta = worst / dir.z_norm;
}

HybridDirection build_from_block(const Dataset& data,
                                 const ProjectedFeatures& pf, int j,
                                 int target_pos, const TuningSpec& tuning,
                                 const SolveOptions& opts) {
  const int n = data.n();
  const int m = static_cast<int>(pf.columns.size());
  const double root_n = std::sqrt(static_cast<double>(n));

  HybridDirection dir;
  dir.j = j;
  dir.method = "hot";

  const int q = m - 1;
  const Eigen::VectorXd target = pf.psi.col(target_pos);
  if (q == 0) {
    dir.z = target;
    dir.lambda_j = 0.0;
    dir.omega.resize(0);
    finalize_direction(data, j, dir);
    return dir;
  }

  Eigen::MatrixXd design(n, q);
  Eigen::VectorXd weights(q);
  dir.relaxed_columns.reserve(static_cast<size_t>(q));
  int c = 0;
  for (int pos = 0; pos < m; ++pos) {
    if (pos == target_pos) continue;
    design.col(c) = pf.psi.col(pos);
    weights[c] = pf.psi_norms[pos] / root_n;
    dir.relaxed_columns.push_back(pf.columns[static_cast<size_t>(pos)]);
    ++c;
  }

  auto [fit, lambda] = relaxed_fit(design, target, weights, tuning, opts);
  dir.lambda_j = lambda;
  dir.omega = fit.coefficients;
  dir.z = fit.residual;
  dir.converged = fit.converged;
  dir.kkt_violation = fit.kkt_violation;
  for (int k = 0; k < q; ++k)
    if (dir.omega[k] != 0.0)
      dir.omega_support.push_back(dir.relaxed_columns[static_cast<size_t>(k)]);
  finalize_direction(data, j, dir);
  return dir;
}

}  // namespace

ProjectedFeatures exact_orthogonalize(const Dataset& data,
                                      const std::vector<int>& screen, int j) {
  validate_screen(data, screen);
  if (j < 0 || j >= data.p())
    fail(ErrorCode::IndexOutOfRange, "target column " + std::to_string(j));

  std::vector<int> projection_set;
  projection_set.reserve(screen.size());
  for (int s : screen)
    if (s != j) projection_set.push_back(s);

  std::vector<char> screened(static_cast<size_t>(data.p()), 0);
  for (int s : screen) screened[static_cast<size_t>(s)] = 1;
  std::vector<int> columns;
  for (int k = 0; k < data.p(); ++k)
    if (k == j || !screened[static_cast<size_t>(k)]) columns.push_back(k);

  ProjectedFeatures pf = project_out(data, std::move(projection_set),
                                     std::move(columns));
  pf.j = j;
  pf.target_pos = static_cast<int>(
      std::lower_bound(pf.columns.begin(), pf.columns.end(), j) -
      pf.columns.begin());
  return pf;
}

ProjectedFeatures shared_orthogonalize(const Dataset& data,
                                       const std::vector<int>& screen) {
  validate_screen(data, screen);
  std::vector<char> screened(static_cast<size_t>(data.p()), 0);
  for (int s : screen) screened[static_cast<size_t>(s)] = 1;
  std::vector<int> columns;
  for (int k = 0; k < data.p(); ++k)
    if (!screened[static_cast<size_t>(k)]) columns.push_back(k);
  if (columns.empty())
    fail(ErrorCode::IndexOutOfRange, "screen set covers every column");
  return project_out(data, screen, std::move(columns));
}

HybridDirection hybrid_direction(const Dataset& data,
                                 const std::vector<int>& screen, int j,
                                 const TuningSpec& tuning,
                                 const SolveOptions& opts) {
  const ProjectedFeatures pf = exact_orthogonalize(data, screen, j);
  return build_from_block(data, pf, j, pf.target_pos, tuning, opts);
}

HybridDirection hybrid_direction_from(const Dataset& data,
                                      const ProjectedFeatures& pf, int j,
                                      const TuningSpec& tuning,
                                      const SolveOptions& opts) {
  const auto it = std::lower_bound(pf.columns.begin(), pf.columns.end(), j);
  if (it == pf.columns.end() || *it != j)
    fail(ErrorCode::IndexOutOfRange,
         "column " + std::to_string(j) + " is not part of the block");
  const int target_pos = static_cast<int>(it - pf.columns.begin());
  return build_from_block(data, pf, j, target_pos, tuning, opts);
}

HybridDirection partial_penalized_direction(const Dataset& data,
                                            const std::vector<int>& screen,
                                            int j, double lambda,
                                            const SolveOptions& opts) {
  const ProjectedFeatures pf = exact_orthogonalize(data, screen, j);
  const int n = data.n();
  const int p = data.p();
  const double root_n = std::sqrt(static_cast<double>(n));

  Eigen::MatrixXd design(n, p - 1);
  PenaltySpec penalty;
  penalty.lambda = lambda;
  penalty.weights = Eigen::VectorXd::Zero(p - 1);

  std::vector<int> design_cols;
  design_cols.reserve(static_cast<size_t>(p - 1));
  for (int k = 0; k < p; ++k)
    if (k != j) design_cols.push_back(k);

  std::vector<char> is_screen(static_cast<size_t>(p), 0);
  for (int s : screen) is_screen[static_cast<size_t>(s)] = 1;

  // psi norms by original column id
  std::vector<double> norm_of(static_cast<size_t>(p), 0.0);
  for (size_t c = 0; c < pf.columns.size(); ++c)
    norm_of[static_cast<size_t>(pf.columns[c])] = pf.psi_norms[static_cast<Eigen::Index>(c)];

  std::vector<int> penalized_cols;
  for (int c = 0; c < p - 1; ++c) {
    const int k = design_cols[static_cast<size_t>(c)];
    design.col(c) = data.X.col(k);
    if (is_screen[static_cast<size_t>(k)]) {
      penalty.free_set.push_back(c);
    } else {
      penalty.weights[c] = norm_of[static_cast<size_t>(k)] / root_n;
      penalized_cols.push_back(k);
    }
  }

  const LassoFit fit =
      weighted_lasso(design, data.X.col(j), penalty, nullptr, opts);

  HybridDirection dir;
  dir.j = j;
  dir.method = "partial";
  dir.lambda_j = lambda;
  dir.z = fit.residual;
  dir.converged = fit.converged;
  dir.kkt_violation = fit.kkt_violation;
  dir.relaxed_columns = penalized_cols;
  dir.omega.resize(static_cast<Eigen::Index>(penalized_cols.size()));
  dir.free_coefficients.resize(static_cast<Eigen::Index>(penalty.free_set.size()));
  {
    Eigen::Index fi = 0, oi = 0;
    for (int c = 0; c < p - 1; ++c) {
      if (is_screen[static_cast<size_t>(design_cols[static_cast<size_t>(c)])])
        dir.free_coefficients[fi++] = fit.coefficients[c];
      else
        dir.omega[oi++] = fit.coefficients[c];
    }
  }
  for (Eigen::Index k = 0; k < dir.omega.size(); ++k)
    if (dir.omega[k] != 0.0)
      dir.omega_support.push_back(dir.relaxed_columns[static_cast<size_t>(k)]);
  finalize_direction(data, j, dir);
  return dir;
}

HybridDirection ldpe_direction(const Dataset& data, int j,
                               const TuningSpec& tuning,
                               const SolveOptions& opts) {
  if (j < 0 || j >= data.p())
    fail(ErrorCode::IndexOutOfRange, "target column " + std::to_string(j));
  const int n = data.n();
  const int p = data.p();
  const double root_n = std::sqrt(static_cast<double>(n));

  Eigen::MatrixXd design(n, p - 1);
  Eigen::VectorXd weights(p - 1);
  HybridDirection dir;
  dir.j = j;
  dir.method = "ldpe";
  int c = 0;
  for (int k = 0; k < p; ++k) {
    if (k == j) continue;
    design.col(c) = data.X.col(k);
    weights[c] = design.col(c).norm() / root_n;
    dir.relaxed_columns.push_back(k);
    ++c;
  }

  auto [fit, lambda] =
      relaxed_fit(design, data.X.col(j), weights, tuning, opts);
  dir.lambda_j = lambda;
  dir.omega = fit.coefficients;
  dir.z = fit.residual;
  dir.converged = fit.converged;
  dir.kkt_violation = fit.kkt_violation;
  for (Eigen::Index k = 0; k < dir.omega.size(); ++k)
    if (dir.omega[k] != 0.0)
      dir.omega_support.push_back(dir.relaxed_columns[static_cast<size_t>(k)]);
  finalize_direction(data, j, dir);
  return dir;
}

DirectionCertificate certify_direction(const Dataset& data,
                                       const std::vector<int>& screen,
                                       const HybridDirection& dir) {
  const double root_n = std::sqrt(static_cast<double>(data.n()));
  DirectionCertificate cert;

  std::vector<int> projection_set;
  for (int s : screen)
    if (s != dir.j) projection_set.push_back(s);
  for (int s : projection_set)
    cert.orth_violation = std::max(
        cert.orth_violation, std::fabs(data.X.col(s).dot(dir.z)));

  // Recompute the projected columns the relaxed step ran on.
  const ProjectedFeatures pf =
      dir.method == "ldpe"
          ? ProjectedFeatures{}
          : exact_orthogonalize(data, screen, dir.j);

  double weighted_l1 = 0.0;
  if (dir.method == "ldpe") {
    for (size_t i = 0; i < dir.relaxed_columns.size(); ++i) {
      const int k = dir.relaxed_columns[i];
      const double norm_k = data.X.col(k).norm();
      const double bound = root_n * dir.lambda_j * norm_k;
      cert.kkt_excess =
          std::max(cert.kkt_excess,
                   std::fabs(data.X.col(k).dot(dir.z)) - bound);
      weighted_l1 += norm_k * std::fabs(dir.omega[static_cast<Eigen::Index>(i)]);
    }
  } else {
    std::vector<double> norm_of(static_cast<size_t>(data.p()), 0.0);
    for (size_t c = 0; c < pf.columns.size(); ++c)
      norm_of[static_cast<size_t>(pf.columns[c])] =
          pf.psi_norms[static_cast<Eigen::Index>(c)];
    for (size_t i = 0; i < dir.relaxed_columns.size(); ++i) {
      const int k = dir.relaxed_columns[i];
      const double bound = root_n * dir.lambda_j * norm_of[static_cast<size_t>(k)];
      cert.kkt_excess =
          std::max(cert.kkt_excess,
                   std::fabs(data.X.col(k).dot(dir.z)) - bound);
      weighted_l1 +=
          norm_of[static_cast<size_t>(k)] * std::fabs(dir.omega[static_cast<Eigen::Index>(i)]);
    }
  }
  cert.kkt_excess = std::max(cert.kkt_excess, 0.0);

  const double zz = dir.z.squaredNorm();
  cert.inner_identity_gap =
      dir.zx_j - zz - root_n * dir.lambda_j * weighted_l1;
  cert.inner_lower_slack = std::max(0.0, zz * (1.0 - 1e-8) - dir.zx_j);
  cert.tau_excess = std::max(0.0, dir.tau - 1.0 / dir.z_norm);
  return cert;
}

}  // namespace hotinfer

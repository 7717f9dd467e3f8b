#include "hotinfer/selftest.hpp"

#include <cmath>
#include <cstdio>

#include "hotinfer/dataset.hpp"
#include "hotinfer/inference.hpp"
#include "hotinfer/normal.hpp"
#include "hotinfer/ortho.hpp"
#include "hotinfer/rng.hpp"
#include "hotinfer/solvers.hpp"

namespace hotinfer {

namespace {

std::string describe(double value, double bound) {
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%.3e (bound %.1e)", value, bound);
  return buf;
}

Dataset toy_data(int n, int p, double rho, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, p);
  const double innovation = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.gaussian();
    for (int k = 1; k < p; ++k)
      X(i, k) = rho * X(i, k - 1) + innovation * rng.gaussian();
  }
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = 1.5 * X(i, 0) - 2.0 * X(i, 2) + 0.5 * rng.gaussian();
  return standardize(X, y, false);
}

}  // namespace

std::vector<SelftestResult> run_selftest() {
  std::vector<SelftestResult> out;

  {
    SelftestResult r{"normal-quantile", false, ""};
    const double q = normal_quantile(0.975);
    const double gap = std::fabs(q - 1.959963985);
    const double roundtrip = std::fabs(normal_cdf(normal_quantile(0.9)) - 0.9);
    r.pass = gap <= 1e-6 && roundtrip <= 1e-9;
    r.detail = describe(std::max(gap, roundtrip), 1e-6);
    out.push_back(r);
  }

  {
    SelftestResult r{"weighted-lasso-kkt", false, ""};
    const Dataset data = toy_data(40, 8, 0.5, 99);
    PenaltySpec penalty;
    penalty.lambda = 0.1;
    penalty.weights = Eigen::VectorXd::Ones(7);
    penalty.free_set = {1};
    Eigen::MatrixXd design = data.X.rightCols(7);
    SolveOptions opts;
    opts.tol = 1e-10;
    const LassoFit fit =
        weighted_lasso(design, data.X.col(0), penalty, nullptr, opts);
    const double kkt =
        lasso_kkt_violation(design, fit.residual, fit.coefficients, penalty);
    r.pass = fit.converged && kkt <= 1e-9;
    r.detail = describe(kkt, 1e-9);
    out.push_back(r);
  }

  {
    SelftestResult r{"orthogonalization", false, ""};
    const Dataset data = toy_data(50, 10, 0.6, 7);
    const std::vector<int> screen = {1, 4, 7};
    const ProjectedFeatures pf = exact_orthogonalize(data, screen, 0);
    double worst = 0.0;
    for (int s : screen)
      for (int c = 0; c < static_cast<int>(pf.columns.size()); ++c)
        worst = std::max(worst,
                         std::fabs(data.X.col(s).dot(pf.psi.col(c))));
    r.pass = worst <= 1e-8;
    r.detail = describe(worst, 1e-8);
    out.push_back(r);
  }

  {
    SelftestResult r{"route-equivalence", false, ""};
    const Dataset data = toy_data(48, 16, 0.4, 21);
    const std::vector<int> screen = {0, 2, 5};
    SolveOptions opts;
    opts.tol = 1e-11;
    const HybridDirection two_step =
        hybrid_direction(data, screen, 3, TuningSpec{}, opts);
    const HybridDirection one_step =
        partial_penalized_direction(data, screen, 3, two_step.lambda_j, opts);
    const double gap = (two_step.z - one_step.z).lpNorm<Eigen::Infinity>();
    const double scale = two_step.z.lpNorm<Eigen::Infinity>();
    r.pass = gap <= 1e-7 * scale;
    r.detail = describe(gap / scale, 1e-7);
    out.push_back(r);
  }

  {
    SelftestResult r{"scaled-lasso-null", false, ""};
    const Dataset data = toy_data(40, 6, 0.3, 5);
    const ScaledLassoFit fit = scaled_lasso(data.X, data.y, 50.0);
    const double want = data.y.norm() / std::sqrt(40.0);
    const double gap = std::fabs(fit.sigma_hat - want);
    r.pass = fit.beta.cwiseAbs().maxCoeff() == 0.0 && gap == 0.0;
    r.detail = describe(gap, 0.0);
    out.push_back(r);
  }

  {
    SelftestResult r{"interval-arithmetic", false, ""};
    const Interval iv = confidence_interval(1.0, 0.5, 0.05);
    const double q = normal_quantile(0.975);
    const double lo_gap = std::fabs(iv.lo - (1.0 - 0.5 * q));
    const double hi_gap = std::fabs(iv.hi - (1.0 + 0.5 * q));
    const double p_gap =
        std::fabs(iv.p_value - 2.0 * normal_cdf(-2.0));
    const double worst = std::max({lo_gap, hi_gap, p_gap});
    r.pass = worst <= 1e-12;
    r.detail = describe(worst, 1e-12);
    out.push_back(r);
  }

  return out;
}

}  // namespace hotinfer

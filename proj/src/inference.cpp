#include "hotinfer/inference.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hotinfer/errors.hpp"
#include "hotinfer/normal.hpp"
#include "hotinfer/parallel.hpp"

namespace hotinfer {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void validate_user_screen(int p, const std::vector<int>& screen) {
  for (size_t i = 0; i < screen.size(); ++i) {
    if (screen[i] < 0 || screen[i] >= p)
      fail(ErrorCode::IndexOutOfRange,
           "screen index " + std::to_string(screen[i]) + " outside [0, " +
               std::to_string(p) + ")");
    if (i > 0 && screen[i] <= screen[i - 1])
      fail(ErrorCode::IndexOutOfRange,
           "user screen set must be strictly ascending");
  }
}

struct PerCoordinate {
  bool ok = false;
  InferenceResult result;
  std::string warning;
  double kkt_violation = 0.0;
  double orth_violation = 0.0;
  double inner_lower_slack = 0.0;
  double tau_excess = 0.0;
  double identity_gap = 0.0;
  bool solver_converged = true;
};

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::Hot: return "hot";
    case Method::Ldpe: return "ldpe";
    case Method::HotAlternative: return "hot-a";
    case Method::Partial: return "partial";
  }
  return "unknown";
}

Interval confidence_interval(double beta_hat, double se, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    fail(ErrorCode::InvalidAlpha,
         "alpha must lie strictly between 0 and 1, got " + format_double(alpha));
  if (!(se >= 0.0) || !std::isfinite(se) || !std::isfinite(beta_hat))
    fail(ErrorCode::NonFiniteInput, "interval inputs must be finite, se >= 0");
  const double quantile = normal_quantile(1.0 - alpha / 2.0);
  Interval out;
  out.lo = beta_hat - quantile * se;
  out.hi = beta_hat + quantile * se;
  out.p_value = se > 0.0 ? 2.0 * normal_cdf(-std::fabs(beta_hat) / se)
                         : (beta_hat == 0.0 ? 1.0 : 0.0);
  return out;
}

double ratio_estimate(const Dataset& data, const HybridDirection& dir) {
  return dir.z.dot(data.y) / dir.zx_j;
}

double debiased_estimate(const Dataset& data, const HybridDirection& dir,
                         const Eigen::VectorXd& beta_init) {
  if (beta_init.size() != data.p())
    fail(ErrorCode::DimensionMismatch, "initial estimate length != p");
  const Eigen::VectorXd residual = data.y - data.X * beta_init;
  return beta_init[dir.j] + dir.z.dot(residual) / dir.zx_j;
}

void standardized_truth(const Dataset& data, const OracleTruth& truth,
                        Eigen::VectorXd& gamma, Eigen::VectorXd& eps_std) {
  if (truth.beta.size() != data.p() || truth.noise.size() != data.n())
    fail(ErrorCode::DimensionMismatch, "truth shapes do not match data");
  gamma = truth.beta.cwiseProduct(data.column_scales) / data.response_scale;
  const double shift =
      data.response_mean - data.column_means.dot(truth.beta);
  eps_std = (truth.noise.array() - shift) / data.response_scale;
}

DecompositionDiagnostic decompose_error(
    const Dataset& data, const HybridDirection& dir, double beta_hat_std,
    const Eigen::VectorXd& gamma, const Eigen::VectorXd& eps_std,
    const Eigen::VectorXd* beta_init) {
  DecompositionDiagnostic out;
  out.w_term = dir.z.dot(eps_std) / dir.zx_j;
  const Eigen::VectorXd corr = data.X.transpose() * dir.z;
  double delta = 0.0;
  if (beta_init == nullptr) {
    // Analytically only the relaxed columns leak (the rest are exactly
    // orthogonalized); summing every k != j additionally captures the
    // solver-precision leakage of the partially penalized route, keeping the
    // identity exact in floating point.
    for (int k = 0; k < data.p(); ++k)
      if (k != dir.j) delta += corr[k] * gamma[k];
  } else {
    for (int k = 0; k < data.p(); ++k)
      if (k != dir.j) delta += corr[k] * (gamma[k] - (*beta_init)[k]);
  }
  out.delta_term = delta / dir.zx_j;
  out.identity_gap =
      std::fabs(beta_hat_std - gamma[dir.j] - out.w_term - out.delta_term);
  return out;
}

InferenceReport infer_all(const Dataset& data, const InferenceConfig& config,
                          const OracleTruth* truth) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    fail(ErrorCode::InvalidAlpha,
         "alpha must lie strictly between 0 and 1, got " +
             format_double(config.alpha));

  InferenceReport report;
  report.method = method_name(config.method);
  report.alpha = config.alpha;

  // Resolve the working dataset and the composed raw->work scale maps.
  std::optional<Dataset> screen_half;
  std::optional<Dataset> infer_half;
  if (config.split_screening) {
    const int n = data.n();
    if (n < 8)
      fail(ErrorCode::DimensionMismatch, "split screening needs n >= 8");
    const int h = n / 2;
    screen_half = standardize(data.X.topRows(h), data.y.head(h), false);
    infer_half =
        standardize(data.X.bottomRows(n - h), data.y.tail(n - h), false);
  }
  const Dataset& work = config.split_screening ? *infer_half : data;
  Eigen::VectorXd eff_scale = data.column_scales;
  double eff_response_scale = data.response_scale;
  if (config.split_screening) {
    eff_scale = eff_scale.cwiseProduct(work.column_scales);
    eff_response_scale *= work.response_scale;
  }

  // Noise level and, when needed, the initial coefficient estimate.
  const bool needs_init = config.method == Method::Ldpe ||
                          config.method == Method::HotAlternative;
  const double lambda0 = config.lambda0 > 0.0
                             ? config.lambda0
                             : quantile_lambda(work.n(), work.p());
  double sigma_work = 0.0;
  Eigen::VectorXd beta_init;
  if (config.sigma.kind == SigmaMode::Kind::ScaledLasso || needs_init) {
    const ScaledLassoFit sl =
        scaled_lasso(work.X, work.y, lambda0, config.solve);
    if (!sl.converged)
      report.warnings.push_back("scaled lasso: sigma updates did not settle");
    sigma_work = sl.sigma_hat;
    beta_init = sl.beta;
  }
  if (config.sigma.kind == SigmaMode::Kind::Fixed) {
    if (!(config.sigma.value > 0.0) || !std::isfinite(config.sigma.value))
      fail(ErrorCode::ConfigError, "fixed sigma must be finite and positive");
    sigma_work = config.sigma.value / eff_response_scale;
  }
  report.sigma_hat = sigma_work * eff_response_scale;

  // Screening.
  std::vector<int> screen;
  if (config.method != Method::Ldpe) {
    if (config.screen_kind == ScreenKind::User) {
      screen = config.user_screen;
      validate_user_screen(data.p(), screen);
    } else {
      const Dataset& screen_data =
          config.split_screening ? *screen_half : work;
      const std::vector<int> ranking = config.screen_kind == ScreenKind::Sis
                                           ? sis_rank(screen_data)
                                           : holp_rank(screen_data, config.ridge_eps);
      const int d_max = config.d_max > 0
                            ? config.d_max
                            : default_d_max(screen_data.n(), screen_data.p());
      ScreenSet set = bic_select(screen_data, ranking, d_max,
                                 config.screen_kind == ScreenKind::Sis
                                     ? "sis"
                                     : "holp");
      for (const auto& w : set.warnings) report.warnings.push_back(w);
      screen = set.indices;
    }
  }
  report.screen_indices = screen;

  // Shared projection block for coordinates outside the screen set.
  std::optional<ProjectedFeatures> shared;
  if (config.method == Method::Hot ||
      config.method == Method::HotAlternative) {
    if (static_cast<int>(screen.size()) < work.p())
      shared = shared_orthogonalize(work, screen);
  }

  std::optional<Eigen::VectorXd> gamma;
  std::optional<Eigen::VectorXd> eps_std;
  if (truth != nullptr && !config.split_screening) {
    gamma.emplace();
    eps_std.emplace();
    standardized_truth(work, *truth, *gamma, *eps_std);
  }

  std::vector<char> in_screen(static_cast<size_t>(work.p()), 0);
  for (int s : screen) in_screen[static_cast<size_t>(s)] = 1;

  const int p = work.p();
  std::vector<PerCoordinate> slots(static_cast<size_t>(p));
  const double quantile = normal_quantile(1.0 - config.alpha / 2.0);

  auto run_one = [&](int j) {
    PerCoordinate& slot = slots[static_cast<size_t>(j)];
    try {
      HybridDirection dir;
      switch (config.method) {
        case Method::Hot:
        case Method::HotAlternative:
          dir = in_screen[static_cast<size_t>(j)] || !shared
                    ? hybrid_direction(work, screen, j, config.tuning,
                                       config.solve)
                    : hybrid_direction_from(work, *shared, j, config.tuning,
                                            config.solve);
          break;
        case Method::Partial: {
          const HybridDirection tuned =
              in_screen[static_cast<size_t>(j)] || !shared
                  ? hybrid_direction(work, screen, j, config.tuning,
                                     config.solve)
                  : hybrid_direction_from(work, *shared, j, config.tuning,
                                          config.solve);
          dir = partial_penalized_direction(work, screen, j, tuned.lambda_j,
                                            config.solve);
          break;
        }
        case Method::Ldpe:
          dir = ldpe_direction(work, j, config.tuning, config.solve);
          break;
      }

      const bool ratio = config.method == Method::Hot ||
                         config.method == Method::Partial;
      const double beta_std =
          ratio ? ratio_estimate(work, dir)
                : debiased_estimate(work, dir, beta_init);
      const double se_std = sigma_work * dir.tau;
      const double factor = eff_response_scale / eff_scale[j];

      InferenceResult res;
      res.j = j;
      res.beta_hat = beta_std * factor;
      res.se = se_std * factor;
      res.ci_lo = res.beta_hat - quantile * res.se;
      res.ci_hi = res.beta_hat + quantile * res.se;
      res.p_value = se_std > 0.0
                        ? 2.0 * normal_cdf(-std::fabs(beta_std) / se_std)
                        : (beta_std == 0.0 ? 1.0 : 0.0);
      res.tau = dir.tau / eff_scale[j];
      res.eta = dir.eta;
      slot.result = res;
      slot.ok = true;
      slot.solver_converged = dir.converged;
      slot.kkt_violation = dir.kkt_violation;
      for (int s : screen)
        if (s != j)
          slot.orth_violation = std::max(
              slot.orth_violation, std::fabs(work.X.col(s).dot(dir.z)));
      slot.inner_lower_slack =
          std::max(0.0, dir.z.squaredNorm() * (1.0 - 1e-8) - dir.zx_j);
      slot.tau_excess = std::max(0.0, dir.tau - 1.0 / dir.z_norm);
      if (gamma) {
        const DecompositionDiagnostic dd = decompose_error(
            work, dir, beta_std, *gamma, *eps_std,
            ratio ? nullptr : &beta_init);
        slot.identity_gap = dd.identity_gap;
      }
    } catch (const Error& err) {
      slot.ok = false;
      slot.warning = "j=" + std::to_string(j) + ": " + err.what();
    }
  };

  parallel_for(p, resolve_threads(config.threads), run_one);

  for (int j = 0; j < p; ++j) {
    const PerCoordinate& slot = slots[static_cast<size_t>(j)];
    if (!slot.ok) {
      report.warnings.push_back(slot.warning);
      continue;
    }
    if (!slot.solver_converged)
      report.warnings.push_back("j=" + std::to_string(j) +
                                ": relaxed solver hit the iteration cap");
    report.results.push_back(slot.result);
    if (slot.result.p_value < config.alpha) ++report.num_significant;
    auto& diag = report.diagnostics;
    diag.max_kkt_violation = std::max(diag.max_kkt_violation, slot.kkt_violation);
    diag.max_orth_violation =
        std::max(diag.max_orth_violation, slot.orth_violation);
    diag.max_inner_lower_slack =
        std::max(diag.max_inner_lower_slack, slot.inner_lower_slack);
    diag.max_tau_excess = std::max(diag.max_tau_excess, slot.tau_excess);
    diag.max_identity_gap = std::max(diag.max_identity_gap, slot.identity_gap);
    ++diag.directions_checked;
  }
  return report;
}

std::string to_json_string(const InferenceReport& report, int indent) {
  nlohmann::ordered_json doc;
  doc["method"] = report.method;
  doc["alpha"] = report.alpha;
  doc["sigma_hat"] = report.sigma_hat;
  doc["results"] = nlohmann::ordered_json::array();
  for (const auto& r : report.results) {
    nlohmann::ordered_json row;
    row["j"] = r.j;
    row["beta_hat"] = r.beta_hat;
    row["se"] = r.se;
    row["ci"] = {r.ci_lo, r.ci_hi};
    row["p_value"] = r.p_value;
    row["tau"] = r.tau;
    row["eta"] = r.eta;
    doc["results"].push_back(std::move(row));
  }
  doc["warnings"] = report.warnings;
  doc["screen_indices"] = report.screen_indices;
  doc["num_significant"] = report.num_significant;
  doc["diagnostics"] = {
      {"max_kkt_violation", report.diagnostics.max_kkt_violation},
      {"max_orth_violation", report.diagnostics.max_orth_violation},
      {"max_inner_lower_slack", report.diagnostics.max_inner_lower_slack},
      {"max_tau_excess", report.diagnostics.max_tau_excess},
      {"max_identity_gap", report.diagnostics.max_identity_gap},
      {"directions_checked", report.diagnostics.directions_checked},
  };
  return doc.dump(indent) + "\n";
}

std::string to_csv_string(const InferenceReport& report) {
  std::string out = "j,beta_hat,se,ci_lo,ci_hi,p_value,tau,eta\n";
  for (const auto& r : report.results) {
    out += std::to_string(r.j);
    for (double v : {r.beta_hat, r.se, r.ci_lo, r.ci_hi, r.p_value, r.tau,
                     r.eta}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::ConfigError, "cannot write " + tmp);
    out << content;
    if (!out.flush())
      fail(ErrorCode::ConfigError, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    fail(ErrorCode::ConfigError,
         "cannot move " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace hotinfer

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace hotinfer {

/// Design matrix and response, with the centering/scaling bookkeeping needed
/// to map fitted coefficients back to the raw data scale.
///
/// Standardized form: every column of X has mean 0 and L2-norm sqrt(n). The
/// response is always centered (an unpenalized intercept); it is scaled to
/// norm sqrt(n) only when requested.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  bool standardized = false;

  Eigen::VectorXd column_means;   // p
  Eigen::VectorXd column_scales;  // p, raw-column norm / sqrt(n)
  double response_mean = 0.0;
  double response_scale = 1.0;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }

  /// Wraps raw data without touching it (scales 1, means 0). Inputs must be
  /// finite with n >= 4 and p >= 2.
  static Dataset from_raw(Eigen::MatrixXd X, Eigen::VectorXd y);

  /// Raw-scale fitted values for standardized-scale coefficients.
  Eigen::VectorXd predict_raw(const Eigen::MatrixXd& raw_X,
                              const Eigen::VectorXd& std_coef) const;
};

/// Centers and scales columns to norm sqrt(n); centers the response and
/// optionally scales it too. A column with norm below 1e-12 * sqrt(n) after
/// centering is degenerate and rejected. Idempotent.
Dataset standardize(const Eigen::MatrixXd& raw_X, const Eigen::VectorXd& raw_y,
                    bool scale_response);

/// Ground truth attached to a simulated dataset.
struct OracleTruth {
  Eigen::VectorXd beta;   // raw-scale coefficients
  Eigen::VectorXd noise;  // raw-scale noise vector
  double sigma = 0.0;
};

/// Reads a rectangular numeric CSV. Rejects ragged rows, empty cells, and
/// non-numeric entries. Column names are taken from the header when
/// has_header is true, otherwise generated as c0, c1, ...
struct CsvTable {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
};

CsvTable read_csv(const std::string& path, bool has_header);

}  // namespace hotinfer

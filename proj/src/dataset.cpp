#include "hotinfer/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hotinfer/errors.hpp"

namespace hotinfer {

namespace {

void check_shape(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size())
    fail(ErrorCode::DimensionMismatch,
         "X has " + std::to_string(X.rows()) + " rows but y has " +
             std::to_string(y.size()));
  if (X.rows() < 4)
    fail(ErrorCode::DimensionMismatch, "need at least 4 observations");
  if (X.cols() < 2)
    fail(ErrorCode::DimensionMismatch, "need at least 2 columns");
  if (!X.allFinite() || !y.allFinite())
    fail(ErrorCode::NonFiniteInput, "design or response contains NaN/Inf");
}

}  // namespace

Dataset Dataset::from_raw(Eigen::MatrixXd X, Eigen::VectorXd y) {
  check_shape(X, y);
  Dataset data;
  data.column_means = Eigen::VectorXd::Zero(X.cols());
  data.column_scales = Eigen::VectorXd::Ones(X.cols());
  data.X = std::move(X);
  data.y = std::move(y);
  return data;
}

Eigen::VectorXd Dataset::predict_raw(const Eigen::MatrixXd& raw_X,
                                     const Eigen::VectorXd& std_coef) const {
  if (raw_X.cols() != p() || std_coef.size() != p())
    fail(ErrorCode::DimensionMismatch, "prediction shapes do not match");
  Eigen::VectorXd out =
      Eigen::VectorXd::Constant(raw_X.rows(), response_mean);
  for (int k = 0; k < p(); ++k) {
    const double raw_coef = response_scale * std_coef[k] / column_scales[k];
    out += raw_coef * (raw_X.col(k).array() - column_means[k]).matrix();
  }
  return out;
}

Dataset standardize(const Eigen::MatrixXd& raw_X, const Eigen::VectorXd& raw_y,
                    bool scale_response) {
  check_shape(raw_X, raw_y);
  const int n = static_cast<int>(raw_X.rows());
  const int p = static_cast<int>(raw_X.cols());
  const double root_n = std::sqrt(static_cast<double>(n));

  Dataset data;
  data.X.resize(n, p);
  data.column_means.resize(p);
  data.column_scales.resize(p);
  for (int k = 0; k < p; ++k) {
    const double mean = raw_X.col(k).mean();
    Eigen::VectorXd centered = raw_X.col(k).array() - mean;
    const double scale = centered.norm() / root_n;
    if (scale <= 1e-12)
      fail(ErrorCode::DegenerateColumn,
           "column " + std::to_string(k) + " is constant");
    data.column_means[k] = mean;
    data.column_scales[k] = scale;
    data.X.col(k) = centered / scale;
  }

  data.response_mean = raw_y.mean();
  Eigen::VectorXd centered_y = raw_y.array() - data.response_mean;
  if (scale_response) {
    const double scale = centered_y.norm() / root_n;
    if (scale <= 1e-12)
      fail(ErrorCode::DegenerateColumn, "response is constant");
    data.response_scale = scale;
    centered_y /= scale;
  }
  data.y = std::move(centered_y);
  data.standardized = true;
  return data;
}

CsvTable read_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::CsvError, "cannot open " + path);

  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t width = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && rows.empty() && table.names.empty()) continue;

    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();

    if (has_header && table.names.empty()) {
      table.names = cells;
      width = cells.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      fail(ErrorCode::CsvError, path + ":" + std::to_string(line_no) +
                                    ": expected " + std::to_string(width) +
                                    " fields, got " +
                                    std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(width);
    for (size_t c = 0; c < cells.size(); ++c) {
      const std::string& text = cells[c];
      size_t used = 0;
      double value = 0.0;
      bool ok = !text.empty();
      if (ok) {
        try {
          value = std::stod(text, &used);
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (ok)
        while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
      if (!ok || used != text.size() || !std::isfinite(value))
        fail(ErrorCode::CsvError, path + ":" + std::to_string(line_no) +
                                      ": bad numeric value '" + text + "'");
      row.push_back(value);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::CsvError, path + ": no data rows");
  if (table.names.empty())
    for (size_t c = 0; c < width; ++c)
      table.names.push_back("c" + std::to_string(c));

  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(width));
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < width; ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
  return table;
}

}  // namespace hotinfer

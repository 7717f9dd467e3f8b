#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hotinfer/dataset.hpp"
#include "hotinfer/errors.hpp"
#include "hotinfer/inference.hpp"
#include "hotinfer/normal.hpp"
#include "hotinfer/screening.hpp"
#include "hotinfer/selftest.hpp"
#include "hotinfer/simulation.hpp"

namespace {

using namespace hotinfer;

int exit_code_for(const Error& err) {
  switch (err.code()) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidAlpha:
    case ErrorCode::InvalidPattern:
    case ErrorCode::CsvError:
    case ErrorCode::IndexOutOfRange:
      return 2;
    default:
      return 1;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ConfigError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit(const std::string& content, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  atomic_write_file(out_path, content);
}

struct SimulateArgs {
  std::string config_path;
  std::string out_path;
  std::string rep_csv_path;
  int reps = -1;
  std::int64_t seed = -1;
  int threads = -1;
};

int cmd_simulate(const SimulateArgs& args) {
  SimConfig config = parse_sim_config(read_file(args.config_path));
  if (args.reps >= 0) config.reps = args.reps;
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  if (args.threads >= 0) config.threads = args.threads;

  const SimulationReport report =
      run_replications(config, !args.rep_csv_path.empty());
  emit(to_json_string(report), args.out_path);
  if (!args.rep_csv_path.empty())
    atomic_write_file(args.rep_csv_path, records_csv(report));
  if (!args.out_path.empty()) {
    for (const auto& m : report.methods) {
      std::printf(
          "%-16s cp_all=%.4f cp_max=%.4f mean_length=%.4f mean_sigma_hat=%.4f\n",
          m.name.c_str(), m.cp_all, m.cp_max, m.mean_length, m.mean_sigma_hat);
    }
    std::printf("reps_completed=%d warnings=%zu -> %s\n",
                report.reps_completed, report.warnings.size(),
                args.out_path.c_str());
  }
  return 0;
}

struct TableArgs {
  std::string x_path;
  std::string y_path;
  std::string y_col;
  bool header = false;
};

/// Loads the design and response from CSV input, either a separate response
/// file or a named/indexed column of the design file.
void load_table(const TableArgs& args, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
  const CsvTable x_table = read_csv(args.x_path, args.header);
  if (!args.y_path.empty()) {
    const CsvTable y_table = read_csv(args.y_path, args.header);
    if (y_table.values.cols() != 1)
      fail(ErrorCode::CsvError, args.y_path + ": expected a single column");
    if (y_table.values.rows() != x_table.values.rows())
      fail(ErrorCode::CsvError, "design and response row counts differ");
    X = x_table.values;
    y = y_table.values.col(0);
    return;
  }
  if (args.y_col.empty())
    fail(ErrorCode::ConfigError, "pass --y FILE or --y-col NAME_OR_INDEX");
  int col = -1;
  for (size_t c = 0; c < x_table.names.size(); ++c)
    if (x_table.names[c] == args.y_col) col = static_cast<int>(c);
  if (col < 0) {
    try {
      size_t used = 0;
      col = std::stoi(args.y_col, &used);
      if (used != args.y_col.size()) col = -1;
    } catch (const std::exception&) {
      col = -1;
    }
  }
  if (col < 0 || col >= x_table.values.cols())
    fail(ErrorCode::ConfigError,
         "response column '" + args.y_col + "' not found");
  y = x_table.values.col(col);
  X.resize(x_table.values.rows(), x_table.values.cols() - 1);
  int out = 0;
  for (int c = 0; c < x_table.values.cols(); ++c)
    if (c != col) X.col(out++) = x_table.values.col(c);
}

std::vector<int> parse_index_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      size_t used = 0;
      const int value = std::stoi(token, &used);
      if (used != token.size())
        fail(ErrorCode::ConfigError, "bad index '" + token + "'");
      out.push_back(value);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(ErrorCode::ConfigError, "bad index '" + token + "'");
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct InferArgs {
  TableArgs table;
  std::string method = "hot";
  std::string screen = "sis";
  std::string screen_set;
  bool split = false;
  double alpha = 0.05;
  std::string sigma = "scaled-lasso";
  double lambda0 = 0.0;
  int d_max = 0;
  double ridge_eps = 0.0;
  std::string tuning = "gic";
  double lambda = -1.0;
  bool scale_y = false;
  std::string out_path;
  std::string csv_path;
  int threads = 0;
};

int cmd_infer(const InferArgs& args) {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  load_table(args.table, X, y);
  const Dataset data = standardize(X, y, args.scale_y);

  InferenceConfig config;
  if (args.method == "hot") config.method = Method::Hot;
  else if (args.method == "ldpe") config.method = Method::Ldpe;
  else if (args.method == "hot-a") config.method = Method::HotAlternative;
  else if (args.method == "partial") config.method = Method::Partial;
  else fail(ErrorCode::ConfigError, "unknown method '" + args.method + "'");

  if (args.screen == "sis") config.screen_kind = ScreenKind::Sis;
  else if (args.screen == "holp") config.screen_kind = ScreenKind::Holp;
  else if (args.screen == "user") config.screen_kind = ScreenKind::User;
  else fail(ErrorCode::ConfigError, "unknown screening '" + args.screen + "'");
  if (config.screen_kind == ScreenKind::User) {
    if (args.screen_set.empty())
      fail(ErrorCode::ConfigError, "--screen user needs --screen-set");
    config.user_screen = parse_index_list(args.screen_set);
  }

  config.split_screening = args.split;
  config.alpha = args.alpha;
  if (args.sigma == "scaled-lasso") {
    config.sigma.kind = SigmaMode::Kind::ScaledLasso;
  } else {
    config.sigma.kind = SigmaMode::Kind::Fixed;
    try {
      size_t used = 0;
      config.sigma.value = std::stod(args.sigma, &used);
      if (used != args.sigma.size())
        fail(ErrorCode::ConfigError, "bad --sigma '" + args.sigma + "'");
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(ErrorCode::ConfigError, "bad --sigma '" + args.sigma + "'");
    }
  }
  config.lambda0 = args.lambda0;
  config.d_max = args.d_max;
  config.ridge_eps = args.ridge_eps;
  if (args.tuning == "gic") {
    config.tuning.kind = TuningSpec::Kind::Gic;
  } else if (args.tuning == "fixed") {
    if (args.lambda < 0.0)
      fail(ErrorCode::ConfigError, "--tuning fixed needs --lambda");
    config.tuning.kind = TuningSpec::Kind::Fixed;
    config.tuning.fixed_lambda = args.lambda;
  } else {
    fail(ErrorCode::ConfigError, "unknown tuning '" + args.tuning + "'");
  }
  config.threads = args.threads;

  const InferenceReport report = infer_all(data, config);
  emit(to_json_string(report), args.out_path);
  if (!args.csv_path.empty())
    atomic_write_file(args.csv_path, to_csv_string(report));
  if (!args.out_path.empty())
    std::printf("%s: %d coordinates, %d significant at alpha=%g -> %s\n",
                report.method.c_str(), static_cast<int>(report.results.size()),
                report.num_significant, report.alpha, args.out_path.c_str());
  return 0;
}

struct ScreenArgs {
  TableArgs table;
  std::string method = "sis";
  int d_max = 0;
  double ridge_eps = 0.0;
  std::string out_path;
};

int cmd_screen(const ScreenArgs& args) {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  load_table(args.table, X, y);
  const Dataset data = standardize(X, y, false);
  std::vector<int> ranking;
  if (args.method == "sis") ranking = sis_rank(data);
  else if (args.method == "holp") ranking = holp_rank(data, args.ridge_eps);
  else fail(ErrorCode::ConfigError, "unknown screening '" + args.method + "'");
  const int d_max =
      args.d_max > 0 ? args.d_max : default_d_max(data.n(), data.p());
  const ScreenSet set = bic_select(data, ranking, d_max, args.method);

  std::string out = "{\n  \"method\": \"" + set.method + "\",\n  \"d\": " +
                    std::to_string(set.d) + ",\n  \"indices\": [";
  for (size_t i = 0; i < set.indices.size(); ++i)
    out += (i ? ", " : "") + std::to_string(set.indices[i]);
  out += "],\n  \"ranking\": [";
  for (size_t i = 0; i < set.ranking.size(); ++i)
    out += (i ? ", " : "") + std::to_string(set.ranking[i]);
  out += "],\n  \"warnings\": [";
  for (size_t i = 0; i < set.warnings.size(); ++i)
    out += (i ? ", " : "") + ("\"" + set.warnings[i] + "\"");
  out += "]\n}\n";
  emit(out, args.out_path);
  return 0;
}

int cmd_selftest(bool corrupt_quantile) {
  if (corrupt_quantile) set_quantile_perturbation(1e-3);
  const auto results = run_selftest();
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("check %-22s %s  %s\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  std::printf("selftest: %s\n", all_pass ? "PASS" : "FAIL");
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confidence intervals for high-dimensional sparse linear models"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "run a Monte-Carlo study");
  sim->add_option("--config", sim_args.config_path, "JSON study config")
      ->required();
  sim->add_option("--out", sim_args.out_path, "report JSON path (default stdout)");
  sim->add_option("--rep-csv", sim_args.rep_csv_path, "per-replication CSV path");
  sim->add_option("--reps", sim_args.reps, "override replication count");
  sim->add_option("--seed", sim_args.seed, "override master seed");
  sim->add_option("--threads", sim_args.threads,
                  "worker count (0 = HOTINFER_THREADS or hardware)");

  InferArgs infer_args;
  CLI::App* infer = app.add_subcommand("infer", "intervals for CSV data");
  infer->add_option("--x", infer_args.table.x_path, "design CSV")->required();
  infer->add_option("--y", infer_args.table.y_path, "response CSV (one column)");
  infer->add_option("--y-col", infer_args.table.y_col,
                    "response column of --x by name or 0-based index");
  infer->add_flag("--header", infer_args.table.header, "CSV files have a header row");
  infer->add_option("--method", infer_args.method, "hot | ldpe | hot-a | partial");
  infer->add_option("--screen", infer_args.screen, "sis | holp | user");
  infer->add_option("--screen-set", infer_args.screen_set,
                    "comma-separated 0-based columns for --screen user");
  infer->add_flag("--split", infer_args.split,
                  "screen on the first half of the rows, infer on the second");
  infer->add_option("--alpha", infer_args.alpha, "miscoverage level");
  infer->add_option("--sigma", infer_args.sigma,
                    "'scaled-lasso' or a fixed noise level");
  infer->add_option("--lambda0", infer_args.lambda0,
                    "scaled lasso penalty (default: quantile-calibrated)");
  infer->add_option("--d-max", infer_args.d_max, "screened-set size cap");
  infer->add_option("--ridge-eps", infer_args.ridge_eps, "HOLP Gram ridge");
  infer->add_option("--tuning", infer_args.tuning, "gic | fixed");
  infer->add_option("--lambda", infer_args.lambda, "penalty for --tuning fixed");
  infer->add_flag("--scale-y", infer_args.scale_y,
                  "scale the response to norm sqrt(n) as well");
  infer->add_option("--out", infer_args.out_path, "report JSON path (default stdout)");
  infer->add_option("--csv", infer_args.csv_path, "also write results as CSV");
  infer->add_option("--threads", infer_args.threads,
                    "worker count (0 = HOTINFER_THREADS or hardware)");

  ScreenArgs screen_args;
  CLI::App* screen = app.add_subcommand("screen", "rank and select columns");
  screen->add_option("--x", screen_args.table.x_path, "design CSV")->required();
  screen->add_option("--y", screen_args.table.y_path, "response CSV (one column)");
  screen->add_option("--y-col", screen_args.table.y_col,
                     "response column of --x by name or 0-based index");
  screen->add_flag("--header", screen_args.table.header,
                   "CSV files have a header row");
  screen->add_option("--method", screen_args.method, "sis | holp");
  screen->add_option("--d-max", screen_args.d_max, "screened-set size cap");
  screen->add_option("--ridge-eps", screen_args.ridge_eps, "HOLP Gram ridge");
  screen->add_option("--out", screen_args.out_path, "output path (default stdout)");

  bool corrupt_quantile = false;
  CLI::App* selftest = app.add_subcommand("selftest", "embedded smoke checks");
  selftest
      ->add_flag("--corrupt-quantile", corrupt_quantile,
                 "negative control: perturb the quantile constants")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (infer->parsed()) return cmd_infer(infer_args);
    if (screen->parsed()) return cmd_screen(screen_args);
    if (selftest->parsed()) return cmd_selftest(corrupt_quantile);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code_for(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hotinfer/errors.hpp"
#include "hotinfer/inference.hpp"
#include "hotinfer/normal.hpp"
#include "hotinfer/simulation.hpp"
#include "oracles.hpp"

using namespace hotinfer;

namespace {

/// Simulated problem with the raw-scale truth kept alongside.
struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  OracleTruth truth;
};

Problem simulate_problem(int n, int p, double rho, double sigma, int s,
                         std::uint64_t seed) {
  Rng rng(seed);
  Problem prob;
  prob.X = gen_design(n, p, rho, rng);
  prob.truth.beta = Eigen::VectorXd::Zero(p);
  for (int k = 0; k < s; ++k) prob.truth.beta[k] = rng.uniform(0.5, 2.0);
  prob.truth.noise.resize(n);
  for (int i = 0; i < n; ++i) prob.truth.noise[i] = sigma * rng.gaussian();
  prob.truth.sigma = sigma;
  prob.y = prob.X * prob.truth.beta + prob.truth.noise;
  return prob;
}

}  // namespace

TEST_CASE("interval arithmetic against the frozen normal quantile") {
  const Interval iv = confidence_interval(1.2, 0.25, 0.05);
  const double q975 = 1.959963985;
  CHECK(iv.lo == doctest::Approx(1.2 - q975 * 0.25).epsilon(1e-9));
  CHECK(iv.hi == doctest::Approx(1.2 + q975 * 0.25).epsilon(1e-9));
  CHECK(iv.p_value ==
        doctest::Approx(2.0 * normal_cdf(-1.2 / 0.25)).epsilon(1e-12));

  const Interval wide = confidence_interval(0.0, 1.0, 0.32);
  CHECK(wide.p_value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(wide.hi == -wide.lo);

  SUBCASE("alpha validation") {
    CHECK_THROWS_AS(confidence_interval(0.0, 1.0, 0.0), Error);
    CHECK_THROWS_AS(confidence_interval(0.0, 1.0, 1.0), Error);
    CHECK_THROWS_AS(confidence_interval(0.0, 1.0, -0.1), Error);
  }
  SUBCASE("zero standard error degenerates to a point") {
    const Interval point = confidence_interval(0.7, 0.0, 0.05);
    CHECK(point.lo == 0.7);
    CHECK(point.hi == 0.7);
    CHECK(point.p_value == 0.0);
    CHECK(confidence_interval(0.0, 0.0, 0.05).p_value == 1.0);
  }
}

TEST_CASE("normal quantile and cdf round trip") {
  for (double u : {0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999}) {
    CHECK(normal_cdf(normal_quantile(u)) == doctest::Approx(u).epsilon(1e-9));
  }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-8));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1).epsilon(1e-12));
}

TEST_CASE("ratio and debiased estimators recompute from the direction") {
  const Dataset data = oracle::toy_dataset(50, 15, 0.5, 61);
  const HybridDirection dir = ldpe_direction(data, 2);
  CHECK(ratio_estimate(data, dir) ==
        doctest::Approx(dir.z.dot(data.y) / dir.zx_j).epsilon(1e-12));

  Eigen::VectorXd init = Eigen::VectorXd::Zero(15);
  init[2] = 0.4;
  init[5] = -0.2;
  const double manual =
      init[2] + dir.z.dot(data.y - data.X * init) / dir.zx_j;
  CHECK(debiased_estimate(data, dir, init) ==
        doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("standardized truth reproduces the standardized response exactly") {
  const Problem prob = simulate_problem(60, 30, 0.6, 0.8, 3, 62);
  for (bool scale_response : {false, true}) {
    const Dataset data = standardize(prob.X, prob.y, scale_response);
    Eigen::VectorXd gamma, eps_std;
    standardized_truth(data, prob.truth, gamma, eps_std);
    const Eigen::VectorXd recon = data.X * gamma + eps_std;
    CHECK((recon - data.y).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("error decomposition is exact for every route") {
  const Problem prob = simulate_problem(80, 40, 0.5, 1.0, 4, 63);
  const Dataset data = standardize(prob.X, prob.y, false);
  Eigen::VectorXd gamma, eps_std;
  standardized_truth(data, prob.truth, gamma, eps_std);

  const std::vector<int> ranking = sis_rank(data);
  std::vector<int> screen(ranking.begin(), ranking.begin() + 4);
  std::sort(screen.begin(), screen.end());

  SUBCASE("ratio estimators") {
    for (int j : {screen[0], 9, 25}) {
      const HybridDirection dir = hybrid_direction(data, screen, j);
      const double beta_std = ratio_estimate(data, dir);
      const DecompositionDiagnostic diag =
          decompose_error(data, dir, beta_std, gamma, eps_std);
      CHECK(std::abs(diag.identity_gap) <=
            1e-10 * std::max(1.0, std::abs(beta_std)));
      CHECK(beta_std - gamma[j] ==
            doctest::Approx(diag.w_term + diag.delta_term).epsilon(1e-8));
    }
  }
  SUBCASE("debiased estimator") {
    const ScaledLassoFit init =
        scaled_lasso(data.X, data.y, universal_lambda(80, 40));
    const HybridDirection dir = ldpe_direction(data, 9);
    const double beta_std = debiased_estimate(data, dir, init.beta);
    const DecompositionDiagnostic diag =
        decompose_error(data, dir, beta_std, gamma, eps_std, &init.beta);
    CHECK(std::abs(diag.identity_gap) <=
          1e-10 * std::max(1.0, std::abs(beta_std)));
  }
}

TEST_CASE("full pipeline recovers strong coefficients on an easy problem") {
  const Problem prob = simulate_problem(120, 12, 0.2, 0.05, 3, 64);
  const Dataset data = standardize(prob.X, prob.y, false);

  InferenceConfig config;
  config.method = Method::Hot;
  const InferenceReport report = infer_all(data, config);

  REQUIRE(report.results.size() == 12);
  CHECK(report.warnings.empty());
  CHECK(report.method == "hot");
  int covered = 0;
  for (const auto& res : report.results) {
    if (res.ci_lo <= prob.truth.beta[res.j] &&
        prob.truth.beta[res.j] <= res.ci_hi)
      ++covered;
    if (res.j < 3) {
      CHECK(res.p_value < 1e-6);
      CHECK(std::abs(res.beta_hat - prob.truth.beta[res.j]) < 0.05);
    }
  }
  CHECK(covered >= 10);
  for (int k = 0; k < 3; ++k)
    CHECK(std::find(report.screen_indices.begin(), report.screen_indices.end(),
                    k) != report.screen_indices.end());
  CHECK(report.num_significant >= 3);
  CHECK(report.diagnostics.directions_checked == 12);
  CHECK(report.diagnostics.max_orth_violation < 1e-8);
}

TEST_CASE("estimates are reported on the raw data scale") {
  const Problem prob = simulate_problem(100, 10, 0.3, 0.1, 2, 65);
  const Dataset base = standardize(prob.X, prob.y, false);

  Eigen::MatrixXd scaled_X = prob.X;
  scaled_X.col(0) *= 10.0;  // same model with beta_0 shrunk by 10
  const Dataset scaled = standardize(scaled_X, prob.y, false);

  InferenceConfig config;
  config.sigma.kind = SigmaMode::Kind::Fixed;
  config.sigma.value = 0.1;
  const InferenceReport a = infer_all(base, config);
  const InferenceReport b = infer_all(scaled, config);

  REQUIRE(a.results.size() == b.results.size());
  const auto& ra = a.results[0];
  const auto& rb = b.results[0];
  REQUIRE(ra.j == 0);
  REQUIRE(rb.j == 0);
  CHECK(rb.beta_hat == doctest::Approx(ra.beta_hat / 10.0).epsilon(1e-9));
  CHECK(rb.se == doctest::Approx(ra.se / 10.0).epsilon(1e-9));
  CHECK(rb.ci_lo == doctest::Approx(ra.ci_lo / 10.0).epsilon(1e-9));
  CHECK(rb.p_value == doctest::Approx(ra.p_value).epsilon(1e-9));
  // Unscaled coordinates are untouched.
  CHECK(b.results[3].beta_hat ==
        doctest::Approx(a.results[3].beta_hat).epsilon(1e-9));

  // se = sigma_hat * tau on the raw scale.
  for (const auto& res : a.results)
    CHECK(res.se == doctest::Approx(a.sigma_hat * res.tau).epsilon(1e-10));
  CHECK(a.sigma_hat == doctest::Approx(0.1));
}

TEST_CASE("inference honours a user screen set and validates it") {
  const Dataset data = oracle::toy_dataset(60, 20, 0.4, 66);
  InferenceConfig config;
  config.screen_kind = ScreenKind::User;
  config.user_screen = {0, 1, 2};
  const InferenceReport report = infer_all(data, config);
  CHECK(report.screen_indices == std::vector<int>{0, 1, 2});

  config.user_screen = {2, 1};
  CHECK_THROWS_AS(infer_all(data, config), Error);
  config.user_screen = {0, 40};
  CHECK_THROWS_AS(infer_all(data, config), Error);

  // An empty user screen is legal: every other column is handled by the
  // relaxed step alone.
  config.user_screen = {};
  const InferenceReport bare = infer_all(data, config);
  CHECK(bare.screen_indices.empty());
  CHECK(bare.results.size() == 20);
}

TEST_CASE("split screening keeps selection and inference rows apart") {
  const Problem prob = simulate_problem(120, 15, 0.3, 0.2, 2, 67);
  const Dataset data = standardize(prob.X, prob.y, false);
  InferenceConfig config;
  config.split_screening = true;
  const InferenceReport report = infer_all(data, config);
  CHECK(report.results.size() >= 12);
  // Strong signal still found from half the rows.
  for (int k = 0; k < 2; ++k)
    CHECK(std::find(report.screen_indices.begin(), report.screen_indices.end(),
                    k) != report.screen_indices.end());
}

TEST_CASE("identity gap is tracked whenever truth accompanies the data") {
  const Problem prob = simulate_problem(90, 25, 0.5, 0.7, 3, 68);
  const Dataset data = standardize(prob.X, prob.y, false);
  for (Method method :
       {Method::Hot, Method::Ldpe, Method::HotAlternative, Method::Partial}) {
    InferenceConfig config;
    config.method = method;
    const InferenceReport report = infer_all(data, config, &prob.truth);
    CAPTURE(report.method);
    CHECK(report.results.size() == 25);
    CHECK(report.diagnostics.max_identity_gap <= 1e-10);
    // At the default solver tolerance the partially penalized route meets
    // tau <= 1/||z|| only up to coordinate-descent precision.
    CHECK(report.diagnostics.max_tau_excess <= 1e-8);
  }
}

TEST_CASE("alpha feeds both the interval width and the significance count") {
  const Dataset data = oracle::toy_dataset(80, 10, 0.2, 69, 2, 0.1);
  InferenceConfig narrow;
  narrow.alpha = 0.05;
  InferenceConfig wide;
  wide.alpha = 0.4;
  const InferenceReport r05 = infer_all(data, narrow);
  const InferenceReport r40 = infer_all(data, wide);
  REQUIRE(r05.results.size() == r40.results.size());
  for (size_t i = 0; i < r05.results.size(); ++i) {
    CHECK(r40.results[i].ci_hi - r40.results[i].ci_lo <
          r05.results[i].ci_hi - r05.results[i].ci_lo);
  }
  CHECK(r40.num_significant >= r05.num_significant);

  InferenceConfig bad;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(infer_all(data, bad), Error);
}

TEST_CASE("reports serialize with a stable schema") {
  const Dataset data = oracle::toy_dataset(50, 8, 0.3, 70);
  InferenceConfig config;
  const InferenceReport report = infer_all(data, config);

  const std::string json_text = to_json_string(report);
  const auto doc = nlohmann::json::parse(json_text);
  CHECK(doc.at("method") == "hot");
  CHECK(doc.at("alpha") == 0.05);
  CHECK(doc.at("sigma_hat").is_number());
  REQUIRE(doc.at("results").is_array());
  REQUIRE(!doc.at("results").empty());
  const auto& row = doc.at("results").front();
  for (const char* key : {"j", "beta_hat", "se", "ci", "p_value", "tau", "eta"})
    CHECK(row.contains(key));
  CHECK(row.at("ci").size() == 2);
  CHECK(doc.at("warnings").is_array());
  CHECK(doc.at("screen_indices").is_array());
  CHECK(doc.at("num_significant").is_number_integer());
  CHECK(doc.at("diagnostics").contains("max_identity_gap"));
  CHECK(json_text.back() == '\n');

  // Key order is pinned so byte comparisons across runs make sense.
  CHECK(json_text.find("\"method\"") < json_text.find("\"alpha\""));
  CHECK(json_text.find("\"alpha\"") < json_text.find("\"sigma_hat\""));
  CHECK(json_text.find("\"sigma_hat\"") < json_text.find("\"results\""));
  CHECK(json_text.find("\"results\"") < json_text.find("\"warnings\""));

  const std::string csv = to_csv_string(report);
  CHECK(csv.rfind("j,beta_hat,se,ci_lo,ci_hi,p_value,tau,eta\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        1 + static_cast<long>(report.results.size()));
}

TEST_CASE("inference output is identical across worker counts") {
  const Problem prob = simulate_problem(70, 30, 0.6, 0.5, 3, 71);
  const Dataset data = standardize(prob.X, prob.y, false);
  InferenceConfig one;
  one.threads = 1;
  InferenceConfig four = one;
  four.threads = 4;
  const std::string a = to_json_string(infer_all(data, one));
  const std::string b = to_json_string(infer_all(data, four));
  CHECK(a == b);
}

TEST_CASE("atomic file writes replace the target in one step") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "hotinfer_atomic.json").string();
  atomic_write_file(path, "first\n");
  atomic_write_file(path, "second\n");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content == "second\n");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(atomic_write_file("/nonexistent_dir_zz/x.json", "x"), Error);
}

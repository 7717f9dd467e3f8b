#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hotinfer/rng.hpp"
#include "hotinfer/simulation.hpp"

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() /
             ("hotinfer_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const fs::path err = work_dir() / "stderr.txt";
  const std::string cmd = std::string(HOTINFER_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out);
  result.err = slurp(err);
  return result;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

/// 50x6 design with two strong coefficients, written as CSV fixtures.
void write_fixture(fs::path& x_path, fs::path& y_path) {
  x_path = work_dir() / "x.csv";
  y_path = work_dir() / "y.csv";
  if (fs::exists(x_path)) return;
  hotinfer::Rng rng(77);
  const int n = 50, p = 6;
  std::ostringstream xs, ys;
  xs << "x0,x1,x2,x3,x4,x5\n";
  ys << "y\n";
  for (int i = 0; i < n; ++i) {
    double row[6];
    for (int k = 0; k < p; ++k) {
      row[k] = rng.gaussian();
      xs << (k ? "," : "") << row[k];
    }
    xs << "\n";
    ys << 2.0 * row[0] - 1.5 * row[3] + 0.1 * rng.gaussian() << "\n";
  }
  write_file(x_path, xs.str());
  write_file(y_path, ys.str());
}

const char* tiny_sim_json = R"({
  "n": 50, "p": 30, "rho": 0.4, "sigma": 1.0,
  "pattern": {"type": "sparse_uniform", "s": 2, "lo": 0.5, "hi": 2.0},
  "reps": 2, "seed": 7, "methods": ["ldpe"]
})";

}  // namespace

TEST_CASE("cli selftest passes and its negative control fails") {
  const RunResult ok = run_cli("selftest");
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("selftest: PASS") != std::string::npos);
  CHECK(ok.out.find("FAIL") == std::string::npos);

  const RunResult corrupted = run_cli("selftest --corrupt-quantile");
  CHECK(corrupted.exit_code == 1);
  CHECK(corrupted.out.find("normal-quantile") != std::string::npos);
  CHECK(corrupted.out.find("selftest: FAIL") != std::string::npos);
}

TEST_CASE("cli simulate writes a deterministic report") {
  const fs::path config = work_dir() / "sim.json";
  write_file(config, tiny_sim_json);
  const fs::path report1 = work_dir() / "report1.json";
  const fs::path report2 = work_dir() / "report2.json";
  const fs::path recs = work_dir() / "reps.csv";

  const RunResult a = run_cli("simulate --config " + config.string() +
                              " --out " + report1.string() + " --rep-csv " +
                              recs.string() + " --threads 1");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out.find("reps_completed=2") != std::string::npos);

  const RunResult b = run_cli("simulate --config " + config.string() +
                              " --out " + report2.string() + " --threads 2");
  REQUIRE(b.exit_code == 0);

  const std::string first = slurp(report1);
  std::string second = slurp(report2);
  // Reports agree except for the echoed worker count.
  auto ja = nlohmann::json::parse(first);
  auto jb = nlohmann::json::parse(second);
  ja["config"].erase("threads");
  jb["config"].erase("threads");
  CHECK(ja.dump(2) == jb.dump(2));

  const std::string csv = slurp(recs);
  CHECK(csv.rfind("rep,method,j,", 0) == 0);

  const auto doc = nlohmann::json::parse(first);
  CHECK(doc.at("reps_completed") == 2);
  CHECK(doc.at("methods").front().at("name") == "ldpe");
}

TEST_CASE("cli simulate reports config problems on exit code 2") {
  const RunResult missing =
      run_cli("simulate --config /nonexistent/sim_config.json");
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("/nonexistent/sim_config.json") != std::string::npos);

  const fs::path bad = work_dir() / "bad.json";
  write_file(bad, R"({"n": 50, "p": 30, "rho": 0.4, "sigma": 1.0,
    "pattern": {"type": "sparse_uniform", "s": 2},
    "reps": 2, "seed": 7, "alpha": 1.5})");
  const RunResult alpha = run_cli("simulate --config " + bad.string());
  CHECK(alpha.exit_code == 2);
  CHECK(alpha.err.find("error:") != std::string::npos);
}

TEST_CASE("cli infer produces intervals from csv fixtures") {
  fs::path x_path, y_path;
  write_fixture(x_path, y_path);
  const fs::path out = work_dir() / "infer.json";
  const fs::path csv = work_dir() / "infer.csv";

  const RunResult r = run_cli("infer --x " + x_path.string() + " --y " +
                              y_path.string() +
                              " --header --method hot --out " + out.string() +
                              " --csv " + csv.string());
  REQUIRE(r.exit_code == 0);

  const auto doc = nlohmann::json::parse(slurp(out));
  CHECK(doc.at("method") == "hot");
  REQUIRE(doc.at("results").size() == 6);
  // The two strong coefficients are pinned down tightly.
  const auto& first = doc.at("results").at(0);
  CHECK(std::abs(first.at("beta_hat").get<double>() - 2.0) < 0.2);
  CHECK(first.at("p_value").get<double>() < 1e-4);

  const std::string table = slurp(csv);
  CHECK(table.rfind("j,beta_hat,", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 7);

  SUBCASE("the response may come from a named design column") {
    const fs::path merged = work_dir() / "xy.csv";
    std::ostringstream body;
    const std::string xs = slurp(x_path), ys = slurp(y_path);
    std::istringstream xl(xs), yl(ys);
    std::string a, b;
    while (std::getline(xl, a) && std::getline(yl, b)) body << a << "," << b << "\n";
    write_file(merged, body.str());

    const fs::path out2 = work_dir() / "infer2.json";
    const RunResult r2 = run_cli("infer --x " + merged.string() +
                                 " --y-col y --header --method hot --out " +
                                 out2.string());
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(out2) == slurp(out));
  }

  SUBCASE("ldpe and a fixed noise level") {
    const RunResult r3 = run_cli("infer --x " + x_path.string() + " --y " +
                                 y_path.string() +
                                 " --header --method ldpe --sigma 0.1");
    REQUIRE(r3.exit_code == 0);
    const auto doc3 = nlohmann::json::parse(r3.out);
    CHECK(doc3.at("method") == "ldpe");
    CHECK(doc3.at("sigma_hat").get<double>() == doctest::Approx(0.1));
  }

  SUBCASE("threads do not change the bytes") {
    const fs::path t1 = work_dir() / "t1.json";
    const fs::path t8 = work_dir() / "t8.json";
    const std::string base = "infer --x " + x_path.string() + " --y " +
                             y_path.string() + " --header --method hot ";
    REQUIRE(run_cli(base + "--threads 1 --out " + t1.string()).exit_code == 0);
    REQUIRE(run_cli(base + "--threads 8 --out " + t8.string()).exit_code == 0);
    CHECK(slurp(t1) == slurp(t8));
  }
}

TEST_CASE("cli infer rejects bad usage on exit code 2") {
  fs::path x_path, y_path;
  write_fixture(x_path, y_path);

  const RunResult no_y = run_cli("infer --x " + x_path.string() + " --header");
  CHECK(no_y.exit_code == 2);

  const RunResult bad_alpha =
      run_cli("infer --x " + x_path.string() + " --y " + y_path.string() +
              " --header --alpha 1.0");
  CHECK(bad_alpha.exit_code == 2);

  const RunResult bad_method =
      run_cli("infer --x " + x_path.string() + " --y " + y_path.string() +
              " --header --method ridge");
  CHECK(bad_method.exit_code == 2);

  const RunResult bad_flag = run_cli("infer --frobnicate");
  CHECK(bad_flag.exit_code == 2);

  const RunResult bad_col =
      run_cli("infer --x " + x_path.string() + " --y-col nope --header");
  CHECK(bad_col.exit_code == 2);
}

TEST_CASE("cli screen emits the ranked selection") {
  fs::path x_path, y_path;
  write_fixture(x_path, y_path);
  const RunResult r = run_cli("screen --x " + x_path.string() + " --y " +
                              y_path.string() + " --header --method sis");
  REQUIRE(r.exit_code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc.at("method") == "sis");
  CHECK(doc.at("d").get<int>() >= 1);
  REQUIRE(doc.at("indices").is_array());
  REQUIRE(doc.at("ranking").size() == 6);
  // Columns 0 and 3 carry the signal.
  const auto& indices = doc.at("indices");
  bool has0 = false, has3 = false;
  for (const auto& v : indices) {
    has0 |= v.get<int>() == 0;
    has3 |= v.get<int>() == 3;
  }
  CHECK(has0);
  CHECK(has3);
}

TEST_CASE("cli requires a subcommand") {
  const RunResult r = run_cli("");
  CHECK(r.exit_code == 2);
  const RunResult unknown = run_cli("frobnicate");
  CHECK(unknown.exit_code == 2);
}

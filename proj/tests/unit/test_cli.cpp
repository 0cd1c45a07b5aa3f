#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rdl/cli.hpp"
#include "rdl/error.hpp"

using namespace rdl;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run rdlab(std::vector<std::string> args) {
  args.insert(args.begin(), "rdlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("rdlab_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

}  // namespace

TEST_CASE("constants command writes the closed forms and a sidecar") {
  const auto dir = scratch("constants");
  const Run r = rdlab({"constants", "--set", "params.theta=1", "--set", "spec.alpha=2", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(dir / "constants.json"));
  CHECK(j.at("command") == "constants");
  CHECK(j.at("result").at("kappa").get<double>() == doctest::Approx(2.0));
  CHECK(j.at("result").at("gamma").get<double>() == doctest::Approx(2.0 / 3.0));
  CHECK(j.at("result").at("lifshitz_1d").get<double>() == doctest::Approx(M_PI * M_PI / 4.0));
  CHECK(j.at("run_config").at("spec").at("alpha") == 2.0);
  CHECK(j.at("run_config").at("grid").at("d") == 1);
}

TEST_CASE("free ids through the command line matches the free lattice count") {
  const auto dir = scratch("free");
  const Run r = rdlab({"ids", "--set", "spec.u_cap=0", "--set", "spec.alpha=4", "--set", "grid.box_r=10",
                       "--set", "grid.n_per_side=99", "--set", "replicates=2", "--set",
                       "lambda_grid=[1.0,4.0]", "--out", dir.string()});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "ids.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "lambda,n_hat,stderr");
  // eigenvalues (2/dx^2)(1 - cos(k pi / 100)), dx = 0.1, counted per unit length
  for (double lambda : {1.0, 4.0}) {
    int count = 0;
    for (int k = 1; k <= 99; ++k)
      if (200.0 * (1.0 - std::cos(k * M_PI / 100.0)) <= lambda) ++count;
    std::getline(csv, line);
    CHECK(std::stod(line.substr(line.find(',') + 1)) == doctest::Approx(count / 10.0));
  }
}

TEST_CASE("invalid theta exits 2 and names the field") {
  const Run r = rdlab({"ids", "--set", "params.theta=-1", "--out", scratch("theta").string()});
  CHECK(r.code == 2);
  const json e = json::parse(r.err);
  CHECK(e.at("field") == "params.theta");
  CHECK(e.at("exit_code") == 2);
}

TEST_CASE("unknown keys and bad flags are configuration errors") {
  const auto dir = scratch("unknown");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({"spec": {"alpah": 4}})";
  const Run a = rdlab({"constants", "--config", (dir / "cfg.json").string(), "--out", dir.string()});
  CHECK(a.code == 2);
  CHECK(json::parse(a.err).at("field") == "spec.alpah");
  CHECK(rdlab({"ids", "--no-such-flag"}).code == 2);
  CHECK(rdlab({"dance", "--out", dir.string()}).code == 2);
  std::ofstream(dir / "broken.json") << "{";
  CHECK(rdlab({"ids", "--config", (dir / "broken.json").string(), "--out", dir.string()}).code == 2);
}

TEST_CASE("rerunning from a sidecar reproduces the CSV byte for byte") {
  const auto first = scratch("rerun_a"), second = scratch("rerun_b");
  const Run a = rdlab({"ids", "--set", "spec.alpha=4", "--set", "grid.box_r=20", "--set", "grid.n_per_side=99",
                       "--set", "replicates=3", "--set", "lambda_grid={\"lo\":1,\"hi\":3,\"n\":5,\"spacing\":\"log\"}",
                       "--seed", "17", "--out", first.string()});
  REQUIRE(a.code == 0);
  const Run b = rdlab({"ids", "--config", (first / "ids.json").string(), "--out", second.string()});
  REQUIRE(b.code == 0);
  CHECK(slurp(first / "ids.csv") == slurp(second / "ids.csv"));
  CHECK(json::parse(slurp(second / "ids.json")).at("run_config").at("params").at("seed") == 17);
}

TEST_CASE("run config resolution") {
  const json r = resolve_run_config(json::object(), {"t_grid.n=3", "fit.input=curve.csv"}, 5, 2);
  CHECK(r.at("t_grid").at("n") == 3);
  CHECK(r.at("fit").at("input") == "curve.csv");
  CHECK(r.at("params").at("seed") == 5);
  CHECK(r.at("params").at("workers") == 2);
  const RunConfig c = parse_run_config(r);
  REQUIRE(c.t_grid.size() == 3);
  CHECK(c.t_grid[1] == doctest::Approx(10.0));
  CHECK_THROWS_AS(resolve_run_config(json::object(), {"t_grid.bogus=1"}, {}, {}), ConfigError);
  json bad = r;
  bad["fk"]["mode"] = "sideways";
  CHECK_THROWS_AS(parse_run_config(bad), ConfigError);
}

TEST_CASE("lifshitz pipeline rejects unsupported models and calls the free case inconclusive") {
  RunConfig c = parse_run_config(resolve_run_config(json::object(), {"spec.alpha=2"}, {}, {}));
  CHECK_THROWS_AS(pipeline_lifshitz_1d(c), ConfigError);
  c = parse_run_config(resolve_run_config(
      json::object(), {"spec.u_cap=0", "spec.alpha=4", "replicates=2", "lifshitz1d.box_sizes=[50]", "lifshitz1d.dx=0.1"},
      {}, {}));
  const LifshitzReport rep = pipeline_lifshitz_1d(c);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.verdict == Verdict::inconclusive);
  CHECK(rep.rows[0].n_per_side == 499);
}

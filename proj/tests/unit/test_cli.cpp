#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "cli.hpp"
#include "config.hpp"

using namespace nlsmc;
using namespace nlsmc::cli;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("nested_lsmc_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

struct Outcome {
  int code;
  std::string out, err;
};

Outcome call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

const std::string kSmallToy =
    "model = toy\nrho = 0.1\nreplications = 4\nbase_n = 200\ntheta_star_n = 5000\nkdist_n = 2000\nk_grid = 1,4\n";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("toy closed form prints the exact quantities") {
  TempDir d;
  const Outcome o = call({"toy-closed-form", "--out", d.path.string()});
  REQUIRE(o.code == 0);
  CHECK(o.out.find("A = 0.0002\n") != std::string::npos);
  CHECK(o.out.find("B = 1.9998\n") != std::string::npos);
  CHECK(o.out.find("theta_star = 1\n") != std::string::npos);
  CHECK(o.out.find("K_star = 100\n") != std::string::npos);
  CHECK(o.out.find("N_star = 99\n") != std::string::npos);
  CHECK(std::filesystem::exists(d.path / "summary.json"));
}

TEST_CASE("missing model is a configuration error") {
  TempDir d;
  const Outcome o = call({"gain-curve", "--out", d.path.string()});
  CHECK(o.code == kExitConfig);
  CHECK(o.err.find("model") != std::string::npos);
}

TEST_CASE("unknown keys are rejected") {
  TempDir d;
  write_file(d.path / "bad.cfg", "model = toy\nbogus = 3\n");
  Outcome o = call({"gain-curve", "--config", (d.path / "bad.cfg").string(), "--out", d.path.string()});
  CHECK(o.code == kExitConfig);
  CHECK(o.err.find("bogus") != std::string::npos);
  o = call({"gain-curve", "--model", "toy", "--set", "nope=1", "--out", d.path.string()});
  CHECK(o.code == kExitConfig);
  CHECK(o.err.find("nope") != std::string::npos);
  o = call({"gain-curve", "--model", "toy", "--bogus", "1"});
  CHECK(o.code == kExitConfig);
}

TEST_CASE("invalid values name their key") {
  TempDir d;
  for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"rho", "1.5"}, {"replications", "0"}, {"k_grid", "2,5"}, {"basis", "spline"}, {"seed", "-3"},
           {"base_n", "12x"}}) {
    const Outcome o = call({"gain-curve", "--model", "toy", "--" + key, value, "--out", d.path.string()});
    CHECK(o.code == kExitConfig);
    CHECK_MESSAGE(o.err.find(key) != std::string::npos, key, ": ", o.err);
  }
}

TEST_CASE("config file parsing") {
  const RawConfig raw = parse_config_text("# comment\nmodel = \"butterfly\"\n\nshock = 0.25  # inline\nk_grid = 1, 2,3\n", "t");
  CHECK(raw.at("model") == "butterfly");
  CHECK(raw.at("shock") == "0.25");
  const ExperimentConfig cfg = build_config(raw, true);
  CHECK(cfg.model.kind == ModelKind::butterfly);
  CHECK(cfg.model.butterfly.shock == 0.25);
  CHECK(cfg.k_grid == std::vector<int>{1, 2, 3});
  CHECK_THROWS_AS(parse_config_text("model = toy\nmodel = sde\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("model toy\n", "t"), ConfigError);
  CHECK(config_schema().size() == 33);
}

TEST_CASE("seed precedence: file, environment, --set, flag") {
  RawConfig raw{{"model", "toy"}, {"seed", "5"}};
  CHECK(build_config(raw, true).seed == 5);
  apply_override(raw, "seed=7");
  CHECK(build_config(raw, true).seed == 7);

  TempDir d;
  write_file(d.path / "c.cfg", kSmallToy + "seed = 5\n");
  const auto seed_of = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"estimate-k", "--config", (d.path / "c.cfg").string(), "--out", d.path.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    const Outcome o = call(args);
    REQUIRE(o.code == 0);
    const auto j = nlohmann::json::parse(slurp(d.path / "summary.json"));
    return j["config"]["seed"].get<std::uint64_t>();
  };
  ::unsetenv("NESTED_LSMC_SEED");
  CHECK(seed_of({}) == 5);
  ::setenv("NESTED_LSMC_SEED", "11", 1);
  CHECK(seed_of({}) == 11);
  CHECK(seed_of({"--set", "seed=12"}) == 12);
  CHECK(seed_of({"--set", "seed=12", "--seed", "13"}) == 13);
  ::setenv("NESTED_LSMC_SEED", "abc", 1);
  CHECK(call({"estimate-k", "--config", (d.path / "c.cfg").string(), "--out", d.path.string()}).code == kExitConfig);
  ::unsetenv("NESTED_LSMC_SEED");
}

TEST_CASE("estimate-k prints the estimators and the allocation") {
  TempDir d;
  write_file(d.path / "c.cfg", kSmallToy);
  const Outcome o = call({"estimate-k", "--config", (d.path / "c.cfg").string(), "--out", d.path.string()});
  REQUIRE(o.code == 0);
  for (const char* name : {"KA_H = ", "KA_noH = ", "KG_H = ", "KG_noH = ", "recommended K = ", "r_star = ", "N_star = "}) {
    CHECK(o.out.find(name) != std::string::npos);
  }
  const auto j = nlohmann::json::parse(slurp(d.path / "summary.json"));
  CHECK(j["command"] == "estimate-k");
  CHECK(j["config"]["model"] == "toy");
  CHECK(j.contains("wall_clock_seconds"));
}

TEST_CASE("gain-curve writes its CSV and summary") {
  TempDir d;
  write_file(d.path / "c.cfg", kSmallToy);
  const Outcome o = call({"gain-curve", "--config", (d.path / "c.cfg").string(), "--out", d.path.string()});
  REQUIRE(o.code == 0);
  const std::string csv = slurp(d.path / "gain_curve.csv");
  CHECK(csv.rfind("k,n_prime,gap_mean,gap_se,r_hat,r_hat_se\n", 0) == 0);
  CHECK(csv.find("\n1,200,") != std::string::npos);
  CHECK(csv.find("\n4,80,") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(d.path / "summary.json"));
  CHECK(j["command"] == "gain-curve");
  CHECK(j["config"]["replications"] == 4);
}

TEST_CASE("k-dist writes its CSV") {
  TempDir d;
  write_file(d.path / "c.cfg", kSmallToy);
  REQUIRE(call({"k-dist", "--config", (d.path / "c.cfg").string(), "--out", d.path.string()}).code == 0);
  CHECK(slurp(d.path / "k_dist.csv").rfind("estimator,value,count\n", 0) == 0);
}

TEST_CASE("loss-mse on a non-butterfly model is a runtime error") {
  TempDir d;
  write_file(d.path / "c.cfg", kSmallToy);
  const Outcome o = call({"loss-mse", "--config", (d.path / "c.cfg").string(), "--out", d.path.string()});
  CHECK(o.code == kExitRuntime);
}

TEST_CASE("a missing subcommand is a usage error") { CHECK(call({}).code == kExitConfig); }

}

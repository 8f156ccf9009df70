#include "doctest.h"
#include "speclab/config.hpp"
#include "speclab/pipelines.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace speclab;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPECLAB_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

const char* kSplittingConfig = R"(
experiment = "splitting-smoke"
pipeline = "splitting"
seed = 1

[domain]
kind = "interval"
a = -8.0
b = 8.0
n = 160

[params]
pairs = 12
epsilons = "0.3,0.5,0.7"
)";

}  // namespace

TEST_CASE("config parsing and schema rejection") {
  auto cfg = parse_config_text(kSplittingConfig);
  CHECK(cfg.pipeline == "splitting");
  CHECK(cfg.seed == 1);
  CHECK(cfg.has_domain);
  CHECK(cfg.domain.n == 160);
  CHECK(cfg.param("pairs", 0) == 12);
  CHECK(cfg.param_list("epsilons", {}).size() == 3);

  SUBCASE("unknown top-level key is named") {
    try {
      parse_config_text("bogus_key = 3\n");
      FAIL("expected a throw");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
  }

  SUBCASE("unknown section is named") {
    CHECK_THROWS_WITH_AS(parse_config_text("[nonsense]\nx = 1\n"),
                         doctest::Contains("nonsense"), std::invalid_argument);
  }

  SUBCASE("unknown domain key is named") {
    try {
      parse_config_text("[domain]\nkind = \"interval\"\nn = 10\nwhatever = 2\n");
      FAIL("expected a throw");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("whatever") != std::string::npos);
    }
  }

  SUBCASE("repeated potential sections accumulate") {
    auto c = parse_config_text(
        "[potential]\nkind = \"well\"\ndepth = 1\n[potential]\nkind = \"well\"\ndepth = 2\n");
    CHECK(c.potentials.size() == 2);
  }
}

TEST_CASE("splitting pipeline: exit code contract and determinism") {
  spit("/tmp/speclab_cfg.toml", kSplittingConfig);

  SUBCASE("runs green and writes a report") {
    CHECK(run_cli("splitting --config /tmp/speclab_cfg.toml --out /tmp/speclab_out1") == 0);
    const std::string rep = slurp("/tmp/speclab_out1/report.json");
    CHECK(rep.find("\"all_hold\": true") != std::string::npos);
    CHECK(rep.find("splitting_battery") != std::string::npos);
  }

  SUBCASE("identical config and seed give byte-identical reports") {
    REQUIRE(run_cli("splitting --config /tmp/speclab_cfg.toml --out /tmp/speclab_outA") == 0);
    REQUIRE(run_cli("splitting --config /tmp/speclab_cfg.toml --out /tmp/speclab_outB") == 0);
    CHECK(slurp("/tmp/speclab_outA/report.json") == slurp("/tmp/speclab_outB/report.json"));
  }

  SUBCASE("a different seed changes the battery") {
    REQUIRE(run_cli("splitting --config /tmp/speclab_cfg.toml --out /tmp/speclab_outC --seed 2") ==
            0);
    CHECK(slurp("/tmp/speclab_outA/report.json") != slurp("/tmp/speclab_outC/report.json"));
  }

  SUBCASE("schema violations exit 1") {
    spit("/tmp/speclab_bad.toml", "pipeline = \"splitting\"\nbogus = 1\n");
    CHECK(run_cli("splitting --config /tmp/speclab_bad.toml") == 1);
    CHECK(run_cli("splitting --config /tmp/speclab_missing_file.toml") == 1);
  }

  SUBCASE("pipeline mismatch between config and subcommand exits 1") {
    CHECK(run_cli("gny --config /tmp/speclab_cfg.toml") == 1);
  }
}

TEST_CASE("gny pipeline smoke run with explicit potential") {
  spit("/tmp/speclab_gny.toml", R"(
experiment = "gny-smoke"
pipeline = "gny"
seed = 3

[domain]
kind = "rectangle"
a1 = -14.0
b1 = 14.0
a2 = -14.0
b2 = 14.0
n = 85

[potential]
kind = "smooth_bump"
height = 2.0
width = 2.0
center = "0.0,0.0"

[params]
battery = 0
)");
  CHECK(run_cli("gny --config /tmp/speclab_gny.toml --out /tmp/speclab_gny_out") == 0);
  const std::string rep = slurp("/tmp/speclab_gny_out/report.json");
  CHECK(rep.find("\"all_hold\": true") != std::string::npos);
  CHECK(rep.find("chain_total") != std::string::npos);
}

TEST_CASE("decompose pipeline writes a replayable covering") {
  spit("/tmp/speclab_dec.toml", R"(
experiment = "decompose-smoke"
pipeline = "decompose"
seed = 5

[domain]
kind = "radial"
a = 0.25
b = 95.0
d = 3
n = 3000

[potential]
kind = "smooth_bump"
height = 1.2
width = 1.5
center = "7.5"
)");
  CHECK(run_cli("decompose --config /tmp/speclab_dec.toml --out /tmp/speclab_dec_out") == 0);
  const std::string cov = slurp("/tmp/speclab_dec_out/covering.json");
  CHECK(cov.find("\"kind\": \"layer\"") != std::string::npos);
  CHECK(cov.find("epsilon") != std::string::npos);
}

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dpwlab/runner.hpp"

using namespace dpw;

static const char* kFreeScenario = R"(
name = "free-test"
[potential]
cutoff_radius = 0.12
[incoming]
xi = [1.0, 0.0]
[time]
t0 = 0.04
dt = 1e-3
dt_strict = 5e-5
[trapped]
dx = 0.05
ndir = 8
t_max = 2.0
[grid]
n = 64
n_cap = 512
extent = 1.5
h_default = 0.0625
)";

TEST_CASE("scenario parses with defaults and validates") {
  auto sc = Scenario::load_text(kFreeScenario);
  CHECK(sc.name == "free-test");
  CHECK(sc.potential.bumps.empty());
  CHECK(sc.t0 == 0.04);
  CHECK(sc.effective_extent() == 1.5);
  const auto issues = sc.validate();
  CHECK(issues.empty());
  CHECK(sc.grid_points_for(0.0625) == 64);
  CHECK(sc.grid_points_for(1.0 / 256) >= 256);
}

TEST_CASE("scenario: malformed xi is a validation error naming the field") {
  std::string text = kFreeScenario;
  text.replace(text.find("xi = [1.0, 0.0]"), 15, "xi = [1.0, 0.5]");
  auto sc = Scenario::load_text(text);
  const auto issues = sc.validate();
  REQUIRE(!issues.empty());
  bool found = false;
  for (const auto& e : issues)
    if (e.field == "incoming.xi") found = true;
  CHECK(found);
}

TEST_CASE("scenario: config values parse (arrays, strings, booleans)") {
  auto cfg = Config::parse_text(
      "name = \"x\"\n[a]\nv = 1.5e-2\nflag = true\narr = [1, 2, 3]\n"
      "nested = [[1, 2], [3, 4]]\n");
  CHECK(cfg.num("a.v", 0) == doctest::Approx(0.015));
  CHECK(cfg.boolean("a.flag", false));
  CHECK(cfg.numbers("a.arr", {}).size() == 3);
  CHECK(cfg.find("a.nested")->arr()[1].arr()[0].num() == 3.0);
  CHECK_THROWS_AS(Config::parse_text("oops\n"), Error);
}

TEST_CASE("runner: flow-check on the free scenario writes deterministic artifacts") {
  auto sc = Scenario::load_text(kFreeScenario);
  namespace fs = std::filesystem;
  const std::string out1 = "/tmp/dpw_run1", out2 = "/tmp/dpw_run2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  {
    Lab lab(sc);
    CHECK(lab.run("flow-check", out1) == 0);
  }
  {
    Lab lab(sc);
    CHECK(lab.run("flow-check", out2) == 0);
  }
  auto slurp = [](const std::string& p) {
    std::ifstream is(p);
    return std::string((std::istreambuf_iterator<char>(is)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(slurp(out1 + "/flow_check.json") == slurp(out2 + "/flow_check.json"));
  CHECK(slurp(out1 + "/validation.json") == slurp(out2 + "/validation.json"));
  // the free flow-check passes its own gates
  CHECK(slurp(out1 + "/flow_check.json").find("\"pass\": true") !=
        std::string::npos);
}

TEST_CASE("runner: unknown subcommand and invalid scenario exit codes") {
  auto sc = Scenario::load_text(kFreeScenario);
  Lab lab(sc);
  CHECK(lab.run("no-such-thing", "/tmp/dpw_run_bad") == 2);
  std::string text = kFreeScenario;
  text.replace(text.find("xi = [1.0, 0.0]"), 15, "xi = [3.0, 0.0]");
  Lab lab2(Scenario::load_text(text));
  CHECK(lab2.run("trapped-set", "/tmp/dpw_run_bad2") == 2);
}

#include "doctest.h"

#include <random>

#include "bqcd/config.hpp"

using namespace bqcd;

TEST_CASE("config defaults") {
  const auto cfg = parse_config_text(R"({"scenario": {"kind": "StructuredDiffuse"}})");
  CHECK(cfg.scenario.sigma2 == 0.5);
  CHECK(cfg.scenario.n == 10);
  CHECK(cfg.scenario.k == 5);
  CHECK(cfg.horizon == 5000);
  CHECK(cfg.nu == 40);
  REQUIRE(cfg.detectors.size() == 4);
  for (const auto& d : cfg.detectors) CHECK(d.epsilon == 0.2);
  CHECK(cfg == ExperimentConfig{cfg.scenario});
}

TEST_CASE("audio preset defaults to unit variance") {
  const auto cfg = parse_config_text(R"({"scenario": {"kind": "Custom", "preset": "audio"}})");
  CHECK(cfg.scenario.sigma2 == 1.0);
  const auto explicit_var = parse_config_text(R"({"scenario": {"kind": "Custom", "preset": "audio", "sigma2": 2.5}})");
  CHECK(explicit_var.scenario.sigma2 == 2.5);
}

TEST_CASE("special values") {
  const auto cfg = parse_config_text(
      R"({"scenario": {"kind": "IsolatedPointy"}, "nu": "infinity", "theta_star": 3, "epsilon": 0.1})");
  CHECK_FALSE(cfg.nu.has_value());
  CHECK(cfg.theta_star == ThetaStarChoice::fixed(3));
  for (const auto& d : cfg.detectors) CHECK(d.epsilon == 0.1);
}

TEST_CASE("config errors") {
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"scenario": {"kind": "StructuredDiffuse", "n": 4, "k": 5}})"),
                       doctest::Contains("k"), config_error);
  CHECK_THROWS_AS(parse_config_text(R"({"scenario": {"kind": "IsolatedPointy"}, "runs": 0})"), config_error);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"scenario": {"kind": "IsolatedPointy"}, "bogus": 1})"),
                       doctest::Contains("bogus"), config_error);
  CHECK_THROWS_AS(parse_config_text(R"({"scenario": {"kind": "Triangle"}})"), config_error);
  CHECK_THROWS_AS(parse_config_text(R"({"scenario": {"kind": "IsolatedPointy"}, "nu": "soon"})"), config_error);
  CHECK_THROWS_AS(parse_config_text(R"({"nu": 3})"), config_error);
  CHECK_THROWS_AS(parse_config("/nonexistent/bqcd.json"), io_error);
}

TEST_CASE("syntax errors report the line") {
  const std::string text = "{\n  \"scenario\": {\"kind\": \"IsolatedPointy\"},\n  \"runs\": 10,,\n}\n";
  CHECK_THROWS_WITH_AS(parse_config_text(text), doctest::Contains("line 3"), config_error);
}

TEST_CASE("serialize and parse round-trip") {
  std::mt19937_64 gen(8);
  const std::array kinds{ScenarioKind::IsolatedPointy, ScenarioKind::IsolatedDiffuse, ScenarioKind::StructuredPointy,
                         ScenarioKind::StructuredDiffuse, ScenarioKind::Custom};
  for (int trial = 0; trial < 200; ++trial) {
    ExperimentConfig cfg;
    cfg.scenario.kind = kinds[gen() % kinds.size()];
    cfg.scenario.n = 5 + static_cast<int>(gen() % 20);
    cfg.scenario.k = 1 + static_cast<int>(gen() % 5);
    cfg.scenario.sigma2 = 0.1 + static_cast<double>(gen() % 1000) / 137.0;
    if (cfg.scenario.kind == ScenarioKind::Custom) {
      if (gen() % 2) {
        cfg.scenario.preset = "audio";
      } else {
        CustomInstance c{{0.0, 0.5}, {{1.0, 0.5}, {0.0, 1.75}}, {{0}, {0, 1}}, {}};
        if (gen() % 2) c.explore_dist = std::vector<double>{0.25, 0.75};
        cfg.scenario.custom = c;
      }
    }
    cfg.horizon = 100 + static_cast<long long>(gen() % 9000);
    if (gen() % 3 == 0) cfg.nu.reset(); else cfg.nu = 1 + static_cast<long long>(gen() % 99);
    if (gen() % 2) cfg.theta_star = ThetaStarChoice::fixed(static_cast<int>(gen() % 2));
    cfg.runs = 1 + static_cast<long long>(gen() % 1000);
    cfg.master_seed = gen();
    cfg.m = 1 + static_cast<long long>(gen() % 100000);
    cfg.alpha = 1.0 / static_cast<double>(2 + gen() % 1000);
    if (gen() % 2) cfg.log_beta = 0.1 + static_cast<double>(gen() % 10000) / 7.0;
    if (gen() % 2) cfg.env_noise_variance = static_cast<double>(gen() % 10) / 3.0;
    cfg.histogram_bin_width = 1 + static_cast<long long>(gen() % 50);
    cfg.detectors = {{Policy::Urs, 0.2}, {Policy::EpsGcdTheory, static_cast<double>(gen() % 100) / 99.0}};

    const auto text = serialize_config(cfg);
    const auto back = parse_config_text(text);
    CHECK(back == cfg);
    CHECK(serialize_config(back) == text);
  }
}

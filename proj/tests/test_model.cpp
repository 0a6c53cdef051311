#include "doctest.h"

#include <cmath>
#include <random>

#include "bqcd/scenarios.hpp"
#include "oracles.hpp"

using namespace bqcd;

namespace {

Parameter<double> unit_anomaly(int n, int node) { return {0, Vector<double>::Unit(n, node)}; }

Parameter<double> window_anomaly(int n, int start, int k) {
  Vector<double> mean = Vector<double>::Zero(n);
  mean.segment(start, k).setOnes();
  return {0, mean};
}

Action<double> window_action(int id, int n, int start, int k) {
  Vector<double> support = Vector<double>::Zero(n);
  support.segment(start, k).setOnes();
  return Action<double>::from_support(id, support);
}

std::vector<double> to_std(const Vector<double>& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("action weights have unit norm") {
  const auto a = window_action(0, 10, 3, 5);
  CHECK(a.weights.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(Action<double>::from_support(0, Vector<double>::Zero(4)), config_error);
  Vector<double> bad = Vector<double>::Zero(4);
  bad[1] = 2.0;
  CHECK_THROWS_AS(Action<double>::from_support(0, bad), config_error);
}

TEST_CASE("observation_mean") {
  const auto theta = unit_anomaly(10, 5);
  const auto at5 = window_action(0, 10, 5, 1);
  const auto at3 = window_action(1, 10, 3, 1);
  CHECK(observation_mean(theta, at5) == doctest::Approx(oracle::dot(to_std(theta.mean), to_std(at5.weights))));
  CHECK(observation_mean(theta, at5) == 1.0);
  CHECK(observation_mean(theta, at3) == 0.0);

  const auto block = window_anomaly(10, 3, 5);
  const auto diffuse = window_action(2, 10, 3, 5);
  CHECK(observation_mean(block, diffuse) == doctest::Approx(2.2360679775).epsilon(1e-10));

  const auto short_action = window_action(3, 4, 0, 1);
  CHECK_THROWS_AS(observation_mean(theta, short_action), config_error);
}

TEST_CASE("sample_observation") {
  const auto theta = unit_anomaly(10, 5);
  const auto a = window_action(0, 10, 5, 1);

  SUBCASE("degenerate noise") {
    const GaussianLinearModel<double> model(10, 1e-30);
    RandomStream rng(1);
    CHECK(std::abs(sample_observation(model, theta, a, rng) - 1.0) < 1e-10);
  }
  SUBCASE("fresh streams with the same seed agree") {
    const GaussianLinearModel<double> model(10, 0.5);
    RandomStream r1(42), r2(42);
    CHECK(sample_observation(model, theta, a, r1) == sample_observation(model, theta, a, r2));
  }
  SUBCASE("law of large numbers") {
    const GaussianLinearModel<double> model(10, 0.5);
    const Parameter<double> zero{0, Vector<double>::Zero(10)};
    RandomStream rng(7);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample_observation(model, zero, a, rng);
    CHECK(std::abs(sum / n) <= 3.0 * std::sqrt(0.5 / n));
  }
}

TEST_CASE("log_likelihood_ratio matches the density ratio") {
  const GaussianLinearModel<double> model(1, 0.5);
  const Parameter<double> theta0{0, Vector<double>::Zero(1)};
  const Parameter<double> theta{0, Vector<double>::Ones(1)};
  const auto a = Action<double>::from_support(0, Vector<double>::Ones(1));

  CHECK(log_likelihood_ratio(model, theta, theta0, 0.5, a) == doctest::Approx(0.0));
  CHECK(log_likelihood_ratio(model, theta, theta0, 0.0, a) == doctest::Approx(-1.0));
  CHECK(log_likelihood_ratio(model, theta0, theta0, 3.7, a) == 0.0);

  for (double x : {-2.0, -0.3, 0.0, 0.5, 1.25, 4.0}) {
    const double expected = std::log(oracle::normal_pdf(x, 1.0, 0.5) / oracle::normal_pdf(x, 0.0, 0.5));
    CHECK(log_likelihood_ratio(model, theta, theta0, x, a) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("kl_divergence examples") {
  const GaussianLinearModel<double> model(10, 0.5);
  const auto theta = unit_anomaly(10, 5);
  const Parameter<double> theta0{0, Vector<double>::Zero(10)};
  CHECK(kl_divergence(model, theta, theta0, window_action(0, 10, 5, 1)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(kl_divergence(model, theta, theta0, window_action(0, 10, 3, 5)) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(kl_divergence(model, theta, theta, window_action(0, 10, 3, 5)) == 0.0);
}

TEST_CASE("kl_divergence agrees with numeric integration on random triples") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> level(-2.0, 2.0);
  std::uniform_real_distribution<double> var(0.1, 3.0);
  std::uniform_int_distribution<int> node(0, 5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6;
    const GaussianLinearModel<double> model(n, var(gen));
    Parameter<double> t1{0, Vector<double>(n)}, t2{1, Vector<double>(n)};
    for (int i = 0; i < n; ++i) {
      t1.mean[i] = level(gen);
      t2.mean[i] = level(gen);
    }
    const int start = node(gen);
    const auto a = window_action(0, n, start, std::min(2, n - start));
    const double closed = kl_divergence(model, t1, t2, a);
    const double numeric = oracle::kl_by_quadrature(observation_mean(t1, a), observation_mean(t2, a), model.noise_variance);
    CHECK(closed >= 0.0);
    CHECK(std::abs(closed - numeric) <= 1e-6 * std::max(closed, 1e-12));
  }
}

TEST_CASE("expected log-likelihood ratio equals the divergence") {
  const GaussianLinearModel<double> model(3, 0.5);
  const Parameter<double> theta0{0, Vector<double>::Zero(3)};
  Parameter<double> theta{0, Vector<double>(3)};
  theta.mean << 0.3, 0.8, -0.2;
  const auto a = window_action(0, 3, 0, 2);
  RandomStream rng(99);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = log_likelihood_ratio(model, theta, theta0, sample_observation(model, theta, a, rng), a);
    sum += g;
    sum_sq += g * g;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - kl_divergence(model, theta, theta0, a)) <= 4.0 * se);
}

TEST_CASE("most_informative_action") {
  SUBCASE("isolated anomaly with pointy actions") {
    ScenarioSpec spec{ScenarioKind::IsolatedPointy, 10, 5, 0.5, {}, {}};
    const auto inst = build_instance<double>(spec);
    CHECK(most_informative_action(inst, inst.thetas1()[5]).id == 5);
  }
  SUBCASE("structured anomaly with diffuse windows") {
    ScenarioSpec spec{ScenarioKind::StructuredDiffuse, 10, 5, 0.5, {}, {}};
    const auto inst = build_instance<double>(spec);
    const auto& best = most_informative_action(inst, inst.thetas1()[3]);
    CHECK(best.id == 3);
    CHECK(best.support == window_anomaly(10, 3, 5).mean);
  }
  SUBCASE("ties go to the lowest id") {
    ScenarioSpec spec{ScenarioKind::StructuredPointy, 10, 5, 0.5, {}, {}};
    const auto inst = build_instance<double>(spec);
    // window {2..6}: five pointy actions tie at divergence 1.
    CHECK(most_informative_action(inst, inst.thetas1()[2]).id == 2);
  }
  SUBCASE("argmax is invariant to rescaling the noise variance") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> level(0.0, 1.0);
    CustomInstance custom;
    custom.theta0 = {0.1, 0.0, -0.2, 0.3, 0.0};
    for (int p = 0; p < 4; ++p) {
      std::vector<double> t(5);
      for (auto& x : t) x = level(gen);
      custom.thetas1.push_back(t);
    }
    custom.action_supports = {{0}, {1, 2}, {2, 3, 4}, {4}, {0, 4}};
    for (double sigma2 : {0.5, 2.0, 17.0}) {
      ScenarioSpec spec;
      spec.kind = ScenarioKind::Custom;
      spec.custom = custom;
      spec.sigma2 = sigma2;
      const auto inst = build_instance<double>(spec);
      ScenarioSpec reference = spec;
      reference.sigma2 = 0.5;
      const auto base = build_instance<double>(reference);
      for (const auto& theta : inst.thetas1()) {
        CHECK(most_informative_action(inst, theta).id == most_informative_action(base, theta).id);
      }
    }
  }
  SUBCASE("undetectable parameter") {
    CustomInstance custom{{0.0, 0.0}, {{0.0, 0.0}, {1.0, 0.0}}, {{0}, {1}}, {}};
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Custom;
    spec.custom = custom;
    const auto inst = build_instance<double>(spec);
    CHECK_FALSE(inst.identifiable());
    CHECK_THROWS_AS(most_informative_action(inst, inst.thetas1()[0]), simulation_error);
  }
}

TEST_CASE("average_divergence") {
  ScenarioSpec spec{ScenarioKind::IsolatedPointy, 10, 5, 0.5, {}, {}};
  const auto inst = build_instance<double>(spec);
  const auto& star = inst.thetas1()[4];
  CHECK(average_divergence(inst, star, inst.theta0()) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(average_divergence(inst, star, star) == 0.0);

  // d coordinates, theta* = delta e_1, unit variance: D = delta^2 / (2d).
  for (int d : {2, 5, 10}) {
    for (double delta : {0.5, 1.0, 3.0}) {
      std::vector<Parameter<double>> thetas;
      for (int i = 0; i < d; ++i) thetas.push_back({i, delta * Vector<double>::Unit(d, i)});
      ProblemInstance<double> canonical({d, 1.0}, {0, Vector<double>::Zero(d)}, thetas, pointy_actions<double>(d));
      CHECK(average_divergence(canonical, canonical.thetas1()[0], canonical.theta0()) ==
            doctest::Approx(delta * delta / (2.0 * d)).epsilon(1e-12));
    }
  }
}

TEST_CASE("problem instance validation") {
  const GaussianLinearModel<double> model(2, 0.5);
  const Parameter<double> theta0{0, Vector<double>::Zero(2)};
  const std::vector<Parameter<double>> thetas{{0, Vector<double>::Unit(2, 0)}, {1, Vector<double>::Unit(2, 1)}};
  Vector<double> pi(2);
  pi << 0.7, 0.3;
  CHECK_NOTHROW(ProblemInstance<double>(model, theta0, thetas, pointy_actions<double>(2), pi));
  pi << 0.7, 0.31;
  CHECK_THROWS_AS(ProblemInstance<double>(model, theta0, thetas, pointy_actions<double>(2), pi), config_error);
  pi << 1.1, -0.1;
  CHECK_THROWS_AS(ProblemInstance<double>(model, theta0, thetas, pointy_actions<double>(2), pi), config_error);
  const std::vector<Parameter<double>> gap_ids{{0, Vector<double>::Unit(2, 0)}, {2, Vector<double>::Unit(2, 1)}};
  CHECK_THROWS_AS(ProblemInstance<double>(model, theta0, gap_ids, pointy_actions<double>(2)), config_error);
  CHECK_THROWS_AS(GaussianLinearModel<double>(2, 0.0), config_error);

  const std::vector<Parameter<double>> twins{{0, Vector<double>::Unit(2, 0)}, {1, Vector<double>::Unit(2, 0)}};
  const ProblemInstance<double> flagged(model, theta0, twins, pointy_actions<double>(2));
  CHECK_FALSE(flagged.identifiable());
  CHECK(flagged.identifiability_issues().size() == 1);
}

TEST_CASE("model works in single precision") {
  const GaussianLinearModel<float> model(10, 0.5f);
  const Parameter<float> theta{0, Vector<float>::Unit(10, 5)};
  const Parameter<float> theta0{0, Vector<float>::Zero(10)};
  Vector<float> support = Vector<float>::Zero(10);
  support.segment(3, 5).setOnes();
  const auto a = Action<float>::from_support(0, support);
  CHECK(kl_divergence(model, theta, theta0, a) == doctest::Approx(0.2f).epsilon(1e-6));
}

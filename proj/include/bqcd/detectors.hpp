#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "bqcd/model.hpp"
#include "bqcd/random.hpp"

namespace bqcd {

using Instance = ProblemInstance<double>;

enum class Policy { EpsGcdTheory, EpsGcdFull, Oracle, Urs };

std::string_view to_string(Policy policy);
Policy policy_from_string(std::string_view name);

/// Smallest log(beta) meeting P_inf(tau < m) <= alpha: log(m * |Theta1| / alpha).
double threshold_from_false_alarm(long long m, double alpha, long long num_params);

/// Lindley recursion step: (q + increment)^+.
constexpr double queue_update(double q, double increment) noexcept {
  const double next = q + increment;
  return next > 0.0 ? next : 0.0;
}

struct DetectorConfig {
  Policy policy = Policy::EpsGcdFull;
  double epsilon = 0.2;
  double log_threshold = 1.0;
  // Post-change parameter the Oracle plays for and tests against.
  std::optional<int> oracle_target;

  void validate() const;
  bool operator==(const DetectorConfig&) const = default;
};

/// CUSUM queue heights per post-change parameter id, in log-likelihood units.
struct CusumQueues {
  std::vector<double> values;

  double max() const;
  /// Lowest id among the maximal entries.
  int argmax() const;
  void update(const std::vector<double>& increments);
};

struct DetectorState {
  long long round = 1;
  CusumQueues q1;  // estimation statistic
  CusumQueues q2;  // stopping statistic
  int theta_hat = 0;
  bool stopped = false;
  std::optional<int> last_action;
};

struct StepRecord {
  long long round = 0;
  bool explored = false;
  std::optional<int> action;
  double observation = 0.0;
  bool stopped_before_acting = false;

  bool operator==(const StepRecord&) const = default;
};

using Environment = std::function<double(const Action<double>&)>;

/// One detector run over a fixed instance. Owns its state; the instance is
/// borrowed read-only and must outlive the detector.
///
/// Stopping statistic per policy:
///   EpsGcdTheory  q1 fed by exploration rounds, q2 by exploitation rounds
///   EpsGcdFull    q1 fed by every round,        q2 by exploitation rounds
///   Oracle        q2[target] fed by every round
///   Urs           q2 fed by every round
class Detector {
 public:
  Detector(DetectorConfig cfg, const Instance& inst);

  const DetectorConfig& config() const noexcept { return cfg_; }
  const DetectorState& state() const noexcept { return state_; }
  DetectorState& mutable_state() noexcept { return state_; }

  /// Returns (explored, action id). Does not touch the queues.
  std::pair<bool, int> select_action(RandomStream& rng) const;

  StepRecord step(const Environment& env, RandomStream& rng);

  /// Greedy action for each post-change parameter (empty when undetectable).
  const std::vector<std::optional<int>>& greedy_actions() const noexcept { return greedy_; }

 private:
  void compute_increments(int action, double x);

  DetectorConfig cfg_;
  const Instance* inst_;
  DetectorState state_;
  std::vector<std::optional<int>> greedy_;
  // g_theta(x, a) = slope(theta, a) * x + intercept(theta, a)
  Matrix<double> slope_;
  Matrix<double> intercept_;
  std::vector<double> increments_;
};

struct Change {
  std::optional<long long> nu;  // nullopt: no change
  std::optional<int> theta_star;
};

struct RunOptions {
  long long horizon = 5000;
  // Noise variance of the simulated environment; defaults to the model's.
  // Zero gives noiseless observations.
  std::optional<double> env_noise_variance;
  bool record_trace = false;
};

struct RunResult {
  std::optional<long long> tau;  // nullopt: censored at the horizon
  std::vector<StepRecord> trace;

  bool censored() const noexcept { return !tau.has_value(); }
};

/// Simulates rounds 1..horizon. Observations come from theta0 before round
/// nu and from theta_star from round nu on. The environment and the
/// detector draw from separate streams derived from `seed`.
RunResult run_until_stop(const DetectorConfig& cfg, const Instance& inst, const Change& change,
                         const RunOptions& options, std::uint64_t seed);

}  // namespace bqcd

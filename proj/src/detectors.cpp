#include "bqcd/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bqcd {

std::string_view to_string(Policy policy) {
  switch (policy) {
    case Policy::EpsGcdTheory: return "EpsGcdTheory";
    case Policy::EpsGcdFull: return "EpsGcdFull";
    case Policy::Oracle: return "Oracle";
    case Policy::Urs: return "Urs";
  }
  return "?";
}

Policy policy_from_string(std::string_view name) {
  for (auto p : {Policy::EpsGcdTheory, Policy::EpsGcdFull, Policy::Oracle, Policy::Urs}) {
    if (name == to_string(p)) return p;
  }
  throw config_error("unknown detector policy '" + std::string(name) + "'");
}

double threshold_from_false_alarm(long long m, double alpha, long long num_params) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("alpha must lie in (0, 1)");
  if (m < 1) throw config_error("m must be positive");
  if (num_params < 1) throw config_error("parameter count must be positive");
  return std::log(static_cast<double>(m)) + std::log(static_cast<double>(num_params)) - std::log(alpha);
}

void DetectorConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw config_error("epsilon must lie in [0, 1]");
  if (!(log_threshold > 0.0) || !std::isfinite(log_threshold)) {
    throw config_error("log threshold must be positive and finite");
  }
}

double CusumQueues::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

int CusumQueues::argmax() const {
  // max_element returns the first maximal element.
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

void CusumQueues::update(const std::vector<double>& increments) {
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = queue_update(values[i], increments[i]);
}

Detector::Detector(DetectorConfig cfg, const Instance& inst) : cfg_(cfg), inst_(&inst) {
  cfg_.validate();
  const auto num_params = inst.num_params();
  if (cfg_.policy == Policy::Oracle) {
    if (!cfg_.oracle_target) throw config_error("Oracle detector requires the post-change parameter");
    if (*cfg_.oracle_target < 0 || static_cast<std::size_t>(*cfg_.oracle_target) >= num_params) {
      throw config_error("Oracle target " + std::to_string(*cfg_.oracle_target) + " is out of range");
    }
  }

  state_.q1.values.assign(num_params, 0.0);
  state_.q2.values.assign(num_params, 0.0);
  increments_.assign(num_params, 0.0);

  greedy_.resize(num_params);
  for (std::size_t p = 0; p < num_params; ++p) {
    const Vector<double> kl = divergences_from_baseline(inst, static_cast<int>(p));
    Eigen::Index best = 0;
    if (kl.maxCoeff(&best) > 0.0) greedy_[p] = static_cast<int>(best);
  }
  if (cfg_.policy == Policy::Oracle && !greedy_[static_cast<std::size_t>(*cfg_.oracle_target)]) {
    throw simulation_error("undetectable parameter " + std::to_string(*cfg_.oracle_target));
  }

  const double sigma2 = inst.model().noise_variance;
  const auto& base = inst.baseline_means();
  const auto& means = inst.means();
  slope_ = (means.rowwise() - base.transpose()) / sigma2;
  intercept_ = -(means.array().square().rowwise() - base.array().square().transpose()).matrix() / (2.0 * sigma2);
}

std::pair<bool, int> Detector::select_action(RandomStream& rng) const {
  switch (cfg_.policy) {
    case Policy::Oracle:
      return {false, *greedy_[static_cast<std::size_t>(*cfg_.oracle_target)]};
    case Policy::Urs:
      return {false, static_cast<int>(rng.index(inst_->num_actions()))};
    case Policy::EpsGcdTheory:
    case Policy::EpsGcdFull:
      break;
  }
  if (rng.bernoulli(cfg_.epsilon)) {
    return {true, static_cast<int>(rng.categorical(inst_->explore_dist()))};
  }
  const auto& greedy = greedy_[static_cast<std::size_t>(state_.theta_hat)];
  if (!greedy) {
    throw simulation_error("undetectable parameter " + std::to_string(state_.theta_hat) +
                           " selected as the current estimate");
  }
  return {false, *greedy};
}

void Detector::compute_increments(int action, double x) {
  for (std::size_t p = 0; p < increments_.size(); ++p) {
    const auto row = static_cast<Eigen::Index>(p);
    increments_[p] = slope_(row, action) * x + intercept_(row, action);
  }
}

StepRecord Detector::step(const Environment& env, RandomStream& rng) {
  StepRecord record;
  record.round = state_.round;
  if (state_.stopped || state_.q2.max() >= cfg_.log_threshold) {
    state_.stopped = true;
    record.stopped_before_acting = true;
    return record;
  }

  const auto [explored, action] = select_action(rng);
  const double x = env(inst_->actions()[static_cast<std::size_t>(action)]);
  record.explored = explored;
  record.action = action;
  record.observation = x;
  state_.last_action = action;

  compute_increments(action, x);
  switch (cfg_.policy) {
    case Policy::EpsGcdTheory:
      (explored ? state_.q1 : state_.q2).update(increments_);
      break;
    case Policy::EpsGcdFull:
      state_.q1.update(increments_);
      if (!explored) state_.q2.update(increments_);
      break;
    case Policy::Oracle: {
      auto& q = state_.q2.values[static_cast<std::size_t>(*cfg_.oracle_target)];
      q = queue_update(q, increments_[static_cast<std::size_t>(*cfg_.oracle_target)]);
      break;
    }
    case Policy::Urs:
      state_.q2.update(increments_);
      break;
  }
  if (cfg_.policy == Policy::EpsGcdTheory || cfg_.policy == Policy::EpsGcdFull) {
    state_.theta_hat = state_.q1.argmax();
  }
  ++state_.round;
  return record;
}

RunResult run_until_stop(const DetectorConfig& cfg, const Instance& inst, const Change& change,
                         const RunOptions& options, std::uint64_t seed) {
  if (options.horizon < 1) throw config_error("horizon must be >= 1");
  if (change.nu.has_value() != change.theta_star.has_value()) {
    throw config_error("theta_star must be given exactly when the changepoint is finite");
  }
  if (change.nu && *change.nu < 1) throw config_error("changepoint must be >= 1");
  if (change.theta_star && (*change.theta_star < 0 || static_cast<std::size_t>(*change.theta_star) >= inst.num_params())) {
    throw config_error("theta_star " + std::to_string(*change.theta_star) + " is out of range");
  }

  DetectorConfig effective = cfg;
  if (effective.policy == Policy::Oracle && !effective.oracle_target) effective.oracle_target = change.theta_star;
  Detector detector(effective, inst);

  const double env_sd = std::sqrt(options.env_noise_variance.value_or(inst.model().noise_variance));
  if (!std::isfinite(env_sd)) throw config_error("environment noise variance must be finite and >= 0");
  RandomStream env_rng(mix64(seed ^ 0x656e76ULL));
  RandomStream det_rng(mix64(seed));

  long long round = 1;
  const Environment env = [&](const Action<double>& a) {
    const bool changed = change.nu && round >= *change.nu;
    const double mean = changed ? inst.means()(*change.theta_star, a.id) : inst.baseline_means()(a.id);
    return mean + env_sd * env_rng.normal();
  };

  RunResult result;
  for (; round <= options.horizon; ++round) {
    StepRecord record = detector.step(env, det_rng);
    const bool stopped = record.stopped_before_acting;
    if (options.record_trace) result.trace.push_back(record);
    if (stopped) {
      result.tau = round;
      break;
    }
  }
  return result;
}

}  // namespace bqcd

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "bqcd/model.hpp"

namespace bqcd {

struct BoundInputs {
  double alpha = 0.01;
  long long m = 1000;
  double epsilon = 0.2;
  double log_beta = 0.0;
  // Expected exploration queue heights at the changepoint, keyed by
  // parameter id. Missing ids are treated as 0 (the change-at-round-1 case).
  std::map<int, double> q1_at_change;
  double r = 0.0;
  double d_max = 0.0;
};

/// Subgaussian parameter of the log-likelihood-ratio increments:
/// max over (theta', theta'', a) of (mu' - mu'')^2 / sigma^2, taken over
/// {theta0} and the post-change set.
template <typename Scalar>
Scalar subgaussian_parameter(const ProblemInstance<Scalar>& inst) {
  Matrix<Scalar> all(static_cast<Eigen::Index>(inst.num_params()) + 1, static_cast<Eigen::Index>(inst.num_actions()));
  all.row(0) = inst.baseline_means().transpose();
  all.bottomRows(all.rows() - 1) = inst.means();
  const Vector<Scalar> spread = all.colwise().maxCoeff() - all.colwise().minCoeff();
  return spread.array().square().maxCoeff() / inst.model().noise_variance;
}

/// D_max: largest per-action KL divergence between any two hypotheses.
template <typename Scalar>
Scalar max_pairwise_divergence(const ProblemInstance<Scalar>& inst) {
  return subgaussian_parameter(inst) / Scalar(2);
}

template <typename Scalar>
BoundInputs with_model_constants(BoundInputs in, const ProblemInstance<Scalar>& inst) {
  in.r = static_cast<double>(subgaussian_parameter(inst));
  in.d_max = static_cast<double>(max_pairwise_divergence(inst));
  return in;
}

namespace detail {

inline void check_alpha_m(const BoundInputs& in) {
  if (!(in.alpha > 0.0 && in.alpha <= 0.1)) throw config_error("lower bound requires 0 < alpha <= 1/10");
  if (in.m < 1) throw config_error("lower bound requires m >= 1");
}

}  // namespace detail

/// min{ (1/20) log(1/alpha) / max_a KL(theta*(a) || theta0(a)), m/2 }.
/// Returns +inf when theta* is undetectable.
template <typename Scalar>
double lower_bound_delay(const BoundInputs& in, const Parameter<Scalar>& theta_star,
                         const ProblemInstance<Scalar>& inst) {
  detail::check_alpha_m(in);
  const auto mu_star = static_cast<double>(max_divergence(inst, theta_star));
  if (!(mu_star > 0.0)) return std::numeric_limits<double>::infinity();
  return std::min(0.05 * std::log(1.0 / in.alpha) / mu_star, static_cast<double>(in.m) / 2.0);
}

/// Conditional-delay form for a change at round nu. The expression does not
/// depend on nu; nu = 1 recovers lower_bound_delay.
template <typename Scalar>
double anytime_lower_bound(const BoundInputs& in, long long nu, const Parameter<Scalar>& theta_star,
                           const ProblemInstance<Scalar>& inst) {
  if (nu < 1) throw config_error("changepoint must be >= 1");
  return lower_bound_delay(in, theta_star, inst);
}

/// Delta_theta = 1/2 min(Dbar(theta* || theta0), Dbar(theta* || theta)).
template <typename Scalar>
Scalar gap(const Parameter<Scalar>& theta, const Parameter<Scalar>& theta_star, const ProblemInstance<Scalar>& inst) {
  if (theta.id == theta_star.id && theta.mean == theta_star.mean) {
    throw config_error("gap is undefined for theta == theta_star");
  }
  const Scalar to_baseline = average_divergence(inst, theta_star, inst.theta0());
  const Scalar to_theta = average_divergence(inst, theta_star, theta);
  return std::min(to_baseline, to_theta) / Scalar(2);
}

/// The same gap written as D0 - (D0 + (D0 - D)^+)/2; agrees with gap() up
/// to rounding.
template <typename Scalar>
Scalar gap_interpretation_form(const Parameter<Scalar>& theta, const Parameter<Scalar>& theta_star,
                               const ProblemInstance<Scalar>& inst) {
  const Scalar d0 = average_divergence(inst, theta_star, inst.theta0());
  const Scalar d = average_divergence(inst, theta_star, theta);
  return d0 - (d0 + std::max(d0 - d, Scalar(0))) / Scalar(2);
}

struct GapEntry {
  int theta_id = 0;
  double gap = 0.0;
  int greedy_action = 0;
  bool competitor = false;  // greedy action differs from theta*'s
  double learning_term = 0.0;
};

struct UpperBound {
  double total = 0.0;
  double first_term = 0.0;
  double learning_terms = 0.0;
  double mu_star = 0.0;
  double gamma = 0.0;
  std::vector<GapEntry> gaps;
};

/// Explicit delay upper bound for epsilon-greedy change detection:
///
///   21 + 8 log(beta) / (mu* (1 - eps))
///      + sum over theta with a*_theta != a*_theta* of
///          4 Q1(theta) / (eps Delta) + 2 exp(-eps^2 Delta^2 log(beta) / (4 gamma mu* (1 - eps)))
///                                      / (1 - exp(-eps^2 Delta^2 / (8 gamma)))
///
/// with gamma = r + 2 D_max^2.
template <typename Scalar>
UpperBound upper_bound_delay(const BoundInputs& in, const Parameter<Scalar>& theta_star,
                             const ProblemInstance<Scalar>& inst) {
  const double eps = in.epsilon;
  if (!(eps > 0.0 && eps <= 0.5)) throw config_error("upper bound requires 0 < epsilon <= 1/2");
  if (!(in.r > 0.0)) throw config_error("upper bound requires r > 0");
  if (in.d_max < 0.0) throw config_error("upper bound requires d_max >= 0");

  UpperBound out;
  out.mu_star = static_cast<double>(max_divergence(inst, theta_star));
  if (!(out.mu_star > 0.0)) {
    throw simulation_error("undetectable parameter " + std::to_string(theta_star.id));
  }
  out.gamma = in.r + 2.0 * in.d_max * in.d_max;
  out.first_term = 8.0 * in.log_beta / (out.mu_star * (1.0 - eps));

  const int star_action = most_informative_action(inst, theta_star).id;
  for (const auto& theta : inst.thetas1()) {
    if (theta.id == theta_star.id) continue;
    GapEntry entry;
    entry.theta_id = theta.id;
    entry.gap = static_cast<double>(gap(theta, theta_star, inst));
    entry.greedy_action = most_informative_action(inst, theta).id;
    entry.competitor = entry.greedy_action != star_action;
    if (entry.competitor) {
      if (!(entry.gap > 0.0)) {
        throw simulation_error("inseparable parameter " + std::to_string(theta.id) + ": gap is zero");
      }
      const double d2 = eps * eps * entry.gap * entry.gap;
      const auto q1 = in.q1_at_change.find(theta.id);
      const double queue = q1 == in.q1_at_change.end() ? 0.0 : q1->second;
      entry.learning_term = 4.0 * queue / (eps * entry.gap) +
                            2.0 * std::exp(-d2 * in.log_beta / (4.0 * out.gamma * out.mu_star * (1.0 - eps))) /
                                -std::expm1(-d2 / (8.0 * out.gamma));
      out.learning_terms += entry.learning_term;
    }
    out.gaps.push_back(entry);
  }
  out.total = 21.0 + out.first_term + out.learning_terms;
  return out;
}

/// log(beta) / mu*: the unscaled oracle stopping time.
template <typename Scalar>
double oracle_rate(double log_beta, const Parameter<Scalar>& theta_star, const ProblemInstance<Scalar>& inst) {
  const auto mu_star = static_cast<double>(max_divergence(inst, theta_star));
  if (!(mu_star > 0.0)) throw simulation_error("undetectable parameter " + std::to_string(theta_star.id));
  return log_beta / mu_star;
}

}  // namespace bqcd

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bqcd/error.hpp"
#include "bqcd/random.hpp"

namespace bqcd {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// A pre- or post-change hypothesis: one mean level per node.
template <typename Scalar>
struct Parameter {
  int id = 0;
  Vector<Scalar> mean;

  bool operator==(const Parameter& other) const {
    return id == other.id && mean == other.mean;
  }
};

/// A sensing action. `support` is a 0/1 vector; `weights` is the support
/// scaled to unit L2 norm so every probe sees the same noise level.
template <typename Scalar>
struct Action {
  int id = 0;
  Vector<Scalar> support;
  Vector<Scalar> weights;

  static Action from_support(int id, Vector<Scalar> support) {
    for (Eigen::Index i = 0; i < support.size(); ++i) {
      if (support[i] != Scalar(0) && support[i] != Scalar(1)) {
        throw config_error("action " + std::to_string(id) + ": support entries must be 0 or 1");
      }
    }
    const Scalar norm = support.norm();
    if (norm == Scalar(0)) {
      throw config_error("action " + std::to_string(id) + ": empty support");
    }
    Vector<Scalar> weights = support / norm;
    return Action{id, std::move(support), std::move(weights)};
  }

  bool operator==(const Action& other) const {
    return id == other.id && support == other.support;
  }
};

/// Each node carries i.i.d. N(0, sigma^2) noise, so a unit-norm probe
/// observes N(<weights, mean>, sigma^2).
template <typename Scalar>
struct GaussianLinearModel {
  Eigen::Index dimension = 0;
  Scalar noise_variance = Scalar(1);

  GaussianLinearModel() = default;
  GaussianLinearModel(Eigen::Index n, Scalar sigma2) : dimension(n), noise_variance(sigma2) {
    if (n <= 0) throw config_error("model dimension must be positive");
    if (!(sigma2 > Scalar(0)) || !std::isfinite(static_cast<double>(sigma2))) {
      throw config_error("noise variance must be positive and finite");
    }
  }

  bool operator==(const GaussianLinearModel&) const = default;
};

namespace detail {

template <typename Scalar>
void check_dimensions(const Parameter<Scalar>& theta, const Action<Scalar>& a) {
  if (theta.mean.size() != a.weights.size()) {
    throw config_error("dimension mismatch: parameter " + std::to_string(theta.id) + " has length " +
                       std::to_string(theta.mean.size()) + ", action " + std::to_string(a.id) +
                       " has length " + std::to_string(a.weights.size()));
  }
}

}  // namespace detail

template <typename Scalar>
Scalar observation_mean(const Parameter<Scalar>& theta, const Action<Scalar>& a) {
  detail::check_dimensions(theta, a);
  return a.weights.dot(theta.mean);
}

template <typename Scalar>
Scalar sample_observation(const GaussianLinearModel<Scalar>& model, const Parameter<Scalar>& theta,
                          const Action<Scalar>& a, RandomStream& rng) {
  const Scalar mean = observation_mean(theta, a);
  return mean + std::sqrt(model.noise_variance) * static_cast<Scalar>(rng.normal());
}

/// Log-likelihood ratio of N(mu_theta, s2) against N(mu_0, s2) at x, with
/// the means already projected onto the action.
template <typename Scalar>
Scalar gaussian_llr(Scalar mu_theta, Scalar mu_0, Scalar noise_variance, Scalar x) {
  return ((mu_theta - mu_0) * x - (mu_theta * mu_theta - mu_0 * mu_0) / Scalar(2)) / noise_variance;
}

template <typename Scalar>
Scalar log_likelihood_ratio(const GaussianLinearModel<Scalar>& model, const Parameter<Scalar>& theta,
                            const Parameter<Scalar>& theta0, Scalar x, const Action<Scalar>& a) {
  return gaussian_llr(observation_mean(theta, a), observation_mean(theta0, a), model.noise_variance, x);
}

template <typename Scalar>
Scalar kl_divergence(const GaussianLinearModel<Scalar>& model, const Parameter<Scalar>& theta1,
                     const Parameter<Scalar>& theta2, const Action<Scalar>& a) {
  const Scalar diff = observation_mean(theta1, a) - observation_mean(theta2, a);
  return diff * diff / (Scalar(2) * model.noise_variance);
}

/// Immutable problem description shared read-only by every run.
///
/// Construction validates shapes and the exploration distribution and
/// precomputes the projected means of every hypothesis on every action,
/// `means_ = Theta * W^T`. An instance that fails the detectability check
/// is still constructed; the failures are listed in identifiability_issues().
template <typename Scalar>
class ProblemInstance {
 public:
  ProblemInstance(GaussianLinearModel<Scalar> model, Parameter<Scalar> theta0,
                  std::vector<Parameter<Scalar>> thetas1, std::vector<Action<Scalar>> actions,
                  std::optional<Vector<Scalar>> explore_dist = std::nullopt)
      : model_(model),
        theta0_(std::move(theta0)),
        thetas1_(std::move(thetas1)),
        actions_(std::move(actions)) {
    if (thetas1_.empty()) throw config_error("post-change parameter set is empty");
    if (actions_.empty()) throw config_error("action set is empty");
    check_vector(theta0_.mean, "theta0");
    for (std::size_t i = 0; i < thetas1_.size(); ++i) {
      if (thetas1_[i].id != static_cast<int>(i)) {
        throw config_error("post-change parameter ids must be contiguous from 0");
      }
      check_vector(thetas1_[i].mean, "parameter " + std::to_string(i));
    }
    for (std::size_t i = 0; i < actions_.size(); ++i) {
      if (actions_[i].id != static_cast<int>(i)) {
        throw config_error("action ids must be contiguous from 0");
      }
      if (actions_[i].weights.size() != model_.dimension) {
        throw config_error("action " + std::to_string(i) + " has wrong length");
      }
    }

    const auto num_actions = static_cast<Eigen::Index>(actions_.size());
    if (explore_dist) {
      explore_ = std::move(*explore_dist);
      if (explore_.size() != num_actions) {
        throw config_error("exploration distribution length does not match action count");
      }
      if ((explore_.array() < Scalar(0)).any()) {
        throw config_error("exploration distribution has a negative entry");
      }
      if (std::abs(static_cast<double>(explore_.sum()) - 1.0) > 1e-12) {
        throw config_error("exploration distribution must sum to 1");
      }
    } else {
      explore_ = Vector<Scalar>::Constant(num_actions, Scalar(1) / static_cast<Scalar>(num_actions));
    }

    Matrix<Scalar> weights(num_actions, model_.dimension);
    for (Eigen::Index a = 0; a < num_actions; ++a) weights.row(a) = actions_[a].weights.transpose();
    Matrix<Scalar> thetas(static_cast<Eigen::Index>(thetas1_.size()), model_.dimension);
    for (Eigen::Index p = 0; p < thetas.rows(); ++p) thetas.row(p) = thetas1_[p].mean.transpose();
    means_ = thetas * weights.transpose();
    baseline_means_ = weights * theta0_.mean;

    check_identifiability();
  }

  const GaussianLinearModel<Scalar>& model() const noexcept { return model_; }
  const Parameter<Scalar>& theta0() const noexcept { return theta0_; }
  const std::vector<Parameter<Scalar>>& thetas1() const noexcept { return thetas1_; }
  const std::vector<Action<Scalar>>& actions() const noexcept { return actions_; }
  const Vector<Scalar>& explore_dist() const noexcept { return explore_; }

  std::size_t num_params() const noexcept { return thetas1_.size(); }
  std::size_t num_actions() const noexcept { return actions_.size(); }

  /// Projected means, rows = post-change parameters, columns = actions.
  const Matrix<Scalar>& means() const noexcept { return means_; }
  /// Projected pre-change means per action.
  const Vector<Scalar>& baseline_means() const noexcept { return baseline_means_; }

  /// Detectability check: every parameter separable from theta0 and from
  /// every other parameter on at least one action.
  bool identifiable() const noexcept { return issues_.empty(); }
  const std::vector<std::string>& identifiability_issues() const noexcept { return issues_; }

  /// Identifiability issues followed by any notes attached by constructors.
  std::vector<std::string> warnings() const {
    std::vector<std::string> all = issues_;
    all.insert(all.end(), notes_.begin(), notes_.end());
    return all;
  }
  void add_warning(std::string w) { notes_.push_back(std::move(w)); }

  bool operator==(const ProblemInstance& other) const {
    return model_ == other.model_ && theta0_ == other.theta0_ && thetas1_ == other.thetas1_ &&
           actions_ == other.actions_ && explore_ == other.explore_;
  }

 private:
  void check_vector(const Vector<Scalar>& v, const std::string& what) const {
    if (v.size() != model_.dimension) throw config_error(what + " has wrong length");
    if (!v.allFinite()) throw config_error(what + " has a non-finite entry");
  }

  void check_identifiability() {
    const auto separated = [](const auto& lhs, const auto& rhs) {
      return ((lhs - rhs).array() != Scalar(0)).any();
    };
    for (Eigen::Index p = 0; p < means_.rows(); ++p) {
      if (!separated(means_.row(p).transpose(), baseline_means_)) {
        issues_.push_back("parameter " + std::to_string(p) +
                            " is undetectable: no action separates it from theta0");
      }
      for (Eigen::Index q = p + 1; q < means_.rows(); ++q) {
        if (!separated(means_.row(p), means_.row(q))) {
          issues_.push_back("parameters " + std::to_string(p) + " and " + std::to_string(q) +
                              " are indistinguishable on every action");
        }
      }
    }
  }

  GaussianLinearModel<Scalar> model_;
  Parameter<Scalar> theta0_;
  std::vector<Parameter<Scalar>> thetas1_;
  std::vector<Action<Scalar>> actions_;
  Vector<Scalar> explore_;
  Matrix<Scalar> means_;
  Vector<Scalar> baseline_means_;
  std::vector<std::string> issues_;
  std::vector<std::string> notes_;
};

/// KL divergence of each action between a post-change row and theta0.
template <typename Scalar>
Vector<Scalar> divergences_from_baseline(const ProblemInstance<Scalar>& inst, int param) {
  const Vector<Scalar> diff = inst.means().row(param).transpose() - inst.baseline_means();
  return diff.array().square() / (Scalar(2) * inst.model().noise_variance);
}

/// argmax_a KL(theta(a) || theta0(a)); ties go to the lowest action id.
template <typename Scalar>
const Action<Scalar>& most_informative_action(const ProblemInstance<Scalar>& inst,
                                              const Parameter<Scalar>& theta) {
  Vector<Scalar> kl(static_cast<Eigen::Index>(inst.num_actions()));
  for (std::size_t a = 0; a < inst.num_actions(); ++a) {
    kl[static_cast<Eigen::Index>(a)] = kl_divergence(inst.model(), theta, inst.theta0(), inst.actions()[a]);
  }
  Eigen::Index best = 0;
  const Scalar best_value = kl.maxCoeff(&best);  // first maximal index
  if (!(best_value > Scalar(0))) {
    throw simulation_error("undetectable parameter " + std::to_string(theta.id) +
                           ": every action has zero divergence from theta0");
  }
  return inst.actions()[static_cast<std::size_t>(best)];
}

/// Divergence at the most informative action (the oracle detection rate).
template <typename Scalar>
Scalar max_divergence(const ProblemInstance<Scalar>& inst, const Parameter<Scalar>& theta) {
  Scalar best = Scalar(0);
  for (const auto& a : inst.actions()) best = std::max(best, kl_divergence(inst.model(), theta, inst.theta0(), a));
  return best;
}

/// Exploration-weighted divergence sum_a pi(a) KL(theta_star(a) || theta(a)).
template <typename Scalar>
Scalar average_divergence(const ProblemInstance<Scalar>& inst, const Parameter<Scalar>& theta_star,
                          const Parameter<Scalar>& theta) {
  Scalar total = Scalar(0);
  for (std::size_t a = 0; a < inst.num_actions(); ++a) {
    total += inst.explore_dist()[static_cast<Eigen::Index>(a)] *
             kl_divergence(inst.model(), theta_star, theta, inst.actions()[a]);
  }
  return total;
}

}  // namespace bqcd

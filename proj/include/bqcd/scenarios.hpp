#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bqcd/model.hpp"

namespace bqcd {

enum class ScenarioKind { IsolatedPointy, IsolatedDiffuse, StructuredPointy, StructuredDiffuse, Custom };

std::string_view to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(std::string_view name);

/// Means and supports for a user-supplied instance. Node indices are 0-based.
struct CustomInstance {
  std::vector<double> theta0;
  std::vector<std::vector<double>> thetas1;
  std::vector<std::vector<int>> action_supports;  // each entry lists the nodes in the support
  std::optional<std::vector<double>> explore_dist;

  bool operator==(const CustomInstance&) const = default;
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::IsolatedPointy;
  int n = 10;
  int k = 5;
  double sigma2 = 0.5;
  std::optional<CustomInstance> custom;
  // Named custom preset ("audio"); expanded by build_instance.
  std::optional<std::string> preset;

  void validate() const;
  bool operator==(const ScenarioSpec&) const = default;
};

/// Machine-ID reconstruction-error means under normal and abnormal operation.
struct AudioMeans {
  static constexpr std::array<double, 4> normal{7.816003, 7.728631, 12.029381, 9.34813};
  static constexpr std::array<double, 4> abnormal{18.043417, 12.879204, 15.425252, 10.788003};
  static constexpr double default_variance = 1.0;
};

inline constexpr std::string_view kAudioVarianceWarning =
    "audio preset: observation variance of reconstruction errors is not known; "
    "using the configured sigma2 (default 1.0)";

CustomInstance audio_preset();

/// Canonical basis vectors e_0..e_{n-1}.
template <typename Scalar = double>
std::vector<Parameter<Scalar>> isolated_parameters(int n) {
  if (n < 1) throw config_error("isolated_parameters: n must be >= 1");
  std::vector<Parameter<Scalar>> params;
  params.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) params.push_back({i, Vector<Scalar>::Unit(n, i)});
  return params;
}

/// All-ones windows {j, ..., j+k-1} for j = 0..n-k.
template <typename Scalar = double>
std::vector<Parameter<Scalar>> structured_parameters(int n, int k) {
  if (n < 1 || k < 1 || k > n) throw config_error("structured_parameters: need 1 <= k <= n");
  std::vector<Parameter<Scalar>> params;
  for (int j = 0; j + k <= n; ++j) {
    Vector<Scalar> mean = Vector<Scalar>::Zero(n);
    mean.segment(j, k).setOnes();
    params.push_back({j, std::move(mean)});
  }
  return params;
}

template <typename Scalar = double>
std::vector<Action<Scalar>> diffuse_actions(int n, int k) {
  if (n < 1 || k < 1 || k > n) throw config_error("diffuse_actions: need 1 <= k <= n");
  std::vector<Action<Scalar>> actions;
  for (int j = 0; j + k <= n; ++j) {
    Vector<Scalar> support = Vector<Scalar>::Zero(n);
    support.segment(j, k).setOnes();
    actions.push_back(Action<Scalar>::from_support(j, std::move(support)));
  }
  return actions;
}

template <typename Scalar = double>
std::vector<Action<Scalar>> pointy_actions(int n) {
  return diffuse_actions<Scalar>(n, 1);
}

template <typename Scalar = double>
ProblemInstance<Scalar> build_instance(const ScenarioSpec& spec) {
  spec.validate();
  const int n = spec.n;
  const auto sigma2 = static_cast<Scalar>(spec.sigma2);
  switch (spec.kind) {
    case ScenarioKind::IsolatedPointy:
      return {{n, sigma2}, {0, Vector<Scalar>::Zero(n)}, isolated_parameters<Scalar>(n), pointy_actions<Scalar>(n)};
    case ScenarioKind::IsolatedDiffuse:
      return {{n, sigma2}, {0, Vector<Scalar>::Zero(n)}, isolated_parameters<Scalar>(n),
              diffuse_actions<Scalar>(n, spec.k)};
    case ScenarioKind::StructuredPointy:
      return {{n, sigma2}, {0, Vector<Scalar>::Zero(n)}, structured_parameters<Scalar>(n, spec.k),
              pointy_actions<Scalar>(n)};
    case ScenarioKind::StructuredDiffuse:
      return {{n, sigma2}, {0, Vector<Scalar>::Zero(n)}, structured_parameters<Scalar>(n, spec.k),
              diffuse_actions<Scalar>(n, spec.k)};
    case ScenarioKind::Custom:
      break;
  }

  const bool audio = spec.preset && *spec.preset == "audio";
  const CustomInstance custom = audio ? audio_preset() : *spec.custom;
  const auto dim = static_cast<Eigen::Index>(custom.theta0.size());
  const auto to_vector = [dim](const std::vector<double>& values, const std::string& what) {
    if (static_cast<Eigen::Index>(values.size()) != dim) throw config_error(what + " has wrong length");
    Vector<Scalar> v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = static_cast<Scalar>(values[static_cast<std::size_t>(i)]);
    return v;
  };

  std::vector<Parameter<Scalar>> thetas;
  for (std::size_t i = 0; i < custom.thetas1.size(); ++i) {
    thetas.push_back({static_cast<int>(i), to_vector(custom.thetas1[i], "post-change parameter " + std::to_string(i))});
  }
  std::vector<Action<Scalar>> actions;
  for (std::size_t i = 0; i < custom.action_supports.size(); ++i) {
    Vector<Scalar> support = Vector<Scalar>::Zero(dim);
    for (int node : custom.action_supports[i]) {
      if (node < 0 || node >= dim) {
        throw config_error("action " + std::to_string(i) + " references node " + std::to_string(node) +
                           " outside [0, " + std::to_string(dim) + ")");
      }
      support[node] = Scalar(1);
    }
    actions.push_back(Action<Scalar>::from_support(static_cast<int>(i), std::move(support)));
  }
  std::optional<Vector<Scalar>> pi;
  if (custom.explore_dist) {
    Vector<Scalar> p(static_cast<Eigen::Index>(custom.explore_dist->size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = static_cast<Scalar>((*custom.explore_dist)[static_cast<std::size_t>(i)]);
    pi = std::move(p);
  }

  ProblemInstance<Scalar> inst({dim, sigma2}, {0, to_vector(custom.theta0, "theta0")}, std::move(thetas),
                               std::move(actions), std::move(pi));
  if (audio) inst.add_warning(std::string(kAudioVarianceWarning));
  return inst;
}

}  // namespace bqcd

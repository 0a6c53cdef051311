#include "bqcd/scenarios.hpp"

namespace bqcd {

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::IsolatedPointy: return "IsolatedPointy";
    case ScenarioKind::IsolatedDiffuse: return "IsolatedDiffuse";
    case ScenarioKind::StructuredPointy: return "StructuredPointy";
    case ScenarioKind::StructuredDiffuse: return "StructuredDiffuse";
    case ScenarioKind::Custom: return "Custom";
  }
  return "?";
}

ScenarioKind scenario_kind_from_string(std::string_view name) {
  for (auto k : {ScenarioKind::IsolatedPointy, ScenarioKind::IsolatedDiffuse, ScenarioKind::StructuredPointy,
                 ScenarioKind::StructuredDiffuse, ScenarioKind::Custom}) {
    if (name == to_string(k)) return k;
  }
  throw config_error("unknown scenario kind '" + std::string(name) + "'");
}

void ScenarioSpec::validate() const {
  if (!(sigma2 > 0.0)) throw config_error("scenario.sigma2 must be positive");
  if (kind == ScenarioKind::Custom) {
    if (preset) {
      if (*preset != "audio") throw config_error("scenario.preset: unknown preset '" + *preset + "'");
      if (custom) throw config_error("scenario: give either preset or custom, not both");
      return;
    }
    if (!custom) throw config_error("scenario.custom is required for kind Custom");
    return;
  }
  if (preset) throw config_error("scenario.preset is only valid for kind Custom");
  if (n < 1) throw config_error("scenario.n must be >= 1");
  const bool uses_k = kind != ScenarioKind::IsolatedPointy;
  if (uses_k && (k < 1 || k > n)) throw config_error("scenario.k must satisfy 1 <= k <= n");
}

CustomInstance audio_preset() {
  CustomInstance out;
  out.theta0.assign(AudioMeans::normal.begin(), AudioMeans::normal.end());
  for (std::size_t i = 0; i < AudioMeans::normal.size(); ++i) {
    std::vector<double> theta = out.theta0;
    theta[i] = AudioMeans::abnormal[i];
    out.thetas1.push_back(std::move(theta));
    out.action_supports.push_back({static_cast<int>(i)});
  }
  return out;
}

}  // namespace bqcd

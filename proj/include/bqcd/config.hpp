#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"

#include "bqcd/harness.hpp"

namespace bqcd {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "1.0.0";

// Experiment configuration file: one JSON object.
//
//   {
//     "schema_version": 1,
//     "scenario": {
//       "kind": "IsolatedPointy" | "IsolatedDiffuse" | "StructuredPointy"
//               | "StructuredDiffuse" | "Custom",
//       "n": 10, "k": 5, "sigma2": 0.5,
//       "preset": "audio",                      // Custom only
//       "custom": {                             // Custom only
//         "theta0": [..], "thetas1": [[..], ..],
//         "actions": [[node, ..], ..],          // 0-based supports
//         "explore_dist": [..]                  // optional, default uniform
//       }
//     },
//     "nu": 40 | "infinity",
//     "theta_star": 3 | "sweep-all",
//     "horizon": 5000, "runs": 500, "seed": 0,
//     "m": 1000, "alpha": 0.01, "log_beta": 30.0,
//     "env_noise_variance": 0.5,
//     "histogram_bin_width": 10,
//     "epsilon": 0.2,                           // used when "detectors" is absent
//     "detectors": [{"policy": "EpsGcdFull", "epsilon": 0.2}, ..]
//   }
//
// Only "scenario.kind" is required. sigma2 defaults to 0.5, or 1.0 for the
// audio preset. Unknown keys are rejected.

ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::filesystem::path& path);

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);
std::string serialize_config(const ExperimentConfig& cfg);

/// Per-run CSV. Leading '#' lines carry the schema version and the
/// effective configuration; columns are
///   run,detector,nu,theta_star_id,tau,delay,censored
void write_runs_csv(std::ostream& os, const nlohmann::ordered_json& config, const MonteCarloResult& result,
                    const std::vector<std::string>& labels);

nlohmann::ordered_json aggregate_to_json(const nlohmann::ordered_json& config, const MonteCarloResult& result);

/// Columns: detector,bin_lower,bin_upper,count
void write_histogram_csv(std::ostream& os, const nlohmann::ordered_json& config, const MonteCarloResult& result,
                         const std::vector<std::string>& labels, long long width);

}  // namespace bqcd

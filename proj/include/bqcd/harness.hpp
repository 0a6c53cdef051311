#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bqcd/detectors.hpp"
#include "bqcd/scenarios.hpp"

namespace bqcd {

struct DetectorSpec {
  Policy policy = Policy::EpsGcdFull;
  double epsilon = 0.2;

  std::string label() const;
  bool operator==(const DetectorSpec&) const = default;
};

/// Oracle, eps-GCD (full-data MLE), eps-GCD (exploration-data MLE), URS.
std::vector<DetectorSpec> default_detectors(double epsilon = 0.2);

/// How the post-change parameter is chosen for each run. Under no change
/// the choice only sets the Oracle's target.
struct ThetaStarChoice {
  enum class Mode { Fixed, SweepAll };
  Mode mode = Mode::SweepAll;
  int id = 0;

  static ThetaStarChoice fixed(int id) { return {Mode::Fixed, id}; }
  static ThetaStarChoice sweep_all() { return {Mode::SweepAll, 0}; }
  bool operator==(const ThetaStarChoice&) const = default;
};

struct ExperimentConfig {
  ScenarioSpec scenario;
  std::optional<long long> nu = 40;  // nullopt: no change
  ThetaStarChoice theta_star = ThetaStarChoice::sweep_all();
  long long horizon = 5000;
  long long runs = 500;
  std::vector<DetectorSpec> detectors = default_detectors();
  std::uint64_t master_seed = 0;
  // False-alarm tuple used for log(beta) when log_beta is not given.
  long long m = 1000;
  double alpha = 0.01;
  std::optional<double> log_beta;
  std::optional<double> env_noise_variance;
  long long histogram_bin_width = 10;

  void validate() const;
  double resolve_log_beta(const Instance& inst) const;
  bool operator==(const ExperimentConfig&) const = default;
};

struct RunRecord {
  long long run = 0;
  int detector = 0;
  std::optional<long long> nu;
  int theta_star_id = 0;
  std::optional<long long> tau;  // nullopt: censored
  std::optional<long long> delay;  // (tau - nu)^+, finite nu and uncensored only

  bool censored() const noexcept { return !tau.has_value(); }
  bool operator==(const RunRecord&) const = default;
};

/// Per-detector aggregates. Standard deviations use the sample (n - 1)
/// convention; censored runs are excluded from every mean and deviation.
struct DetectorStats {
  std::string label;
  long long runs = 0;
  long long censored_count = 0;
  double mean_delay = 0.0;
  double std_delay = 0.0;
  double mean_tau = 0.0;
  double std_tau = 0.0;
  bool valid = true;
  std::string diagnostic;

  /// Standard error of mean_delay.
  double delay_standard_error() const;
};

struct MonteCarloResult {
  double log_beta = 0.0;
  std::vector<DetectorStats> stats;
  std::vector<RunRecord> records;  // run-major, detector-minor
  std::vector<std::string> warnings;
};

/// Runs every detector `cfg.runs` times. Run i of detector d uses seed
/// derive_seed(master_seed, i, d); theta* for run i comes from
/// derive_seed(master_seed, i, kThetaStarStream) so all detectors face the
/// same change. Output does not depend on `workers`.
MonteCarloResult run_monte_carlo(const ExperimentConfig& cfg, int workers = 1);

DetectorStats aggregate(const std::vector<RunRecord>& records, int detector, const std::string& label);

struct FalseAlarmEstimate {
  std::string label;
  long long runs = 0;
  long long early_stops = 0;
  double p_hat = 0.0;
  double ci = 0.0;  // 95% normal-approximation half-width
};

/// Fraction of no-change runs with tau < m, per detector.
std::vector<FalseAlarmEstimate> estimate_false_alarm(const ExperimentConfig& cfg, long long m, int workers = 1);

/// Repeats run_monte_carlo for each changepoint.
std::vector<MonteCarloResult> changepoint_sweep(const ExperimentConfig& cfg, const std::vector<long long>& nus,
                                                int workers = 1);

struct HistogramBin {
  long long lower = 0;  // bin covers [lower, lower + width)
  long long count = 0;
};

/// Fixed-width histogram of stopping times for one detector, censored runs
/// excluded. Bins start at 0 and run through the largest observed tau.
std::vector<HistogramBin> stopping_time_histogram(const MonteCarloResult& result, int detector, long long width);

// ---------------------------------------------------------------------------
// Table reproduction

enum class Calibration { Wald, Theorem };

struct PaperCell {
  double mean = 0.0;
  double sd = 0.0;
};

inline constexpr std::array<int, 4> kTableSizes{10, 15, 20, 25};
inline constexpr int kTableWidth = 5;
inline constexpr long long kTableChangepoint = 40;

/// Published mean and standard deviation per [size][column], columns in
/// default_detectors() order.
using PaperTable = std::array<std::array<PaperCell, 4>, 4>;
const PaperTable& paper_table(int table);
ScenarioKind table_scenario(int table);

struct TableRequest {
  int table = 1;
  long long runs = 500;
  Calibration calibration = Calibration::Wald;
  long long m = 1000;
  double alpha = 0.01;
  std::uint64_t seed = 0;
  long long horizon = 5000;
  double epsilon = 0.2;
};

struct TableResult {
  TableRequest request;
  std::vector<ExperimentConfig> configs;  // one per size
  std::vector<MonteCarloResult> cells;    // one per size
};

/// Wald calibration: log(beta) = mu* of the table's scenario times the
/// published size-10 Oracle mean, so the simulated Oracle column lands on
/// the published one.
double wald_log_beta(int table);

TableResult reproduce_table(const TableRequest& request, int workers = 1);

/// Paper-layout text table: one row per size, "mean ± std" per detector.
std::string format_table(const TableResult& result);

}  // namespace bqcd

#include "bqcd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace bqcd {

namespace {

template <typename Fn>
void parallel_for(long long count, int workers, Fn&& fn) {
  const long long threads = std::clamp<long long>(workers, 1, std::max<long long>(count, 1));
  if (threads == 1) {
    for (long long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (long long t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (long long i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(xs.size());
}

}  // namespace

std::string DetectorSpec::label() const {
  switch (policy) {
    case Policy::Oracle: return "Oracle";
    case Policy::Urs: return "URS";
    case Policy::EpsGcdFull:
    case Policy::EpsGcdTheory: {
      std::ostringstream os;
      os << (policy == Policy::EpsGcdFull ? "eps-GCD(Full)" : "eps-GCD(Theory)");
      if (epsilon != 0.2) os << "[eps=" << epsilon << "]";
      return os.str();
    }
  }
  return "?";
}

std::vector<DetectorSpec> default_detectors(double epsilon) {
  return {{Policy::Oracle, epsilon}, {Policy::EpsGcdFull, epsilon}, {Policy::EpsGcdTheory, epsilon}, {Policy::Urs, epsilon}};
}

void ExperimentConfig::validate() const {
  scenario.validate();
  if (horizon < 1) throw config_error("horizon must be >= 1");
  if (runs < 1) throw config_error("runs must be >= 1");
  if (detectors.empty()) throw config_error("detectors must not be empty");
  for (const auto& d : detectors) {
    if (!(d.epsilon >= 0.0 && d.epsilon <= 1.0)) throw config_error("detector epsilon must lie in [0, 1]");
  }
  if (nu) {
    if (*nu < 1) throw config_error("nu must be >= 1");
    if (*nu >= horizon) throw config_error("horizon must exceed nu");
  }
  if (theta_star.mode == ThetaStarChoice::Mode::Fixed && theta_star.id < 0) {
    throw config_error("theta_star must be a non-negative parameter id");
  }
  if (log_beta) {
    if (!(*log_beta > 0.0) || !std::isfinite(*log_beta)) throw config_error("log_beta must be positive and finite");
  } else {
    if (m < 1) throw config_error("m must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("alpha must lie in (0, 1)");
  }
  if (env_noise_variance && !(*env_noise_variance >= 0.0)) {
    throw config_error("env_noise_variance must be >= 0");
  }
  if (histogram_bin_width < 1) throw config_error("histogram_bin_width must be >= 1");
}

double ExperimentConfig::resolve_log_beta(const Instance& inst) const {
  if (log_beta) return *log_beta;
  return threshold_from_false_alarm(m, alpha, static_cast<long long>(inst.num_params()));
}

double DetectorStats::delay_standard_error() const {
  const long long n = runs - censored_count;
  return n > 0 ? std_delay / std::sqrt(static_cast<double>(n)) : std::numeric_limits<double>::infinity();
}

DetectorStats aggregate(const std::vector<RunRecord>& records, int detector, const std::string& label) {
  DetectorStats stats;
  stats.label = label;
  std::vector<double> delays;
  std::vector<double> taus;
  for (const auto& r : records) {
    if (r.detector != detector) continue;
    ++stats.runs;
    if (r.censored()) {
      ++stats.censored_count;
      continue;
    }
    taus.push_back(static_cast<double>(*r.tau));
    if (r.delay) delays.push_back(static_cast<double>(*r.delay));
  }
  stats.mean_tau = mean_of(taus);
  stats.std_tau = sample_std(taus, stats.mean_tau);
  stats.mean_delay = mean_of(delays);
  stats.std_delay = sample_std(delays, stats.mean_delay);
  if (stats.runs > 0 && stats.censored_count == stats.runs) {
    stats.valid = false;
    stats.diagnostic = "all " + std::to_string(stats.runs) + " runs censored at the horizon";
  }
  return stats;
}

MonteCarloResult run_monte_carlo(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  const Instance inst = build_instance<double>(cfg.scenario);
  const auto num_params = static_cast<int>(inst.num_params());
  if (cfg.theta_star.mode == ThetaStarChoice::Mode::Fixed && cfg.theta_star.id >= num_params) {
    throw config_error("theta_star " + std::to_string(cfg.theta_star.id) + " is out of range");
  }

  MonteCarloResult result;
  result.log_beta = cfg.resolve_log_beta(inst);
  result.warnings = inst.warnings();

  const auto num_detectors = static_cast<int>(cfg.detectors.size());
  std::vector<DetectorConfig> detector_configs;
  for (const auto& d : cfg.detectors) detector_configs.push_back({d.policy, d.epsilon, result.log_beta, std::nullopt});

  RunOptions options;
  options.horizon = cfg.horizon;
  options.env_noise_variance = cfg.env_noise_variance;

  result.records.resize(static_cast<std::size_t>(cfg.runs * num_detectors));
  parallel_for(cfg.runs, workers, [&](long long run) {
    const auto urun = static_cast<std::uint64_t>(run);
    int theta_star = cfg.theta_star.id;
    if (cfg.theta_star.mode == ThetaStarChoice::Mode::SweepAll) {
      RandomStream pick(derive_seed(cfg.master_seed, urun, kThetaStarStream));
      theta_star = static_cast<int>(pick.index(inst.num_params()));
    }
    Change change;
    if (cfg.nu) change = {cfg.nu, theta_star};
    for (int d = 0; d < num_detectors; ++d) {
      DetectorConfig dc = detector_configs[static_cast<std::size_t>(d)];
      dc.oracle_target = theta_star;
      const RunResult out =
          run_until_stop(dc, inst, change, options, derive_seed(cfg.master_seed, urun, static_cast<std::uint64_t>(d)));
      RunRecord& rec = result.records[static_cast<std::size_t>(run * num_detectors + d)];
      rec.run = run;
      rec.detector = d;
      rec.nu = cfg.nu;
      rec.theta_star_id = theta_star;
      rec.tau = out.tau;
      if (out.tau && cfg.nu) rec.delay = std::max(*out.tau - *cfg.nu, 0LL);
    }
  });

  for (int d = 0; d < num_detectors; ++d) {
    result.stats.push_back(aggregate(result.records, d, cfg.detectors[static_cast<std::size_t>(d)].label()));
  }
  return result;
}

std::vector<FalseAlarmEstimate> estimate_false_alarm(const ExperimentConfig& cfg, long long m, int workers) {
  if (cfg.nu) throw config_error("false-alarm estimation requires nu = infinity");
  if (m < 1) throw config_error("m must be >= 1");
  ExperimentConfig no_change = cfg;
  // A stop at round t < m is decided by round m - 1.
  no_change.horizon = std::min(cfg.horizon, std::max(m - 1, 1LL));
  const MonteCarloResult mc = run_monte_carlo(no_change, workers);

  std::vector<FalseAlarmEstimate> out;
  for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
    FalseAlarmEstimate est;
    est.label = cfg.detectors[d].label();
    for (const auto& r : mc.records) {
      if (r.detector != static_cast<int>(d)) continue;
      ++est.runs;
      if (r.tau && *r.tau < m) ++est.early_stops;
    }
    est.p_hat = static_cast<double>(est.early_stops) / static_cast<double>(est.runs);
    est.ci = 1.96 * std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(est.runs));
    out.push_back(est);
  }
  return out;
}

std::vector<MonteCarloResult> changepoint_sweep(const ExperimentConfig& cfg, const std::vector<long long>& nus,
                                                int workers) {
  if (nus.empty()) throw config_error("changepoint sweep needs at least one nu");
  std::vector<MonteCarloResult> out;
  for (long long nu : nus) {
    if (nu > cfg.horizon) {
      throw config_error("nu = " + std::to_string(nu) + " exceeds the horizon " + std::to_string(cfg.horizon));
    }
    ExperimentConfig at = cfg;
    at.nu = nu;
    out.push_back(run_monte_carlo(at, workers));
  }
  return out;
}

std::vector<HistogramBin> stopping_time_histogram(const MonteCarloResult& result, int detector, long long width) {
  if (width < 1) throw config_error("histogram bin width must be >= 1");
  std::vector<HistogramBin> bins;
  for (const auto& r : result.records) {
    if (r.detector != detector || r.censored()) continue;
    const auto bin = static_cast<std::size_t>(*r.tau / width);
    while (bins.size() <= bin) bins.push_back({static_cast<long long>(bins.size()) * width, 0});
    ++bins[bin].count;
  }
  return bins;
}

// ---------------------------------------------------------------------------

const PaperTable& paper_table(int table) {
  static const std::array<PaperTable, 4> tables{{
      {{{{{30, 5}, {98, 62}, {112, 74}, {306, 76}}},
        {{{31, 5}, {129, 95}, {158, 119}, {460, 115}}},
        {{{31, 5}, {163, 128}, {196, 156}, {616, 153}}},
        {{{31, 5}, {191, 154}, {253, 216}, {764, 194}}}}},
      {{{{{249, 35}, {277, 40}, {321, 49}, {497, 74}}},
        {{{250, 35}, {281, 40}, {326, 54}, {549, 81}}},
        {{{249, 35}, {297, 42}, {370, 84}, {998, 151}}},
        {{{249, 35}, {324, 52}, {509, 237}, {1044, 157}}}}},
      {{{{{150, 27}, {192, 41}, {289, 124}, {299, 57}}},
        {{{149, 27}, {210, 49}, {340, 175}, {448, 85}}},
        {{{150, 27}, {204, 44}, {350, 213}, {597, 118}}},
        {{{149, 27}, {213, 48}, {395, 246}, {746, 145}}}}},
      {{{{{51, 7}, {64, 12}, {90, 21}, {96, 14}}},
        {{{51, 7}, {71, 13}, {100, 27}, {163, 26}}},
        {{{51, 7}, {74, 14}, {113, 35}, {237, 40}}},
        {{{51, 7}, {80, 17}, {126, 46}, {310, 52}}}}},
  }};
  if (table < 1 || table > 4) throw config_error("table id must be 1, 2, 3 or 4");
  return tables[static_cast<std::size_t>(table - 1)];
}

ScenarioKind table_scenario(int table) {
  switch (table) {
    case 1: return ScenarioKind::IsolatedPointy;
    case 2: return ScenarioKind::IsolatedDiffuse;
    case 3: return ScenarioKind::StructuredPointy;
    case 4: return ScenarioKind::StructuredDiffuse;
    default: throw config_error("table id must be 1, 2, 3 or 4");
  }
}

double wald_log_beta(int table) {
  ScenarioSpec spec;
  spec.kind = table_scenario(table);
  spec.n = kTableSizes.front();
  spec.k = kTableWidth;
  const Instance inst = build_instance<double>(spec);
  return max_divergence(inst, inst.thetas1().front()) * paper_table(table)[0][0].mean;
}

TableResult reproduce_table(const TableRequest& request, int workers) {
  const ScenarioKind kind = table_scenario(request.table);
  if (request.runs < 1) throw config_error("runs must be >= 1");

  TableResult result;
  result.request = request;
  for (std::size_t s = 0; s < kTableSizes.size(); ++s) {
    ExperimentConfig cfg;
    cfg.scenario.kind = kind;
    cfg.scenario.n = kTableSizes[s];
    cfg.scenario.k = kTableWidth;
    cfg.scenario.sigma2 = 0.5;
    cfg.nu = kTableChangepoint;
    cfg.theta_star = ThetaStarChoice::sweep_all();
    cfg.horizon = request.horizon;
    cfg.runs = request.runs;
    cfg.detectors = default_detectors(request.epsilon);
    cfg.master_seed = derive_seed(request.seed, static_cast<std::uint64_t>(request.table),
                                  static_cast<std::uint64_t>(kTableSizes[s]));
    cfg.m = request.m;
    cfg.alpha = request.alpha;
    if (request.calibration == Calibration::Wald) cfg.log_beta = wald_log_beta(request.table);
    result.cells.push_back(run_monte_carlo(cfg, workers));
    result.configs.push_back(std::move(cfg));
  }
  return result;
}

std::string format_table(const TableResult& result) {
  const auto& cfg0 = result.configs.front();
  std::ostringstream os;
  os << "Table " << result.request.table << ": " << to_string(cfg0.scenario.kind) << ", nu = " << kTableChangepoint
     << ", delay (tau - nu)^+ mean ± std over " << result.request.runs << " runs\n";
  os << std::left << std::setw(6) << "Size";
  for (const auto& d : cfg0.detectors) os << std::setw(24) << d.label();
  os << std::setw(12) << "log_beta" << '\n';
  os << std::fixed;
  for (std::size_t s = 0; s < result.cells.size(); ++s) {
    os << std::setw(6) << result.configs[s].scenario.n;
    for (const auto& st : result.cells[s].stats) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(0) << st.mean_delay << " ± " << st.std_delay;
      if (st.censored_count > 0) cell << " (" << st.censored_count << " cens.)";
      // setw counts bytes and "±" takes two.
      os << std::setw(25) << cell.str() << ' ';
    }
    os << std::setprecision(4) << result.cells[s].log_beta << '\n';
  }
  return os.str();
}

}  // namespace bqcd

#include "bqcd/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "bqcd/bounds.hpp"
#include "bqcd/config.hpp"

namespace bqcd {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long long> runs;
  int workers = 1;
  std::string out_dir = ".";
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required,
                std::vector<std::string> formats = {"csv", "json"}) {
  flags.format = formats.front();
  auto* config = cmd->add_option("--config", flags.config_path, "Experiment configuration file (JSON)");
  if (config_required) config->required();
  cmd->add_option("--seed", flags.seed, "Master seed (overrides the config)");
  cmd->add_option("--runs", flags.runs, "Monte Carlo runs (overrides the config)");
  cmd->add_option("--workers", flags.workers, "Worker threads; results do not depend on this")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", flags.out_dir, "Directory for output files");
  cmd->add_option("--format", flags.format, "Summary format on stdout")->check(CLI::IsMember(formats));
}

ExperimentConfig load_config(const CommonFlags& flags) {
  ExperimentConfig cfg = parse_config(flags.config_path);
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.runs) cfg.runs = *flags.runs;
  cfg.validate();
  return cfg;
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error("cannot open " + path.string() + " for writing");
  writer(os);
  os.flush();
  if (!os) throw io_error("failed writing " + path.string());
}

std::vector<std::string> labels_of(const ExperimentConfig& cfg) {
  std::vector<std::string> labels;
  for (const auto& d : cfg.detectors) labels.push_back(d.label());
  return labels;
}

void print_stats(std::ostream& out, const std::string& format, const json& config, const MonteCarloResult& result) {
  if (format == "json") {
    out << aggregate_to_json(config, result).dump(2) << '\n';
    return;
  }
  out << "detector,runs,censored,mean_delay,std_delay,mean_tau,std_tau\n";
  for (const auto& s : result.stats) {
    out << s.label << ',' << s.runs << ',' << s.censored_count << ',' << s.mean_delay << ',' << s.std_delay << ','
        << s.mean_tau << ',' << s.std_tau << '\n';
  }
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

// --- simulate ---------------------------------------------------------------

int cmd_simulate(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = load_config(flags);
  const MonteCarloResult result = run_monte_carlo(cfg, flags.workers);
  print_warnings(err, result.warnings);
  const json config = config_to_json(cfg);
  const auto labels = labels_of(cfg);
  const fs::path dir = prepare_out_dir(flags.out_dir);
  write_file(dir / "runs.csv", [&](std::ostream& os) { write_runs_csv(os, config, result, labels); });
  write_file(dir / "aggregate.json", [&](std::ostream& os) { os << aggregate_to_json(config, result).dump(2) << '\n'; });
  write_file(dir / "histogram.csv",
             [&](std::ostream& os) { write_histogram_csv(os, config, result, labels, cfg.histogram_bin_width); });
  print_stats(out, flags.format, config, result);
  for (const auto& s : result.stats) {
    if (!s.valid) throw simulation_error(s.label + ": " + s.diagnostic);
  }
  return exit_success;
}

// --- tables -----------------------------------------------------------------

struct TablesFlags {
  int table = 1;
  std::string calibration = "wald";
  long long m = 1000;
  double alpha = 0.01;
  long long horizon = 5000;
  double epsilon = 0.2;
};

int cmd_tables(const CommonFlags& flags, const TablesFlags& tf, std::ostream& out) {
  TableRequest request;
  request.table = tf.table;
  request.runs = flags.runs.value_or(500);
  request.seed = flags.seed.value_or(0);
  request.calibration = tf.calibration == "theorem" ? Calibration::Theorem : Calibration::Wald;
  request.m = tf.m;
  request.alpha = tf.alpha;
  request.horizon = tf.horizon;
  request.epsilon = tf.epsilon;
  if (request.runs < 1) throw config_error("--runs must be >= 1");
  table_scenario(request.table);

  const TableResult result = reproduce_table(request, flags.workers);
  const fs::path dir = prepare_out_dir(flags.out_dir);
  const std::string stem = "table_" + std::to_string(request.table);
  const std::string text = format_table(result);

  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["tool_version"] = std::string(kToolVersion);
  meta["table"] = request.table;
  meta["calibration"] = tf.calibration;
  meta["delay_definition"] = "(tau - nu)^+, censored runs excluded";
  meta["std_convention"] = "sample (n-1)";
  meta["seed"] = request.seed;
  json cells = json::array();
  for (std::size_t s = 0; s < result.cells.size(); ++s) {
    json cell;
    cell["size"] = result.configs[s].scenario.n;
    cell["log_beta"] = result.cells[s].log_beta;
    cell["master_seed"] = result.configs[s].master_seed;
    cell["aggregate"] = aggregate_to_json(config_to_json(result.configs[s]), result.cells[s]);
    cells.push_back(std::move(cell));
  }
  meta["cells"] = std::move(cells);

  write_file(dir / (stem + ".txt"), [&](std::ostream& os) { os << text; });
  write_file(dir / (stem + "_runs.csv"), [&](std::ostream& os) {
    os << "# schema_version: " << kSchemaVersion << '\n';
    for (std::size_t s = 0; s < result.cells.size(); ++s) {
      os << "# config[size=" << result.configs[s].scenario.n << "]: " << config_to_json(result.configs[s]).dump() << '\n';
    }
    os << "size,run,detector,nu,theta_star_id,tau,delay,censored\n";
    for (std::size_t s = 0; s < result.cells.size(); ++s) {
      const auto labels = labels_of(result.configs[s]);
      for (const auto& r : result.cells[s].records) {
        os << result.configs[s].scenario.n << ',' << r.run << ',' << labels[static_cast<std::size_t>(r.detector)] << ','
           << *r.nu << ',' << r.theta_star_id << ',';
        if (r.tau) os << *r.tau;
        os << ',';
        if (r.delay) os << *r.delay;
        os << ',' << (r.censored() ? 1 : 0) << '\n';
      }
    }
  });
  write_file(dir / (stem + "_meta.json"), [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
  out << text;
  return exit_success;
}

// --- bounds -----------------------------------------------------------------

struct BoundsFlags {
  std::string scenario = "IsolatedPointy";
  int n = 10;
  int k = 5;
  std::optional<double> sigma2;
  std::optional<std::string> preset;
  double alpha = 0.01;
  long long m = 1000;
  double epsilon = 0.2;
  std::optional<double> log_beta;
  std::optional<int> theta_star;
  std::optional<long long> nu;
};

int cmd_bounds(const CommonFlags& flags, const BoundsFlags& bf, std::ostream& out, std::ostream& err) {
  ScenarioSpec spec;
  if (!flags.config_path.empty()) {
    spec = parse_config(flags.config_path).scenario;
  } else {
    spec.kind = scenario_kind_from_string(bf.scenario);
    spec.n = bf.n;
    spec.k = bf.k;
    spec.preset = bf.preset;
    if (spec.preset) spec.kind = ScenarioKind::Custom;
    spec.sigma2 = bf.sigma2.value_or(spec.preset ? AudioMeans::default_variance : 0.5);
  }
  const Instance inst = build_instance<double>(spec);
  print_warnings(err, inst.warnings());

  BoundInputs in;
  in.alpha = bf.alpha;
  in.m = bf.m;
  in.epsilon = bf.epsilon;
  in.log_beta = bf.log_beta ? *bf.log_beta : threshold_from_false_alarm(bf.m, bf.alpha, static_cast<long long>(inst.num_params()));
  in = with_model_constants(in, inst);

  json report;
  report["schema_version"] = kSchemaVersion;
  report["tool_version"] = std::string(kToolVersion);
  json scenario;
  scenario["kind"] = std::string(to_string(spec.kind));
  scenario["n"] = spec.n;
  scenario["k"] = spec.k;
  scenario["sigma2"] = spec.sigma2;
  if (spec.preset) scenario["preset"] = *spec.preset;
  report["scenario"] = scenario;
  report["alpha"] = in.alpha;
  report["m"] = in.m;
  report["epsilon"] = in.epsilon;
  report["log_beta"] = in.log_beta;
  report["r"] = in.r;
  report["d_max"] = in.d_max;
  report["warnings"] = inst.warnings();

  std::vector<int> targets;
  if (bf.theta_star) {
    if (*bf.theta_star < 0 || static_cast<std::size_t>(*bf.theta_star) >= inst.num_params()) {
      throw config_error("--theta-star is out of range");
    }
    targets.push_back(*bf.theta_star);
  } else {
    for (std::size_t p = 0; p < inst.num_params(); ++p) targets.push_back(static_cast<int>(p));
  }

  json entries = json::array();
  for (int id : targets) {
    const auto& theta_star = inst.thetas1()[static_cast<std::size_t>(id)];
    const UpperBound ub = upper_bound_delay(in, theta_star, inst);
    json e;
    e["theta_star"] = id;
    e["mu_star"] = ub.mu_star;
    e["most_informative_action"] = most_informative_action(inst, theta_star).id;
    e["lower_bound"] = lower_bound_delay(in, theta_star, inst);
    e["anytime_lower_bound"] = anytime_lower_bound(in, bf.nu.value_or(1), theta_star, inst);
    e["oracle_rate"] = oracle_rate(in.log_beta, theta_star, inst);
    e["gamma"] = ub.gamma;
    e["upper_bound"] = {{"total", ub.total}, {"first_term", ub.first_term}, {"learning_terms", ub.learning_terms}};
    json gaps = json::array();
    for (const auto& g : ub.gaps) {
      if (!g.competitor) continue;
      gaps.push_back({{"theta", g.theta_id}, {"gap", g.gap}, {"greedy_action", g.greedy_action},
                      {"learning_term", g.learning_term}});
    }
    e["gaps"] = std::move(gaps);
    entries.push_back(std::move(e));
  }
  report["bounds"] = std::move(entries);

  if (flags.format == "json") {
    out << report.dump(2) << '\n';
  } else {
    out << std::setprecision(6);
    out << "scenario " << to_string(spec.kind) << " n=" << spec.n << " sigma2=" << spec.sigma2 << '\n';
    out << "alpha=" << in.alpha << " m=" << in.m << " epsilon=" << in.epsilon << " log_beta=" << in.log_beta
        << " r=" << in.r << " d_max=" << in.d_max << '\n';
    out << "theta_star,mu_star,lower_bound,upper_total,upper_first,upper_learning,competitors\n";
    for (const auto& e : report["bounds"]) {
      out << e["theta_star"].get<int>() << ',' << e["mu_star"].get<double>() << ',' << e["lower_bound"].get<double>()
          << ',' << e["upper_bound"]["total"].get<double>() << ',' << e["upper_bound"]["first_term"].get<double>() << ','
          << e["upper_bound"]["learning_terms"].get<double>() << ',' << e["gaps"].size() << '\n';
    }
  }
  if (flags.out_dir != ".") {
    const fs::path dir = prepare_out_dir(flags.out_dir);
    write_file(dir / "bounds.json", [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  }
  return exit_success;
}

// --- false-alarm --------------------------------------------------------------

int cmd_false_alarm(const CommonFlags& flags, std::optional<long long> m_flag, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = load_config(flags);
  cfg.nu.reset();
  const long long m = m_flag.value_or(cfg.m);
  const Instance inst = build_instance<double>(cfg.scenario);
  print_warnings(err, inst.warnings());
  const double log_beta = cfg.resolve_log_beta(inst);
  const auto estimates = estimate_false_alarm(cfg, m, flags.workers);

  json report;
  report["schema_version"] = kSchemaVersion;
  report["tool_version"] = std::string(kToolVersion);
  report["config"] = config_to_json(cfg);
  report["m"] = m;
  report["log_beta"] = log_beta;
  json rows = json::array();
  for (const auto& e : estimates) {
    rows.push_back({{"label", e.label}, {"runs", e.runs}, {"early_stops", e.early_stops}, {"p_hat", e.p_hat}, {"ci95", e.ci}});
  }
  report["detectors"] = rows;
  const fs::path dir = prepare_out_dir(flags.out_dir);
  write_file(dir / "false_alarm.json", [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  if (flags.format == "json") {
    out << report.dump(2) << '\n';
  } else {
    out << "detector,runs,early_stops,p_hat,ci95\n";
    for (const auto& e : estimates) out << e.label << ',' << e.runs << ',' << e.early_stops << ',' << e.p_hat << ',' << e.ci << '\n';
  }
  return exit_success;
}

// --- sweep-nu -----------------------------------------------------------------

int cmd_sweep(const CommonFlags& flags, const std::vector<long long>& nus, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = load_config(flags);
  const auto results = changepoint_sweep(cfg, nus, flags.workers);
  if (!results.empty()) print_warnings(err, results.front().warnings);
  json report;
  report["schema_version"] = kSchemaVersion;
  report["tool_version"] = std::string(kToolVersion);
  report["config"] = config_to_json(cfg);
  json per_nu = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    ExperimentConfig at = cfg;
    at.nu = nus[i];
    per_nu.push_back({{"nu", nus[i]}, {"aggregate", aggregate_to_json(config_to_json(at), results[i])}});
  }
  report["sweep"] = per_nu;
  const fs::path dir = prepare_out_dir(flags.out_dir);
  write_file(dir / "sweep.json", [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  if (flags.format == "json") {
    out << report.dump(2) << '\n';
  } else {
    out << "nu,detector,runs,censored,mean_delay,std_delay\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      for (const auto& s : results[i].stats) {
        out << nus[i] << ',' << s.label << ',' << s.runs << ',' << s.censored_count << ',' << s.mean_delay << ','
            << s.std_delay << '\n';
      }
    }
  }
  return exit_success;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bandit quickest change detection: simulation, table reproduction and bounds"};
  app.name(args.empty() ? "bqcd" : args.front());
  app.require_subcommand(1);

  CommonFlags simulate_flags;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo experiment from a config file");
  add_common(simulate, simulate_flags, true);

  CommonFlags tables_flags;
  TablesFlags tf;
  auto* tables = app.add_subcommand("tables", "Reproduce one of the four synthetic tables");
  add_common(tables, tables_flags, false);
  tables->add_option("--table", tf.table, "Table id (1-4)")->required();
  tables->add_option("--calibration", tf.calibration, "Threshold calibration")->check(CLI::IsMember({"wald", "theorem"}));
  tables->add_option("--m", tf.m, "False-alarm horizon m (theorem calibration)");
  tables->add_option("--alpha", tf.alpha, "False-alarm level alpha (theorem calibration)");
  tables->add_option("--horizon", tf.horizon, "Simulation horizon");
  tables->add_option("--epsilon", tf.epsilon, "Exploration rate");

  CommonFlags bounds_flags;
  BoundsFlags bf;
  auto* bounds = app.add_subcommand("bounds", "Lower and upper delay bounds for an instance");
  add_common(bounds, bounds_flags, false, {"text", "json"});
  bounds->add_option("--scenario", bf.scenario, "Scenario kind");
  bounds->add_option("--n", bf.n, "Graph size");
  bounds->add_option("--k", bf.k, "Anomaly / probe width");
  bounds->add_option("--sigma2", bf.sigma2, "Noise variance");
  bounds->add_option("--preset", bf.preset, "Custom preset (audio)");
  bounds->add_option("--alpha", bf.alpha, "False-alarm level alpha");
  bounds->add_option("--m", bf.m, "False-alarm horizon m");
  bounds->add_option("--epsilon", bf.epsilon, "Exploration rate");
  bounds->add_option("--log-beta", bf.log_beta, "Stopping threshold log(beta)");
  bounds->add_option("--theta-star", bf.theta_star, "Report only this post-change parameter");
  bounds->add_option("--nu", bf.nu, "Changepoint for the anytime lower bound");

  CommonFlags fa_flags;
  std::optional<long long> fa_m;
  auto* false_alarm = app.add_subcommand("false-alarm", "Estimate P(tau < m) under no change");
  add_common(false_alarm, fa_flags, true);
  false_alarm->add_option("--m", fa_m, "False-alarm horizon m");

  CommonFlags sweep_flags;
  std::vector<long long> nus;
  auto* sweep = app.add_subcommand("sweep-nu", "Repeat an experiment over several changepoints");
  add_common(sweep, sweep_flags, true);
  sweep->add_option("--nus", nus, "Changepoints")->delimiter(',')->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_success;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_success;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_config_error;
  }

  try {
    if (*simulate) return cmd_simulate(simulate_flags, out, err);
    if (*tables) return cmd_tables(tables_flags, tf, out);
    if (*bounds) return cmd_bounds(bounds_flags, bf, out, err);
    if (*false_alarm) return cmd_false_alarm(fa_flags, fa_m, out, err);
    if (*sweep) return cmd_sweep(sweep_flags, nus, out, err);
  } catch (const config_error& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config_error;
  } catch (const simulation_error& e) {
    err << "simulation error: " << e.what() << '\n';
    return exit_simulation_error;
  } catch (const io_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return exit_io_error;
  }
  return exit_config_error;
}

}  // namespace bqcd

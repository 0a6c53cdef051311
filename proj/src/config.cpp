#include "bqcd/config.hpp"

#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace bqcd {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw config_error("config field '" + field + "': " + what);
}

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) field_error(where.empty() ? key : where + "." + key, "unknown key");
  }
}

template <typename T>
T get_as(const json& obj, const std::string& key, const std::string& field) {
  const json& v = obj.at(key);
  if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) field_error(field, "expected a number");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) field_error(field, "expected an integer");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) field_error(field, "expected a string");
  }
  return v.get<T>();
}

template <typename T>
void read_optional(const json& obj, const std::string& key, const std::string& field, T& out) {
  if (obj.contains(key)) out = get_as<T>(obj, key, field);
}

std::vector<double> read_numbers(const json& v, const std::string& field) {
  if (!v.is_array()) field_error(field, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) field_error(field, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

ScenarioSpec parse_scenario(const json& s) {
  if (!s.is_object()) field_error("scenario", "expected an object");
  reject_unknown(s, "scenario", {"kind", "n", "k", "sigma2", "preset", "custom"});
  if (!s.contains("kind")) field_error("scenario.kind", "missing");
  ScenarioSpec spec;
  spec.kind = scenario_kind_from_string(get_as<std::string>(s, "kind", "scenario.kind"));
  read_optional(s, "n", "scenario.n", spec.n);
  read_optional(s, "k", "scenario.k", spec.k);
  if (s.contains("preset")) spec.preset = get_as<std::string>(s, "preset", "scenario.preset");
  spec.sigma2 = spec.preset == std::optional<std::string>("audio") ? AudioMeans::default_variance : 0.5;
  read_optional(s, "sigma2", "scenario.sigma2", spec.sigma2);

  if (s.contains("custom")) {
    const json& c = s.at("custom");
    if (!c.is_object()) field_error("scenario.custom", "expected an object");
    reject_unknown(c, "scenario.custom", {"theta0", "thetas1", "actions", "explore_dist"});
    for (const char* key : {"theta0", "thetas1", "actions"}) {
      if (!c.contains(key)) field_error(std::string("scenario.custom.") + key, "missing");
    }
    CustomInstance custom;
    custom.theta0 = read_numbers(c.at("theta0"), "scenario.custom.theta0");
    if (!c.at("thetas1").is_array()) field_error("scenario.custom.thetas1", "expected an array of arrays");
    for (const auto& row : c.at("thetas1")) custom.thetas1.push_back(read_numbers(row, "scenario.custom.thetas1"));
    if (!c.at("actions").is_array()) field_error("scenario.custom.actions", "expected an array of arrays");
    for (const auto& row : c.at("actions")) {
      if (!row.is_array()) field_error("scenario.custom.actions", "expected an array of node indices");
      std::vector<int> support;
      for (const auto& node : row) {
        if (!node.is_number_integer()) field_error("scenario.custom.actions", "node indices must be integers");
        support.push_back(node.get<int>());
      }
      custom.action_supports.push_back(std::move(support));
    }
    if (c.contains("explore_dist")) custom.explore_dist = read_numbers(c.at("explore_dist"), "scenario.custom.explore_dist");
    spec.custom = std::move(custom);
  }
  try {
    spec.validate();
  } catch (const config_error& e) {
    throw config_error(std::string("config validation: ") + e.what());
  }
  return spec;
}

json scenario_to_json(const ScenarioSpec& spec) {
  json s;
  s["kind"] = std::string(to_string(spec.kind));
  s["n"] = spec.n;
  s["k"] = spec.k;
  s["sigma2"] = spec.sigma2;
  if (spec.preset) s["preset"] = *spec.preset;
  if (spec.custom) {
    json c;
    c["theta0"] = spec.custom->theta0;
    c["thetas1"] = spec.custom->thetas1;
    c["actions"] = spec.custom->action_supports;
    if (spec.custom->explore_dist) c["explore_dist"] = *spec.custom->explore_dist;
    s["custom"] = std::move(c);
  }
  return s;
}

ExperimentConfig from_json(const json& root) {
  if (!root.is_object()) throw config_error("config: top level must be an object");
  reject_unknown(root, "", {"schema_version", "scenario", "nu", "theta_star", "horizon", "runs", "seed", "m", "alpha",
                            "log_beta", "env_noise_variance", "histogram_bin_width", "epsilon", "detectors"});
  if (root.contains("schema_version") && get_as<int>(root, "schema_version", "schema_version") != kSchemaVersion) {
    field_error("schema_version", "unsupported version");
  }
  if (!root.contains("scenario")) field_error("scenario", "missing");

  ExperimentConfig cfg;
  cfg.scenario = parse_scenario(root.at("scenario"));

  if (root.contains("nu")) {
    const json& nu = root.at("nu");
    if (nu.is_string() && nu.get<std::string>() == "infinity") {
      cfg.nu.reset();
    } else if (nu.is_number_integer()) {
      cfg.nu = nu.get<long long>();
    } else {
      field_error("nu", "expected an integer or \"infinity\"");
    }
  }
  if (root.contains("theta_star")) {
    const json& ts = root.at("theta_star");
    if (ts.is_string() && ts.get<std::string>() == "sweep-all") {
      cfg.theta_star = ThetaStarChoice::sweep_all();
    } else if (ts.is_number_integer()) {
      cfg.theta_star = ThetaStarChoice::fixed(ts.get<int>());
    } else {
      field_error("theta_star", "expected a parameter id or \"sweep-all\"");
    }
  }
  read_optional(root, "horizon", "horizon", cfg.horizon);
  read_optional(root, "runs", "runs", cfg.runs);
  read_optional(root, "seed", "seed", cfg.master_seed);
  read_optional(root, "m", "m", cfg.m);
  read_optional(root, "alpha", "alpha", cfg.alpha);
  if (root.contains("log_beta")) cfg.log_beta = get_as<double>(root, "log_beta", "log_beta");
  if (root.contains("env_noise_variance")) {
    cfg.env_noise_variance = get_as<double>(root, "env_noise_variance", "env_noise_variance");
  }
  read_optional(root, "histogram_bin_width", "histogram_bin_width", cfg.histogram_bin_width);

  double epsilon = 0.2;
  read_optional(root, "epsilon", "epsilon", epsilon);
  cfg.detectors = default_detectors(epsilon);
  if (root.contains("detectors")) {
    const json& ds = root.at("detectors");
    if (!ds.is_array()) field_error("detectors", "expected an array");
    cfg.detectors.clear();
    for (const auto& d : ds) {
      if (!d.is_object()) field_error("detectors", "expected objects");
      reject_unknown(d, "detectors[]", {"policy", "epsilon"});
      if (!d.contains("policy")) field_error("detectors[].policy", "missing");
      DetectorSpec spec;
      spec.policy = policy_from_string(get_as<std::string>(d, "policy", "detectors[].policy"));
      spec.epsilon = epsilon;
      read_optional(d, "epsilon", "detectors[].epsilon", spec.epsilon);
      cfg.detectors.push_back(spec);
    }
  }

  try {
    cfg.validate();
  } catch (const config_error& e) {
    throw config_error(std::string("config validation: ") + e.what());
  }
  return cfg;
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // The parser reports "line L, column C" in its message.
    throw config_error(std::string("config parse error: ") + e.what());
  }
  try {
    return from_json(root);
  } catch (const json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  json root;
  root["schema_version"] = kSchemaVersion;
  root["scenario"] = scenario_to_json(cfg.scenario);
  root["nu"] = cfg.nu ? json(*cfg.nu) : json("infinity");
  root["theta_star"] =
      cfg.theta_star.mode == ThetaStarChoice::Mode::SweepAll ? json("sweep-all") : json(cfg.theta_star.id);
  root["horizon"] = cfg.horizon;
  root["runs"] = cfg.runs;
  root["seed"] = cfg.master_seed;
  root["m"] = cfg.m;
  root["alpha"] = cfg.alpha;
  if (cfg.log_beta) root["log_beta"] = *cfg.log_beta;
  if (cfg.env_noise_variance) root["env_noise_variance"] = *cfg.env_noise_variance;
  root["histogram_bin_width"] = cfg.histogram_bin_width;
  json detectors = json::array();
  for (const auto& d : cfg.detectors) detectors.push_back({{"policy", std::string(to_string(d.policy))}, {"epsilon", d.epsilon}});
  root["detectors"] = std::move(detectors);
  return root;
}

std::string serialize_config(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

void write_runs_csv(std::ostream& os, const nlohmann::ordered_json& config, const MonteCarloResult& result,
                    const std::vector<std::string>& labels) {
  os << "# schema_version: " << kSchemaVersion << '\n';
  os << "# config: " << config.dump() << '\n';
  os << "# log_beta: " << json(result.log_beta).dump() << '\n';
  os << "run,detector,nu,theta_star_id,tau,delay,censored\n";
  for (const auto& r : result.records) {
    os << r.run << ',' << labels.at(static_cast<std::size_t>(r.detector)) << ',';
    if (r.nu) os << *r.nu; else os << "inf";
    os << ',' << r.theta_star_id << ',';
    if (r.tau) os << *r.tau;
    os << ',';
    if (r.delay) os << *r.delay;
    os << ',' << (r.censored() ? 1 : 0) << '\n';
  }
}

nlohmann::ordered_json aggregate_to_json(const nlohmann::ordered_json& config, const MonteCarloResult& result) {
  json out;
  out["schema_version"] = kSchemaVersion;
  out["tool_version"] = std::string(kToolVersion);
  out["config"] = config;
  out["log_beta"] = result.log_beta;
  out["std_convention"] = "sample (n-1)";
  out["delay_definition"] = "(tau - nu)^+, censored runs excluded";
  out["warnings"] = result.warnings;
  json detectors = json::array();
  const auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  for (const auto& s : result.stats) {
    json d;
    d["label"] = s.label;
    d["runs"] = s.runs;
    d["censored"] = s.censored_count;
    d["mean_delay"] = num(s.mean_delay);
    d["std_delay"] = num(s.std_delay);
    d["mean_tau"] = num(s.mean_tau);
    d["std_tau"] = num(s.std_tau);
    d["valid"] = s.valid;
    if (!s.diagnostic.empty()) d["diagnostic"] = s.diagnostic;
    detectors.push_back(std::move(d));
  }
  out["detectors"] = std::move(detectors);
  return out;
}

void write_histogram_csv(std::ostream& os, const nlohmann::ordered_json& config, const MonteCarloResult& result,
                         const std::vector<std::string>& labels, long long width) {
  os << "# schema_version: " << kSchemaVersion << '\n';
  os << "# config: " << config.dump() << '\n';
  os << "detector,bin_lower,bin_upper,count\n";
  for (std::size_t d = 0; d < labels.size(); ++d) {
    for (const auto& bin : stopping_time_histogram(result, static_cast<int>(d), width)) {
      os << labels[d] << ',' << bin.lower << ',' << bin.lower + width << ',' << bin.count << '\n';
    }
  }
}

}  // namespace bqcd

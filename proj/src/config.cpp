#include "mnlb/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mnlb {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

long parse_long(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    unsigned long long out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected an unsigned integer, got '" + v + "'");
  }
}

double parse_double(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a number, got '" + v + "'");
  }
}

using KvMap = std::map<std::string, std::string>;  // "section.key" -> value

KvMap tokenize(const std::string& text) {
  KvMap kv;
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(lineno),
                          "unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno),
                        "expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty() || key.empty()) {
      throw ConfigError("line " + std::to_string(lineno),
                        "key outside a section");
    }
    std::string full = section + "." + key;
    if (kv.count(full) != 0) {
      throw ConfigError(full, "duplicate key");
    }
    kv[full] = value;
  }
  return kv;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_string(const std::string& text) {
  KvMap kv = tokenize(text);
  ExperimentConfig cfg;
  auto take = [&](const std::string& field) {
    auto it = kv.find(field);
    if (it == kv.end()) return std::string();
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto require_field = [&](const std::string& field) {
    auto it = kv.find(field);
    if (it == kv.end()) throw ConfigError(field, "required field is missing");
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  // [experiment]
  for (const std::string& name :
       split_list(require_field("experiment.algorithm"))) {
    auto algo = parse_algorithm(name);
    if (!algo) {
      throw ConfigError("experiment.algorithm",
                        "unknown algorithm '" + name + "'");
    }
    cfg.algorithms.push_back(*algo);
  }
  for (const std::string& t : split_list(require_field("experiment.T"))) {
    cfg.T_grid.push_back(parse_long("experiment.T", t));
  }
  if (std::string v = take("experiment.n_seeds"); !v.empty()) {
    cfg.n_seeds = static_cast<int>(parse_long("experiment.n_seeds", v));
  }
  if (std::string v = take("experiment.master_seed"); !v.empty()) {
    cfg.master_seed = parse_u64("experiment.master_seed", v);
  }

  // [environment]
  {
    std::string v = require_field("environment.kind");
    auto kind = parse_environment_kind(v);
    if (!kind) {
      throw ConfigError("environment.kind", "unknown kind '" + v + "'");
    }
    cfg.kind = *kind;
  }
  cfg.K = static_cast<int>(
      parse_long("environment.K", require_field("environment.K")));
  cfg.d = static_cast<int>(
      parse_long("environment.d", require_field("environment.d")));
  cfg.n_arms = static_cast<int>(
      parse_long("environment.n_arms", require_field("environment.n_arms")));
  cfg.S = parse_double("environment.S", require_field("environment.S"));
  cfg.R = parse_double("environment.R", require_field("environment.R"));
  if (std::string v = take("environment.instance_seed"); !v.empty()) {
    cfg.instance_seed = parse_u64("environment.instance_seed", v);
  }

  // [algorithm]
  if (std::string v = take("algorithm.lambda"); !v.empty() && v != "auto") {
    cfg.algo.lambda_override = parse_double("algorithm.lambda", v);
  }
  if (std::string v = take("algorithm.lambda_preset"); !v.empty()) {
    if (v == "standard") {
      cfg.algo.lambda_preset = LambdaPreset::standard;
    } else if (v == "heavy") {
      cfg.algo.lambda_preset = LambdaPreset::heavy;
    } else {
      throw ConfigError("algorithm.lambda_preset", "unknown preset '" + v +
                                                       "'");
    }
  }
  if (std::string v = take("algorithm.delta"); !v.empty()) {
    cfg.algo.delta = parse_double("algorithm.delta", v);
  }
  if (std::string v = take("algorithm.C"); !v.empty()) {
    cfg.algo.C = parse_double("algorithm.C", v);
  }
  if (std::string v = take("algorithm.c_gamma"); !v.empty()) {
    cfg.algo.c_gamma = parse_double("algorithm.c_gamma", v);
  }
  if (std::string v = take("algorithm.kappa"); !v.empty() && v != "auto") {
    cfg.algo.kappa = parse_double("algorithm.kappa", v);
  }
  if (std::string v = take("algorithm.kappa_samples"); !v.empty()) {
    cfg.algo.kappa_samples =
        static_cast<int>(parse_long("algorithm.kappa_samples", v));
  }
  if (std::string v = take("algorithm.epsilon_design"); !v.empty()) {
    cfg.algo.epsilon_design = parse_double("algorithm.epsilon_design", v);
  }
  if (std::string v = take("algorithm.M"); !v.empty() && v != "auto") {
    cfg.M = static_cast<int>(parse_long("algorithm.M", v));
  }
  if (std::string v = take("algorithm.rescale_mode"); !v.empty()) {
    if (v == "at_switch") {
      cfg.algo.rescale_mode = RescaleMode::at_switch;
    } else if (v == "per_round") {
      cfg.algo.rescale_mode = RescaleMode::per_round;
    } else {
      throw ConfigError("algorithm.rescale_mode", "unknown mode '" + v + "'");
    }
  }

  // [output]
  if (std::string v = take("output.dir"); !v.empty()) cfg.out_dir = v;

  if (!kv.empty()) {
    throw ConfigError(kv.begin()->first, "unknown field");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

void ExperimentConfig::validate() const {
  if (algorithms.empty()) {
    throw ConfigError("experiment.algorithm", "empty grid axis");
  }
  if (T_grid.empty()) throw ConfigError("experiment.T", "empty grid axis");
  for (long t : T_grid) {
    if (t < 2) throw ConfigError("experiment.T", "every T must be >= 2");
  }
  if (n_seeds < 1) throw ConfigError("experiment.n_seeds", "must be >= 1");
  if (K < 1) throw ConfigError("environment.K", "must be >= 1");
  if (d < 1) throw ConfigError("environment.d", "must be >= 1");
  if (n_arms < 1) throw ConfigError("environment.n_arms", "must be >= 1");
  if (!(S > 0.0)) throw ConfigError("environment.S", "must be > 0");
  if (!(R > 0.0)) throw ConfigError("environment.R", "must be > 0");
  if (!(algo.delta > 0.0 && algo.delta < 1.0)) {
    throw ConfigError("algorithm.delta", "must lie in (0, 1)");
  }
  if (!(algo.C > 0.0)) throw ConfigError("algorithm.C", "must be > 0");
  if (!(algo.c_gamma > 0.0)) {
    throw ConfigError("algorithm.c_gamma", "must be > 0");
  }
  if (algo.kappa != 0.0 && algo.kappa < 1.0) {
    throw ConfigError("algorithm.kappa", "must be >= 1 (or auto)");
  }
  if (algo.kappa_samples < 1) {
    throw ConfigError("algorithm.kappa_samples", "must be >= 1");
  }
  if (!(algo.epsilon_design > 0.0)) {
    throw ConfigError("algorithm.epsilon_design", "must be > 0");
  }
  if (kind == EnvironmentKind::adversarial_fresh) {
    for (Algorithm a : algorithms) {
      if (a == Algorithm::bmnl) {
        throw ConfigError("experiment.algorithm",
                          "bmnl requires stochastic contexts; "
                          "adversarial-fresh is rejected");
      }
    }
  }
  if (out_dir.empty()) throw ConfigError("output.dir", "must not be empty");
}

ExperimentConfig ExperimentConfig::cell(Algorithm algo_in, long T_in) const {
  ExperimentConfig c = *this;
  c.algorithms = {algo_in};
  c.T_grid = {T_in};
  return c;
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "algorithm = ";
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    out << (i ? ", " : "") << to_string(algorithms[i]);
  }
  out << "\n";
  out << "T = ";
  for (std::size_t i = 0; i < T_grid.size(); ++i) {
    out << (i ? ", " : "") << T_grid[i];
  }
  out << "\n";
  out << "n_seeds = " << n_seeds << "\n";
  out << "master_seed = " << master_seed << "\n";
  out << "\n[environment]\n";
  out << "kind = " << to_string(kind) << "\n";
  out << "K = " << K << "\n";
  out << "d = " << d << "\n";
  out << "n_arms = " << n_arms << "\n";
  out << "S = " << fmt_double(S) << "\n";
  out << "R = " << fmt_double(R) << "\n";
  out << "instance_seed = " << instance_seed << "\n";
  out << "\n[algorithm]\n";
  out << "lambda = "
      << (algo.lambda_override > 0.0 ? fmt_double(algo.lambda_override)
                                     : std::string("auto"))
      << "\n";
  out << "lambda_preset = "
      << (algo.lambda_preset == LambdaPreset::standard ? "standard" : "heavy")
      << "\n";
  out << "delta = " << fmt_double(algo.delta) << "\n";
  out << "C = " << fmt_double(algo.C) << "\n";
  out << "c_gamma = " << fmt_double(algo.c_gamma) << "\n";
  out << "kappa = "
      << (algo.kappa > 0.0 ? fmt_double(algo.kappa) : std::string("auto"))
      << "\n";
  out << "kappa_samples = " << algo.kappa_samples << "\n";
  out << "epsilon_design = " << fmt_double(algo.epsilon_design) << "\n";
  out << "M = " << (M > 0 ? std::to_string(M) : std::string("auto")) << "\n";
  out << "rescale_mode = "
      << (algo.rescale_mode == RescaleMode::at_switch ? "at_switch"
                                                      : "per_round")
      << "\n";
  out << "\n[output]\n";
  out << "dir = " << out_dir << "\n";
  return out.str();
}

EnvironmentSpec ExperimentConfig::environment_spec() const {
  return EnvironmentSpec::sample(kind, K, d, n_arms, S, R, instance_seed);
}

}  // namespace mnlb

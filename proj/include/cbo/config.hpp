#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbo/core.hpp"
#include "cbo/harness.hpp"
#include "cbo/oracle.hpp"

namespace cbo {

// Flat key = value configuration file. '#' starts a comment; values may be
// scalars, comma-separated lists, or strings. See README for the schema.
class Config {
 public:
  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
  }

  static Config parse_string(const std::string& text) {
    Config cfg;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": empty key");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback = "") const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("config key missing: " + key);
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? to_double(key, values_.at(key)) : fallback;
  }

  double require_double(const std::string& key) const {
    return to_double(key, require_string(key));
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? to_int(key, values_.at(key)) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = values_.at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config key " + key + ": expected boolean, got '" + v + "'");
  }

  std::vector<double> get_list(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    std::stringstream ss(values_.at(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    return out;
  }

  // A list of either one entry (broadcast) or exactly d entries.
  std::vector<double> get_vector(const std::string& key, std::size_t d,
                                 double fallback) const {
    auto list = get_list(key);
    if (list.empty()) return std::vector<double>(d, fallback);
    if (list.size() == 1) return std::vector<double>(d, list.front());
    if (list.size() != d)
      throw std::runtime_error("config key " + key + ": expected 1 or " +
                               std::to_string(d) + " entries");
    return list;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }

  static double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error("config key " + key + ": expected number, got '" + v + "'");
    }
    if (pos != v.size())
      throw std::runtime_error("config key " + key + ": expected number, got '" + v + "'");
    return out;
  }

  static std::int64_t to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    const auto i = static_cast<std::int64_t>(d);
    if (static_cast<double>(i) != d)
      throw std::runtime_error("config key " + key + ": expected integer, got '" + v + "'");
    return i;
  }

  std::map<std::string, std::string> values_;
};

inline CboParams params_from_config(const Config& cfg) {
  CboParams p;
  p.gamma = cfg.get_double("gamma", p.gamma);
  p.xi = cfg.get_double("xi", p.xi);
  p.alpha = cfg.get_double("alpha", p.alpha);
  p.n_particles = cfg.get_int("n_particles", p.n_particles);
  p.dim = cfg.get_int("dim", p.dim);
  p.max_iter = cfg.get_int("max_iter", p.max_iter);
  p.consensus_tol = cfg.get_double("consensus_tol", p.consensus_tol);
  const std::string mode = cfg.get_string("noise_mode", "per_particle");
  if (mode == "per_particle")
    p.noise_mode = NoiseMode::per_particle;
  else if (mode == "shared")
    p.noise_mode = NoiseMode::shared;
  else
    throw std::runtime_error("noise_mode must be per_particle or shared");
  return p;
}

inline InitSpec init_from_config(const Config& cfg, std::int64_t dim) {
  InitSpec init;
  const std::string kind = cfg.get_string("init.kind", "uniform_box");
  const auto d = static_cast<std::size_t>(dim);
  if (kind == "uniform_box") {
    init.kind = InitKind::uniform_box;
    init.lower = cfg.get_vector("init.lower", d, -3.0);
    init.upper = cfg.get_vector("init.upper", d, 3.0);
  } else if (kind == "gaussian") {
    init.kind = InitKind::gaussian;
    init.mean = cfg.get_vector("init.mean", d, 0.0);
    init.stddev = cfg.get_vector("init.std", d, 1.0);
  } else {
    throw std::runtime_error("init.kind must be uniform_box or gaussian");
  }
  return init;
}

inline ObjectiveKind objective_kind_from_config(const Config& cfg) {
  const std::string name = cfg.get_string("objective", "rastrigin");
  if (name == "rastrigin") return ObjectiveKind::rastrigin;
  if (name == "rotated_rastrigin") return ObjectiveKind::rotated_rastrigin;
  if (name == "finite_sum") return ObjectiveKind::finite_sum;
  throw std::runtime_error("unknown objective: " + name);
}

inline NoiseSpec noise_from_config(const Config& cfg) {
  NoiseSpec n;
  n.sigma0 = cfg.get_double("sigma0", 0.0);
  n.sigma1 = cfg.get_double("sigma1", 0.0);
  validate_noise(n);
  return n;
}

}  // namespace cbo

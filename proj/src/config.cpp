#include "kkindex/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "kkindex/experiments.hpp"

namespace kkindex {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long parse_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return out;
}

int positive_int(const std::string& key, const std::string& v) {
  long long x = parse_integer(key, v);
  if (x <= 0) throw ConfigError(key, "must be positive, got " + v);
  if (x > 1000000) throw ConfigError(key, "value " + v + " is out of range");
  return static_cast<int>(x);
}

double positive_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key, "expected a number, got '" + v + "'");
  if (!(out > 0.0) || !std::isfinite(out)) throw ConfigError(key, "must be positive, got " + v);
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(trim(part));
  return out;
}

const std::vector<std::string>& keys() {
  static const std::vector<std::string> k{"modes",   "energy_cut", "hermite_cut", "active_modes", "sigma",
                                          "tolerance", "seed",     "experiments", "output_dir",   "group",
                                          "cocycle", "root_order"};
  return k;
}

}  // namespace

std::vector<std::string> known_config_keys() { return keys(); }

Cocycle Config::make_cocycle() const {
  auto g = std::make_shared<const FiniteAbelianGroup>(FiniteAbelianGroup::parse(group));
  return Cocycle::named(g, cocycle, root_order);
}

Config parse_config_text(const std::string& text) {
  Config cfg;
  std::map<std::string, std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(trim(line), "line " + std::to_string(lineno) + " is not of the form key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (std::find(keys().begin(), keys().end(), key) == keys().end()) throw ConfigError(key, "unknown key");
    if (seen.count(key)) throw ConfigError(key, "given twice");
    if (value.empty()) throw ConfigError(key, "empty value");
    seen[key] = value;
  }

  for (const auto& [key, v] : seen) {
    if (key == "modes") {
      cfg.modes = positive_int(key, v);
    } else if (key == "energy_cut") {
      cfg.energy_cut = positive_int(key, v);
    } else if (key == "hermite_cut") {
      cfg.hermite_cut = positive_int(key, v);
    } else if (key == "active_modes") {
      cfg.active_modes = positive_int(key, v);
    } else if (key == "sigma") {
      try {
        cfg.sigma = SigmaSequence::parse(v);
      } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
      }
      for (double s : cfg.sigma.values)
        if (!(s > 0.0)) throw ConfigError(key, "sigma values must be positive");
      if (cfg.sigma.has_tail_rule() && !(cfg.sigma(1) > 0.0)) throw ConfigError(key, "sigma values must be positive");
      cfg.sigma_text = v;
    } else if (key == "tolerance") {
      cfg.tolerance = positive_double(key, v);
    } else if (key == "seed") {
      long long s = parse_integer(key, v);
      if (s < 0) throw ConfigError(key, "must be non-negative");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "experiments") {
      if (v != "all") {
        for (const auto& name : split_list(v)) {
          if (!is_registered(name)) throw ConfigError(key, "unregistered experiment '" + name + "'");
          cfg.experiments.push_back(name);
        }
      }
    } else if (key == "output_dir") {
      cfg.output_dir = v;
    } else if (key == "group") {
      cfg.group = v;
    } else if (key == "cocycle") {
      cfg.cocycle = v;
    } else if (key == "root_order") {
      cfg.root_order = positive_int(key, v);
    }
  }

  if (seen.count("cocycle") && !seen.count("group")) throw ConfigError("group", "missing required key (needed by 'cocycle')");
  if (seen.count("root_order") && !seen.count("cocycle"))
    throw ConfigError("cocycle", "missing required key (needed by 'root_order')");
  if (cfg.active_modes > cfg.modes)
    throw ConfigError("active_modes", "must not exceed modes (" + std::to_string(cfg.modes) + ")");
  if (cfg.sigma.rule == SigmaSequence::Rule::list && cfg.sigma.values.size() < static_cast<std::size_t>(cfg.active_modes))
    throw ConfigError("sigma", "list needs at least active_modes entries");
  try {
    (void)FiniteAbelianGroup::parse(cfg.group);
  } catch (const std::exception& e) {
    throw ConfigError("group", e.what());
  }
  try {
    (void)cfg.make_cocycle();
  } catch (const std::exception& e) {
    throw ConfigError(seen.count("root_order") ? "root_order" : "cocycle", e.what());
  }
  return cfg;
}

Config parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace kkindex

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "kkindex/fock.hpp"
#include "kkindex/limitspace.hpp"
#include "kkindex/twistgroup.hpp"

namespace kkindex {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::invalid_argument("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct Config {
  int modes = 4;              // N_max
  int energy_cut = 8;         // E_max
  int hermite_cut = 12;       // total Hermite degree kept per active mode
  int active_modes = 3;       // M, active Hermite modes of the j-cycle
  SigmaSequence sigma = SigmaSequence::pow2();
  std::string sigma_text = "pow2";
  double tolerance = 1e-10;
  std::uint64_t seed = 20240611;
  std::vector<std::string> experiments;  // empty: every registered experiment
  std::string output_dir = "kkindex-out";
  std::string group = "3x3";
  std::string cocycle = "heisenberg";
  int root_order = 0;  // 0: the cocycle's default

  TruncationSpec spec() const { return TruncationSpec{modes, energy_cut, default_tolerance}; }
  Cocycle make_cocycle() const;
};

// Line-based `key = value` with `#` comments. Unknown keys, malformed values,
// duplicates and dependent keys given without the key they refine are errors
// naming the key.
Config parse_config_text(const std::string& text);
Config parse_config(const std::filesystem::path& path);

std::vector<std::string> known_config_keys();

// Environment variable that overrides the configured output directory.
inline constexpr const char* output_dir_env = "KKINDEX_OUT_DIR";

}  // namespace kkindex

#ifndef CHURNSTORE_CONFIG_HPP
#define CHURNSTORE_CONFIG_HPP

#include <churnstore/simulator.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace churnstore {

/// Sets one `key=value` field. Unknown keys and malformed values throw ConfigError.
void apply_setting(SimulationConfig& cfg, std::string_view key, std::string_view value);

/// Reads a flat key=value file ('#' starts a comment) on top of `base`.
SimulationConfig load_config(const std::filesystem::path& path, SimulationConfig base = {});

/// Every field as key=value lines, in a fixed order; load_config reads it back.
std::string dump_config(const SimulationConfig& cfg);

/// Comma-separated list of reals, e.g. "0,1,2,4".
std::vector<double> parse_list(std::string_view text);

}  // namespace churnstore

#endif  // CHURNSTORE_CONFIG_HPP

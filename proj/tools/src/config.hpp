#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nested_lsmc/experiment.hpp>

#include "json.hpp"

namespace nlsmc::cli {

/// A configuration problem tied to one key (empty when it concerns the file itself).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct KeyInfo {
  std::string name;
  std::string help;
};

/// Every accepted configuration key, in documentation order.
const std::vector<KeyInfo>& config_schema();
bool is_known_key(const std::string& key);

using RawConfig = std::map<std::string, std::string>;

/// Parses `key = value` lines. '#' starts a comment, blank lines are ignored
/// and values may be wrapped in double quotes. Unknown or repeated keys throw.
RawConfig parse_config_text(const std::string& text, const std::string& source);
RawConfig load_config_file(const std::string& path);

/// Applies `key=value` on top of `raw`, rejecting unknown keys.
void apply_override(RawConfig& raw, const std::string& assignment);

/// Converts raw strings to a validated configuration. With require_model,
/// a missing `model` key is an error.
ExperimentConfig build_config(const RawConfig& raw, bool require_model);

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

}  // namespace nlsmc::cli

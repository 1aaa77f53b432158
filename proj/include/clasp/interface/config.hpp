#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace clasp::interface {

using nlohmann::json;

struct SettingSpec {
  std::string key;     // flag name without dashes, e.g. "batch-size"
  json default_value;  // also fixes the type flags and env values parse to
  std::string help;
};

struct ResolvedConfig {
  json values = json::object();
  std::map<std::string, std::string> sources;  // key -> flag | env | file | default

  template <typename T>
  T get(const std::string& key) const {
    return values.at(key).get<T>();
  }
  std::string describe(const std::string& command) const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

// "batch-size" -> "CLASP_BATCH_SIZE"
std::string env_name(const std::string& key);

// flags > CLASP_ environment > config file > defaults. The config file may
// hold keys at top level or under an object named after the command.
// Throws ConfigError on unparsable values or unknown file keys.
ResolvedConfig resolve_config(const std::string& command, const std::vector<SettingSpec>& specs,
                              const std::map<std::string, std::string>& flags,
                              const json& file, const EnvLookup& env = process_env);

json load_config_file(const std::string& path);

}  // namespace clasp::interface

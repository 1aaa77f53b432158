#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>

#include "clasp/error.hpp"
#include "clasp/interface/config.hpp"

namespace clasp::interface {

namespace {

json parse_as(const json& like, const std::string& key, const std::string& text,
              const std::string& origin) {
  try {
    if (like.is_boolean()) {
      if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
      if (text == "false" || text == "0" || text == "no" || text == "off") return false;
      throw std::invalid_argument("not a boolean");
    }
    if (like.is_number_unsigned()) {
      if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
      std::size_t used = 0;
      const auto v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
    if (like.is_number_integer()) {
      std::size_t used = 0;
      const auto v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
    if (like.is_number_float()) {
      std::size_t used = 0;
      const auto v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
  } catch (const std::exception&) {
    throw ConfigError("invalid value '" + text + "' for '" + key + "' from " + origin);
  }
  return text;
}

json check_type(const json& like, const std::string& key, const json& value) {
  const bool ok = (like.is_boolean() && value.is_boolean()) ||
                  (like.is_number_unsigned() && value.is_number_unsigned()) ||
                  (like.is_number_integer() && !like.is_number_unsigned() && value.is_number_integer()) ||
                  (like.is_number_float() && value.is_number()) ||
                  (like.is_string() && value.is_string()) || like.is_null();
  if (!ok) throw ConfigError("config file value for '" + key + "' has the wrong type");
  return like.is_number_float() ? json(value.get<double>()) : value;
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr) return std::nullopt;
  return std::string(v);
}

std::string env_name(const std::string& key) {
  std::string out = "CLASP_";
  for (const char c : key) {
    out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

ResolvedConfig resolve_config(const std::string& command, const std::vector<SettingSpec>& specs,
                              const std::map<std::string, std::string>& flags, const json& file,
                              const EnvLookup& env) {
  json scoped = json::object();
  if (file.is_object()) {
    std::set<std::string> known;
    for (const auto& s : specs) known.insert(s.key);
    for (const auto& [key, value] : file.items()) {
      if (value.is_object()) {
        if (key == command) {
          for (const auto& [k, v] : value.items()) scoped[k] = v;
        }
        continue;
      }
      if (known.count(key) != 0) scoped[key] = value;
    }
    for (const auto& [k, v] : scoped.items()) {
      if (known.count(k) == 0) throw ConfigError("unknown key '" + k + "' in config file");
    }
  } else if (!file.is_null()) {
    throw ConfigError("config file must hold a JSON object");
  }

  ResolvedConfig out;
  for (const auto& spec : specs) {
    if (const auto it = flags.find(spec.key); it != flags.end()) {
      out.values[spec.key] = parse_as(spec.default_value, spec.key, it->second, "--" + spec.key);
      out.sources[spec.key] = "flag";
    } else if (const auto e = env ? env(env_name(spec.key)) : std::nullopt; e) {
      out.values[spec.key] = parse_as(spec.default_value, spec.key, *e, env_name(spec.key));
      out.sources[spec.key] = "env";
    } else if (scoped.contains(spec.key)) {
      out.values[spec.key] = check_type(spec.default_value, spec.key, scoped[spec.key]);
      out.sources[spec.key] = "file";
    } else {
      out.values[spec.key] = spec.default_value;
      out.sources[spec.key] = "default";
    }
  }
  return out;
}

std::string ResolvedConfig::describe(const std::string& command) const {
  json j;
  j["command"] = command;
  j["config"] = values;
  j["sources"] = sources;
  return j.dump();
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

}  // namespace clasp::interface

#pragma once

// Flat `key = value` configuration text with optional `[section]` headers.
// Lines starting with '#' or ';' are comments. Keys before the first header
// belong to the global section.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace jfsce {

using KeyValues = std::map<std::string, std::string>;

struct ConfigSection {
  std::string name;  // text between the brackets, trimmed
  KeyValues values;
};

struct ConfigFile {
  KeyValues global;
  std::vector<ConfigSection> sections;  // in file order

  const ConfigSection* find(const std::string& name) const;
};

// Throws ConfigError naming the line on malformed input or duplicate keys.
ConfigFile parse_config_text(const std::string& text);
ConfigFile load_config_file(const std::filesystem::path& path);

// Value parsers; all throw ConfigError naming the key.
double parse_double(const std::string& key, const std::string& value);
long parse_long(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

// Comma-separated numbers; an item "a:step:b" expands to a, a + step, ... <= b.
std::vector<double> parse_grid(const std::string& key, const std::string& value);

std::vector<std::string> split_list(const std::string& value, char sep = ',');
std::string trim(const std::string& s);

}  // namespace jfsce

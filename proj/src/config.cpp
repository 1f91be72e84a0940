#include "jfsce/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "jfsce/types.hpp"

namespace jfsce {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const ConfigSection* ConfigFile::find(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

ConfigFile parse_config_text(const std::string& text) {
  ConfigFile cfg;
  KeyValues* current = &cfg.global;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError(where + ": empty section name");
      if (cfg.find(name)) throw ConfigError(where + ": duplicate section [" + name + "]");
      cfg.sections.push_back({name, {}});
      current = &cfg.sections.back().values;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!current->emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return cfg;
}

ConfigFile load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

double parse_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const std::string s = trim(value);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  return v;
}

long parse_long(const std::string& key, const std::string& value) {
  long v = 0;
  const std::string s = trim(value);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string s = trim(value);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<double> parse_grid(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::istringstream in(value);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (item.empty()) throw ConfigError("key '" + key + "': empty grid item in '" + value + "'");
    const auto parts = split_list(item, ':');
    if (parts.size() == 1) {
      out.push_back(parse_double(key, parts[0]));
    } else if (parts.size() == 3) {
      const double a = parse_double(key, parts[0]);
      const double step = parse_double(key, parts[1]);
      const double b = parse_double(key, parts[2]);
      if (!(step > 0.0) || b < a) throw ConfigError("key '" + key + "': bad range '" + item + "'");
      const long count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
      for (long i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * step);
    } else {
      throw ConfigError("key '" + key + "': bad grid item '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("key '" + key + "': grid is empty");
  return out;
}

}  // namespace jfsce

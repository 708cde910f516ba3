#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "recap/errors.hpp"

namespace recap {

/// Minimal INI reader for the configuration, scenario and site files.
/// Sections in [brackets], key=value lines, '#' comments. Keys keep the
/// order-independent map semantics; duplicate keys take the last value.
class IniFile {
 public:
  static IniFile parse(const std::string& text) {
    IniFile ini;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = trim(line);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      if (s.front() == '[') {
        auto end = s.find(']');
        if (end == std::string::npos)
          throw ConfigError("unterminated section header at line " +
                            std::to_string(lineno));
        section = trim(s.substr(1, end - 1));
        ini.sections_[section];
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError("expected key=value at line " + std::to_string(lineno));
      ini.sections_[section][trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }
    return ini;
  }

  static IniFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }

  bool has(const std::string& sec, const std::string& key) const {
    auto it = sections_.find(sec);
    return it != sections_.end() && it->second.count(key) > 0;
  }

  std::string get(const std::string& sec, const std::string& key) const {
    auto it = sections_.find(sec);
    if (it == sections_.end()) throw ConfigError("missing section [" + sec + "]");
    auto kt = it->second.find(key);
    if (kt == it->second.end())
      throw ConfigError("missing key '" + key + "' in section [" + sec + "]");
    return kt->second;
  }

  std::string get_or(const std::string& sec, const std::string& key,
                     const std::string& dflt) const {
    return has(sec, key) ? get(sec, key) : dflt;
  }

  double get_double(const std::string& sec, const std::string& key,
                    double dflt) const {
    return has(sec, key) ? std::stod(get(sec, key)) : dflt;
  }

  long get_int(const std::string& sec, const std::string& key, long dflt) const {
    return has(sec, key) ? std::stol(get(sec, key)) : dflt;
  }

  const std::map<std::string, std::string>& section(const std::string& s) const {
    auto it = sections_.find(s);
    if (it == sections_.end()) throw ConfigError("missing section [" + s + "]");
    return it->second;
  }

  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace recap

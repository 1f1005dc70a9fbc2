// Copyright 2026 The rainbow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Flat key-value experiment files and the plain-text output conventions.
//
//   # comment
//   lx = 6
//   variant = "IZ"
//   post_select = true
//
// One key per line, full-line comments only, no sections.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rainbow {

inline constexpr const char *kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
  public:
    ConfigError(int line, const std::string &what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    /// 1-based line of the offending entry, 0 when not tied to a line.
    int line() const { return line_; }

  private:
    int line_;
};

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

/// Entries in file order.
struct ConfigFile {
    std::vector<ConfigEntry> entries;

    const ConfigEntry *find(const std::string &key) const {
        for (const auto &e : entries) {
            if (e.key == key) return &e;
        }
        return nullptr;
    }
};

namespace detail {

inline std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool valid_key(const std::string &k) {
    if (k.empty() || !(std::isalpha(static_cast<unsigned char>(k[0])) || k[0] == '_')) return false;
    for (char c : k) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    }
    return true;
}

}  // namespace detail

/// Keys are normalized to snake_case ('-' becomes '_').
inline ConfigFile parse_config(std::istream &in) {
    ConfigFile cfg;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = detail::trim(raw);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value', got '" + s + "'");
        std::string key = detail::trim(s.substr(0, eq));
        std::string value = detail::trim(s.substr(eq + 1));
        if (!detail::valid_key(key)) throw ConfigError(line, "invalid key '" + key + "'");
        for (char &c : key) {
            if (c == '-') c = '_';
        }
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        } else if (value.empty()) {
            throw ConfigError(line, "missing value for '" + key + "'");
        } else if (value.find('"') != std::string::npos) {
            throw ConfigError(line, "unbalanced quotes in value of '" + key + "'");
        }
        if (const auto *prev = cfg.find(key))
            throw ConfigError(line, "duplicate key '" + key + "' (first set on line " + std::to_string(prev->line) + ")");
        cfg.entries.push_back({key, value, line});
    }
    return cfg;
}

inline ConfigFile load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
    return parse_config(in);
}

/// Twelve significant digits, the output precision of every table.
inline std::string format_number(double x) {
    char buf[32];
    if (x == 0.0) x = 0.0;  // no "-0"
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

/// Resolved parameters, echoed as '# key = value' ahead of each table.
using ResolvedConfig = std::vector<std::pair<std::string, std::string>>;

inline void write_header(std::ostream &out, const std::string &command, const ResolvedConfig &cfg) {
    out << "# rainbow = " << kVersion << '\n' << "# command = " << command << '\n';
    for (const auto &[k, v] : cfg) out << "# " << k << " = " << v << '\n';
}

}  // namespace rainbow

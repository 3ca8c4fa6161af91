// Copyright 2026 The kmest Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kmest/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "kmest/error.hpp"

namespace kmest {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
    if (!ok) return false;
  }
  return key.find("..") == std::string_view::npos;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

[[noreturn]] void bad_value(std::string_view key, const std::string& value,
                            const char* expected) {
  throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + value +
                    "' as " + expected);
}

double to_double(std::string_view key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) bad_value(key, text, "a number");
  return v;
}

std::uint64_t to_uint(std::string_view key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc() && ptr == text.data() + text.size()) return v;
  // Accept integral values written in floating-point notation (1e6).
  const double d = to_double(key, text);
  if (d >= 0.0 && d < 1.8e19 && d == static_cast<double>(static_cast<std::uint64_t>(d))) {
    return static_cast<std::uint64_t>(d);
  }
  bad_value(key, text, "a non-negative integer");
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": key '" + key + "' has no value");
    if (!cfg.values_.emplace(key, value).second) {
      throw ConfigError(where + ": duplicate key '" + key + "'");
    }
  }
  if (in.bad()) throw IoError("failed reading " + source);
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  return parse(in, path.string());
}

void Config::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
  values_[key] = value;
}

bool Config::has(std::string_view key) const { return values_.find(key) != values_.end(); }

std::optional<std::string> Config::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.emplace(key);
  return it->second;
}

std::string Config::get_string(std::string_view key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::string Config::require_string(std::string_view key) const {
  auto v = get(key);
  if (!v) throw ConfigError("missing required config key '" + std::string(key) + "'");
  return *v;
}

std::optional<double> Config::get_double(std::string_view key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  return to_double(key, *v);
}

std::optional<std::uint64_t> Config::get_uint(std::string_view key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  return to_uint(key, *v);
}

std::optional<bool> Config::get_bool(std::string_view key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  bad_value(key, *v, "a boolean");
}

std::vector<double> Config::get_doubles(std::string_view key) const {
  std::vector<double> out;
  if (const auto v = get(key)) {
    for (const std::string& item : split_list(*v)) out.push_back(to_double(key, item));
  }
  return out;
}

std::vector<std::size_t> Config::get_sizes(std::string_view key) const {
  std::vector<std::size_t> out;
  if (const auto v = get(key)) {
    for (const std::string& item : split_list(*v)) {
      out.push_back(static_cast<std::size_t>(to_uint(key, item)));
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, double>> Config::get_count_real_pairs(
    std::string_view key) const {
  std::vector<std::pair<std::size_t, double>> out;
  if (const auto v = get(key)) {
    for (const std::string& item : split_list(*v)) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) bad_value(key, item, "'count:value'");
      out.emplace_back(static_cast<std::size_t>(to_uint(key, trim(item.substr(0, colon)))),
                       to_double(key, trim(item.substr(colon + 1))));
    }
  }
  return out;
}

std::map<std::string, std::string> Config::section(std::string_view prefix) const {
  std::map<std::string, std::string> out;
  const std::string head = std::string(prefix) + ".";
  for (const auto& [key, value] : values_) {
    if (key.compare(0, head.size(), head) == 0) {
      out.emplace(key.substr(head.size()), value);
      used_.insert(key);
    }
  }
  return out;
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_) {
    if (!used_.contains(key)) out.push_back(key);
  }
  return out;
}

}  // namespace kmest

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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kmest {

/// Flat `dotted.key = value` configuration.
///
/// One entry per line; `#` starts a comment; blank lines are ignored. Lists
/// are comma separated. Keys may not repeat within a file. Reads through the
/// typed getters mark a key as used so callers can reject unknown keys.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  /// Adds or replaces a value (flag overrides).
  void set(const std::string& key, const std::string& value);
  bool has(std::string_view key) const;

  std::optional<std::string> get(std::string_view key) const;
  std::string get_string(std::string_view key, const std::string& fallback) const;
  std::string require_string(std::string_view key) const;
  std::optional<double> get_double(std::string_view key) const;
  std::optional<std::uint64_t> get_uint(std::string_view key) const;
  std::optional<bool> get_bool(std::string_view key) const;
  std::vector<double> get_doubles(std::string_view key) const;
  std::vector<std::size_t> get_sizes(std::string_view key) const;
  /// `a:b, c:d` pairs of (count, real).
  std::vector<std::pair<std::size_t, double>> get_count_real_pairs(std::string_view key) const;

  /// Entries below `prefix.` with the prefix stripped.
  std::map<std::string, std::string> section(std::string_view prefix) const;

  const std::map<std::string, std::string, std::less<>>& entries() const noexcept {
    return values_;
  }
  /// Keys never read through a getter or section().
  std::vector<std::string> unused() const;
  const std::string& source() const noexcept { return source_; }

 private:
  std::string source_;
  std::map<std::string, std::string, std::less<>> values_;
  mutable std::set<std::string, std::less<>> used_;
};

}  // namespace kmest

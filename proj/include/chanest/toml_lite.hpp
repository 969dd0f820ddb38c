// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace chanest {

// Reader for flat TOML documents: `key = value` lines with numbers, booleans,
// quoted strings and one-dimensional arrays. Enough for one declarative
// experiment per file; tables and nesting are rejected.
class TomlTable {
public:
    using Value = std::variant<std::int64_t, double, bool, std::string,
                               std::vector<double>, std::vector<std::string>>;

    static TomlTable parse(const std::string& text);
    static TomlTable parse_file(const std::string& path);

    bool has(const std::string& key) const;
    std::vector<std::string> keys() const;

    std::int64_t integer(const std::string& key) const;
    std::int64_t integer_or(const std::string& key, std::int64_t fallback) const;
    double number(const std::string& key) const;
    double number_or(const std::string& key, double fallback) const;
    bool boolean_or(const std::string& key, bool fallback) const;
    std::string string(const std::string& key) const;
    std::string string_or(const std::string& key, const std::string& fallback) const;
    std::vector<double> number_list(const std::string& key) const;
    std::vector<double> number_list_or(const std::string& key,
                                       std::vector<double> fallback) const;
    std::vector<std::string> string_list_or(const std::string& key,
                                            std::vector<std::string> fallback) const;

private:
    const Value& get(const std::string& key) const;
    std::map<std::string, Value> values_;
};

} // namespace chanest

// SPDX-License-Identifier: Apache-2.0
#include "chanest/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "chanest/errors.hpp"

namespace chanest {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

// Drops a trailing comment, honoring quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"')
            in_string = !in_string;
        else if (line[i] == '#' && !in_string)
            return line.substr(0, i);
    }
    return line;
}

bool parse_integer(const std::string& text, std::int64_t& out) {
    std::size_t pos = 0;
    try {
        out = std::stoll(text, &pos);
    } catch (...) {
        return false;
    }
    return pos == text.size();
}

bool parse_double(const std::string& text, double& out) {
    std::size_t pos = 0;
    try {
        out = std::stod(text, &pos);
    } catch (...) {
        return false;
    }
    return pos == text.size();
}

TomlTable::Value parse_scalar(const std::string& raw, int line_no) {
    const std::string text = trim(raw);
    if (text.empty())
        throw config_error("line " + std::to_string(line_no) + ": missing value");
    if (text.front() == '"') {
        if (text.size() < 2 || text.back() != '"')
            throw config_error("line " + std::to_string(line_no) + ": unterminated string");
        return text.substr(1, text.size() - 2);
    }
    if (text == "true")
        return true;
    if (text == "false")
        return false;
    std::int64_t i = 0;
    if (parse_integer(text, i))
        return i;
    double d = 0.0;
    if (parse_double(text, d))
        return d;
    throw config_error("line " + std::to_string(line_no) + ": cannot parse value '" + text +
                       "'");
}

TomlTable::Value parse_array(const std::string& inner, int line_no) {
    std::vector<std::string> items;
    std::string current;
    bool in_string = false;
    for (char c : inner) {
        if (c == '"')
            in_string = !in_string;
        if (c == ',' && !in_string) {
            items.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    if (!trim(current).empty())
        items.push_back(current);

    std::vector<double> numbers;
    std::vector<std::string> strings;
    bool any_string = false;
    for (const std::string& item : items) {
        const TomlTable::Value v = parse_scalar(item, line_no);
        if (std::holds_alternative<std::string>(v)) {
            any_string = true;
            strings.push_back(std::get<std::string>(v));
        } else if (std::holds_alternative<std::int64_t>(v)) {
            numbers.push_back(static_cast<double>(std::get<std::int64_t>(v)));
        } else if (std::holds_alternative<double>(v)) {
            numbers.push_back(std::get<double>(v));
        } else {
            throw config_error("line " + std::to_string(line_no) +
                               ": arrays may hold numbers or strings only");
        }
    }
    if (any_string && !numbers.empty())
        throw config_error("line " + std::to_string(line_no) + ": mixed array types");
    if (any_string)
        return strings;
    return numbers;
}

} // namespace

TomlTable TomlTable::parse(const std::string& text) {
    TomlTable table;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::string content = trim(strip_comment(line));
        if (content.empty())
            continue;
        if (content.front() == '[')
            throw config_error("line " + std::to_string(line_no) +
                               ": tables are not supported, use flat keys");
        const std::size_t eq = content.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(content.substr(0, eq));
        const std::string value = trim(content.substr(eq + 1));
        if (key.empty())
            throw config_error("line " + std::to_string(line_no) + ": empty key");
        if (table.values_.count(key))
            throw config_error("line " + std::to_string(line_no) + ": duplicate key '" + key +
                               "'");
        if (!value.empty() && value.front() == '[') {
            if (value.back() != ']')
                throw config_error("line " + std::to_string(line_no) +
                                   ": arrays must close on the same line");
            table.values_.emplace(key, parse_array(value.substr(1, value.size() - 2), line_no));
        } else {
            table.values_.emplace(key, parse_scalar(value, line_no));
        }
    }
    return table;
}

TomlTable TomlTable::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

bool TomlTable::has(const std::string& key) const { return values_.count(key) != 0; }

std::vector<std::string> TomlTable::keys() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [key, value] : values_)
        out.push_back(key);
    return out;
}

const TomlTable::Value& TomlTable::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw config_error("missing required key '" + key + "'");
    return it->second;
}

std::int64_t TomlTable::integer(const std::string& key) const {
    const Value& v = get(key);
    if (std::holds_alternative<std::int64_t>(v))
        return std::get<std::int64_t>(v);
    throw config_error("key '" + key + "' must be an integer");
}

std::int64_t TomlTable::integer_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? integer(key) : fallback;
}

double TomlTable::number(const std::string& key) const {
    const Value& v = get(key);
    if (std::holds_alternative<double>(v))
        return std::get<double>(v);
    if (std::holds_alternative<std::int64_t>(v))
        return static_cast<double>(std::get<std::int64_t>(v));
    throw config_error("key '" + key + "' must be a number");
}

double TomlTable::number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

bool TomlTable::boolean_or(const std::string& key, bool fallback) const {
    if (!has(key))
        return fallback;
    const Value& v = get(key);
    if (std::holds_alternative<bool>(v))
        return std::get<bool>(v);
    throw config_error("key '" + key + "' must be a boolean");
}

std::string TomlTable::string(const std::string& key) const {
    const Value& v = get(key);
    if (std::holds_alternative<std::string>(v))
        return std::get<std::string>(v);
    throw config_error("key '" + key + "' must be a string");
}

std::string TomlTable::string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
}

std::vector<double> TomlTable::number_list(const std::string& key) const {
    const Value& v = get(key);
    if (std::holds_alternative<std::vector<double>>(v))
        return std::get<std::vector<double>>(v);
    if (std::holds_alternative<double>(v))
        return {std::get<double>(v)};
    if (std::holds_alternative<std::int64_t>(v))
        return {static_cast<double>(std::get<std::int64_t>(v))};
    throw config_error("key '" + key + "' must be a number or number array");
}

std::vector<double> TomlTable::number_list_or(const std::string& key,
                                              std::vector<double> fallback) const {
    return has(key) ? number_list(key) : fallback;
}

std::vector<std::string> TomlTable::string_list_or(const std::string& key,
                                                   std::vector<std::string> fallback) const {
    if (!has(key))
        return fallback;
    const Value& v = get(key);
    if (std::holds_alternative<std::vector<std::string>>(v))
        return std::get<std::vector<std::string>>(v);
    if (std::holds_alternative<std::string>(v))
        return {std::get<std::string>(v)};
    throw config_error("key '" + key + "' must be a string or string array");
}

} // namespace chanest

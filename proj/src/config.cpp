#include "rdlab/config.hpp"

#include "rdlab/csv.hpp"
#include "rdlab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace rdlab {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

} // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" +
                              stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        }
        if (cfg.values_.count(key)) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        cfg.values_[key] = value;
        cfg.lines_[key] = line_no;
        cfg.order_.push_back(key);
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    try {
        return parse(csv::read_file(path));
    } catch (const DataError& e) {
        throw ConfigError(std::string(e.what()));
    }
}

bool Config::has(const std::string& key) const {
    return values_.count(key) > 0;
}

std::string Config::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("missing required key '" + key + "'");
    }
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string raw = get_string(key);
    double value{};
    const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size()) {
        const auto line = lines_.count(key) ? lines_.at(key) : 0;
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "' is not a number: '" + raw + "'");
    }
    return value;
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string& key) const {
    const std::string raw = get_string(key);
    long value{};
    const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size()) {
        const auto line = lines_.count(key) ? lines_.at(key) : 0;
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "' is not an integer: '" + raw + "'");
    }
    return value;
}

long Config::get_int(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

void Config::require_known_keys(const std::vector<std::string>& allowed) const {
    for (const auto& key : order_) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("line " + std::to_string(lines_.at(key)) + ": unknown key '" + key +
                              "'");
        }
    }
}

void Config::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
}

} // namespace rdlab

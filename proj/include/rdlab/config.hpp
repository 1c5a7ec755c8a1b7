#pragma once

#include <map>
#include <string>
#include <vector>

namespace rdlab {

// Flat key=value configuration text: one `key = value` pair per line,
// '#' starts a comment, blank lines ignored. Errors carry line numbers
// and key names so CLI users can find the offending entry.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const;
    const std::vector<std::string>& keys() const { return order_; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;

    // Rejects any key outside `allowed`, naming the key and its line.
    void require_known_keys(const std::vector<std::string>& allowed) const;

    void set(const std::string& key, const std::string& value);

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, std::size_t> lines_;
    std::vector<std::string> order_;
};

} // namespace rdlab

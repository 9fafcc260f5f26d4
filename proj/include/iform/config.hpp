#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace iform {

// Flat key=value run configuration. Sources in precedence order: built-in
// defaults, then a config file, then command-line flags. Every key must be
// declared for the command; unknown keys fail validation before any
// computation starts.
class RunConfig {
public:
    // '#' starts a comment; blank lines ignored.
    static std::map<std::string, std::string> parse_file(const std::string& path);

    void declare(const std::string& key, const std::string& default_value,
                 const std::string& help);
    void load(const std::map<std::string, std::string>& values);  // throws ConfigError on unknown keys
    void set(const std::string& key, const std::string& value);   // flag override

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;  // true/false/1/0

    // Resolved key=value view (sorted), used for run.json.
    std::vector<std::pair<std::string, std::string>> resolved() const;
    std::string help() const;

private:
    struct Entry {
        std::string value;
        std::string help;
    };
    std::map<std::string, Entry> entries_;
};

}  // namespace iform

#include "iform/config.hpp"

#include <cstdlib>

#include "iform/errors.hpp"
#include "iform/io.hpp"

namespace iform {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> RunConfig::parse_file(const std::string& path) {
    std::string text = read_text_file(path);
    std::map<std::string, std::string> out;
    std::size_t line_no = 0, pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        out[key] = value;
        if (pos > text.size()) break;
    }
    return out;
}

void RunConfig::declare(const std::string& key, const std::string& default_value,
                        const std::string& help) {
    entries_[key] = Entry{default_value, help};
}

void RunConfig::load(const std::map<std::string, std::string>& values) {
    for (const auto& [k, v] : values) {
        auto it = entries_.find(k);
        if (it == entries_.end()) throw ConfigError("unknown config key: " + k);
        it->second.value = v;
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("unknown config key: " + key);
    it->second.value = value;
}

bool RunConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string RunConfig::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("undeclared config key: " + key);
    return it->second.value;
}

double RunConfig::get_double(const std::string& key) const {
    std::string v = get(key);
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": '" + v + "' is not a number");
    return d;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    std::string v = get(key);
    char* end = nullptr;
    long long d = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": '" + v + "' is not an integer");
    return d;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    std::string v = get(key);
    char* end = nullptr;
    unsigned long long d = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": '" + v + "' is not an unsigned integer");
    return d;
}

bool RunConfig::get_bool(const std::string& key) const {
    std::string v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key " + key + ": '" + v + "' is not a boolean");
}

std::vector<std::pair<std::string, std::string>> RunConfig::resolved() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, e] : entries_) out.emplace_back(k, e.value);
    return out;
}

std::string RunConfig::help() const {
    std::string out;
    for (const auto& [k, e] : entries_)
        out += "  " + k + " = " + e.value + "\n      " + e.help + "\n";
    return out;
}

}  // namespace iform

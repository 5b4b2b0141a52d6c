#include "config.hpp"

#include <fstream>
#include <sstream>

#include "canopy/error.hpp"
#include "canopy/text.hpp"

namespace canopy::cli {

Config Config::parse(std::string_view text, const std::string& default_section) {
    Config c;
    std::string section = default_section;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ConfigError("line " + std::to_string(lineno), "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
        c.values_[section + "." + key] = trim(line.substr(eq + 1));
    }
    return c;
}

Config Config::load(const std::string& path, const std::string& default_section) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("config", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), default_section);
}

void Config::set(const std::string& dotted_key, std::string value) {
    if (dotted_key.find('.') == std::string::npos) throw ConfigError(dotted_key, "override key must be section.key");
    values_[dotted_key] = std::move(value);
}

void Config::merge(const Config& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::num(const std::string& key, double fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return parse_double(it->second, key);
    } catch (const canopy::Error&) {
        throw ConfigError(key, "expected a number, got '" + it->second + "'");
    }
}

long long Config::integer(const std::string& key, long long fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return parse_int(it->second, key);
    } catch (const canopy::Error&) {
        throw ConfigError(key, "expected an integer, got '" + it->second + "'");
    }
}

bool Config::flag(const std::string& key, bool fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return parse_bool(it->second, key);
    } catch (const canopy::Error&) {
        throw ConfigError(key, "expected true/false, got '" + it->second + "'");
    }
}

std::vector<double> Config::list(const std::string& key, const std::vector<double>& fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::size_t start = 0;
    const std::string& s = it->second;
    while (start <= s.size()) {
        std::size_t end = s.find(',', start);
        if (end == std::string::npos) end = s.size();
        const std::string item = trim(s.substr(start, end - start));
        if (!item.empty()) {
            try {
                out.push_back(parse_double(item, key));
            } catch (const canopy::Error&) {
                throw ConfigError(key, "expected a comma-separated list of numbers");
            }
        }
        start = end + 1;
    }
    return out;
}

void Config::reject_unused() const {
    for (const auto& [k, v] : values_)
        if (!used_.count(k)) throw ConfigError(k, "unknown configuration key");
}

std::string Config::canonical(const std::set<std::string>& skip) const {
    std::string out;
    for (const auto& [k, v] : values_) {
        bool skipped = false;
        for (const auto& prefix : skip) skipped = skipped || k.rfind(prefix, 0) == 0;
        if (!skipped) out += k + "=" + v + "\n";
    }
    return out;
}

}  // namespace canopy::cli

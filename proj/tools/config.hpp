#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace canopy::cli {

// A configuration problem: bad value, unknown key, or missing input file.
// Maps to exit status 2.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// key=value text with [section] headers; '#' and ';' start comments. Keys
/// seen before any header belong to `default_section`. Values are addressed
/// as "section.key".
class Config {
public:
    static Config parse(std::string_view text, const std::string& default_section = "run");
    static Config load(const std::string& path, const std::string& default_section = "run");

    // Later sets win: used for command-line overrides.
    void set(const std::string& dotted_key, std::string value);
    void merge(const Config& other);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string str(const std::string& key, const std::string& fallback = "") const;
    double num(const std::string& key, double fallback) const;
    long long integer(const std::string& key, long long fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;

    // Throws ConfigError naming the first key that no accessor has read.
    void reject_unused() const;

    // Sorted "section.key=value" lines, skipping keys under the given prefixes.
    std::string canonical(const std::set<std::string>& skip = {}) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

}  // namespace canopy::cli

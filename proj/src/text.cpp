#include "canopy/text.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "canopy/error.hpp"

namespace canopy {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<CsvRow> parse_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const std::string line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        if (line.empty() || line.front() == '#') continue;
        CsvRow row;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            row.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                              : comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

double parse_double(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
        throw InvalidArgument(fmt::format("{}: '{}' is not a number", what, t));
    return v;
}

long parse_int(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
        throw InvalidArgument(fmt::format("{}: '{}' is not an integer", what, t));
    return v;
}

bool parse_bool(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw InvalidArgument(fmt::format("{}: '{}' is not a boolean", what, t));
}

std::string fmt6(double v) {
    if (std::isnan(v)) return "nan";
    if (v == 0.0) return "0";
    return fmt::format("{:.6g}", v);
}

double round6(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(fmt::format("{:.6g}", v).c_str(), nullptr);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace canopy

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace canopy::cli {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

// Record of one run: what went in, what came out, how long each stage took.
class Manifest {
public:
    Manifest(std::string command, std::string canonical_config);

    void add_input(const std::string& field, const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
    void add_stage(const std::string& stage, double seconds);
    void add_note(const std::string& key, const std::string& value);
    void set_threads(unsigned n) { threads_ = n; }

    std::string json() const;

private:
    struct FileEntry {
        std::string field, path, sha256;
        std::uintmax_t bytes;
    };
    std::string command_, config_;
    std::vector<FileEntry> inputs_, outputs_;
    std::vector<std::pair<std::string, double>> stages_;
    std::vector<std::pair<std::string, std::string>> notes_;
    unsigned threads_ = 0;
};

}  // namespace canopy::cli

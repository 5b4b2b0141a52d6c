#include "manifest.hpp"

#include <fstream>
#include <memory>
#include <stdexcept>

#include <Eigen/Core>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <png.h>
#include <zlib.h>

namespace canopy::cli {

namespace {

constexpr const char* kToolVersion = "0.1.0";

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("OpenSSL: SHA-256 unavailable");
    }
    void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), md, &len);
        std::string out;
        for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_hex(std::string_view text) {
    Sha256 h;
    h.update(text.data(), text.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    Sha256 h;
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof buf);
        h.update(buf, static_cast<std::size_t>(f.gcount()));
    }
    return h.hex();
}

Manifest::Manifest(std::string command, std::string canonical_config)
    : command_(std::move(command)), config_(std::move(canonical_config)) {}

void Manifest::add_input(const std::string& field, const std::filesystem::path& path) {
    inputs_.push_back({field, path.string(), sha256_file(path), std::filesystem::file_size(path)});
}

void Manifest::add_output(const std::filesystem::path& path) {
    outputs_.push_back({"", path.filename().string(), sha256_file(path), std::filesystem::file_size(path)});
}

void Manifest::add_stage(const std::string& stage, double seconds) { stages_.emplace_back(stage, seconds); }

void Manifest::add_note(const std::string& key, const std::string& value) { notes_.emplace_back(key, value); }

std::string Manifest::json() const {
    using nlohmann::ordered_json;
    ordered_json j;
    j["tool"] = "canopy";
    j["version"] = kToolVersion;
    j["command"] = command_;
    j["config_sha256"] = sha256_hex(config_);
    ordered_json cfg = ordered_json::object();
    std::size_t start = 0;
    while (start < config_.size()) {
        const auto end = config_.find('\n', start);
        const std::string line = config_.substr(start, end - start);
        const auto eq = line.find('=');
        cfg[line.substr(0, eq)] = line.substr(eq + 1);
        start = end + 1;
    }
    j["config"] = cfg;
    j["inputs"] = ordered_json::array();
    for (const auto& f : inputs_)
        j["inputs"].push_back({{"field", f.field}, {"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["outputs"] = ordered_json::array();
    for (const auto& f : outputs_)
        j["outputs"].push_back({{"file", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["stages"] = ordered_json::array();
    for (const auto& [stage, s] : stages_) j["stages"].push_back({{"stage", stage}, {"seconds", s}});
    ordered_json notes = ordered_json::object();
    for (const auto& [k, v] : notes_) notes[k] = v;
    j["notes"] = notes;
    j["threads"] = threads_;
    j["libraries"] = {{"zlib", zlibVersion()},
                      {"libpng", PNG_LIBPNG_VER_STRING},
                      {"fmt", fmt::format("{}.{}.{}", FMT_VERSION / 10000, FMT_VERSION / 100 % 100, FMT_VERSION % 100)},
                      {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
                      {"openssl", OpenSSL_version(OPENSSL_VERSION)}};
    return j.dump(2) + "\n";
}

}  // namespace canopy::cli

#pragma once

#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "canopy/grid.hpp"
#include "canopy/raster_io.hpp"

namespace canopy::test {

inline std::string data_path(const std::string& name) { return std::string(CANOPY_TEST_DATA) + "/" + name; }

inline RasterHeader header(int w, int h, SampleType t = SampleType::Float32, double px = 1.0) {
    RasterHeader hd;
    hd.width = w;
    hd.height = h;
    hd.sample_type = t;
    hd.geo = {0.0, static_cast<double>(h) * px, px, -px};
    return hd;
}

inline Grid constant(int w, int h, float v, double px = 1.0) { return Grid(header(w, h, SampleType::Float32, px), v); }

inline Grid random_float(int w, int h, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(lo, hi);
    std::vector<float> s(static_cast<std::size_t>(w) * h);
    for (auto& v : s) v = u(rng);
    return Grid(header(w, h), std::move(s));
}

template <class T>
std::vector<T> read_raw(const std::string& name) {
    const Bytes b = read_file(data_path(name));
    std::vector<T> out(b.size() / sizeof(T));
    std::memcpy(out.data(), b.data(), out.size() * sizeof(T));
    return out;
}

}  // namespace canopy::test

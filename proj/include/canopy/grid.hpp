#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace canopy {

enum class SampleType : std::uint8_t { UInt8, UInt16, Float32 };

std::string_view to_string(SampleType t);
std::size_t bytes_per_sample(SampleType t);

// Affine pixel-to-world mapping. The origin is the outer corner of pixel
// (0, 0); pixel_size_y is negative for north-up rasters.
struct GeoTransform {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_size_x = 1.0;
    double pixel_size_y = -1.0;

    double center_x(double col) const { return origin_x + (col + 0.5) * pixel_size_x; }
    double center_y(double row) const { return origin_y + (row + 0.5) * pixel_size_y; }
    // Fractional pixel coordinates whose integer values land on pixel centres.
    double col_of(double x) const { return (x - origin_x) / pixel_size_x - 0.5; }
    double row_of(double y) const { return (y - origin_y) / pixel_size_y - 0.5; }

    bool operator==(const GeoTransform&) const = default;
};

// How the samples were (or will be) laid out on disk. Not part of a grid's
// value identity.
struct StorageLayout {
    enum class Kind : std::uint8_t { Strips, Tiles };
    Kind kind = Kind::Tiles;
    int tile_w = 256;
    int tile_h = 256;
    int rows_per_strip = 0;  // 0 = whole image in one strip

    static StorageLayout strips(int rows_per_strip = 0) {
        return {Kind::Strips, 0, 0, rows_per_strip};
    }
    static StorageLayout tiles(int w, int h) { return {Kind::Tiles, w, h, 0}; }
    bool operator==(const StorageLayout&) const = default;
};

struct RasterHeader {
    int width = 0;
    int height = 0;
    SampleType sample_type = SampleType::Float32;
    std::optional<float> nodata;
    GeoTransform geo;
    std::string crs;  // opaque, compared by equality only
    StorageLayout layout;

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    // Throws InvalidArgument when the header violates the raster invariants.
    void validate() const;
};

// A georeferenced single-band raster. Samples are held as float regardless
// of the declared sample type; every UInt8/UInt16 value is exactly
// representable, and Float32 bit patterns are preserved verbatim.
class Grid {
public:
    Grid() = default;
    Grid(RasterHeader header, std::vector<float> samples);
    Grid(RasterHeader header, float fill);

    // A Float32 grid with the same geometry as `like` and NaN nodata.
    static Grid float_like(const RasterHeader& like, float fill = kNoData);

    static constexpr float kNoData = std::numeric_limits<float>::quiet_NaN();

    const RasterHeader& header() const { return header_; }
    RasterHeader& header() { return header_; }
    int width() const { return header_.width; }
    int height() const { return header_.height; }
    std::size_t size() const { return samples_.size(); }
    const GeoTransform& geo() const { return header_.geo; }

    std::span<const float> samples() const { return samples_; }
    std::span<float> samples() { return samples_; }

    float operator[](std::size_t i) const { return samples_[i]; }
    float& operator[](std::size_t i) { return samples_[i]; }
    float at(int col, int row) const { return samples_[index(col, row)]; }
    float& at(int col, int row) { return samples_[index(col, row)]; }
    std::size_t index(int col, int row) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(header_.width) +
               static_cast<std::size_t>(col);
    }
    bool contains(int col, int row) const {
        return col >= 0 && row >= 0 && col < header_.width && row < header_.height;
    }

    bool is_valid_value(float v) const {
        if (std::isnan(v)) return false;
        return !(header_.nodata && v == *header_.nodata);
    }
    bool is_valid(std::size_t i) const { return is_valid_value(samples_[i]); }
    bool is_valid(int col, int row) const { return is_valid_value(at(col, row)); }

    // The value written into cells that carry no data.
    float nodata_value() const { return header_.nodata ? *header_.nodata : kNoData; }

    double pixel_area() const {
        return std::abs(header_.geo.pixel_size_x * header_.geo.pixel_size_y);
    }
    std::size_t valid_count() const;

private:
    RasterHeader header_;
    std::vector<float> samples_;
};

// Value identity: geometry, sample type, nodata, CRS and every sample bit.
// The storage layout is ignored.
bool bit_identical(const Grid& a, const Grid& b);

// World extent [min_x, max_x] x [min_y, max_y] covered by a header.
struct Extent {
    double min_x, max_x, min_y, max_y;
    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    bool overlaps(const Extent& o) const {
        return min_x < o.max_x && o.min_x < max_x && min_y < o.max_y && o.min_y < max_y;
    }
};
Extent extent_of(const RasterHeader& h);

}  // namespace canopy

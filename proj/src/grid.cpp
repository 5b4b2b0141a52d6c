#include "canopy/grid.hpp"

#include <algorithm>
#include <cstring>

#include "canopy/error.hpp"

namespace canopy {

std::string_view to_string(SampleType t) {
    switch (t) {
        case SampleType::UInt8: return "UInt8";
        case SampleType::UInt16: return "UInt16";
        case SampleType::Float32: return "Float32";
    }
    return "?";
}

std::size_t bytes_per_sample(SampleType t) {
    switch (t) {
        case SampleType::UInt8: return 1;
        case SampleType::UInt16: return 2;
        case SampleType::Float32: return 4;
    }
    return 0;
}

void RasterHeader::validate() const {
    if (width < 1 || height < 1) throw InvalidArgument("raster dimensions must be >= 1");
    if (!(geo.pixel_size_x > 0.0)) throw InvalidArgument("pixel_size_x must be > 0");
    if (geo.pixel_size_y == 0.0 || std::isnan(geo.pixel_size_y))
        throw InvalidArgument("pixel_size_y must be non-zero");
    if (layout.kind == StorageLayout::Kind::Tiles) {
        if (layout.tile_w < 16 || layout.tile_h < 16 || layout.tile_w % 16 != 0 ||
            layout.tile_h % 16 != 0)
            throw InvalidArgument("tile dimensions must be positive multiples of 16");
    } else if (layout.rows_per_strip < 0) {
        throw InvalidArgument("rows_per_strip must be >= 0");
    }
}

Grid::Grid(RasterHeader header, std::vector<float> samples)
    : header_(std::move(header)), samples_(std::move(samples)) {
    header_.validate();
    if (samples_.size() != header_.pixel_count())
        throw InvalidArgument("sample count does not match width x height");
}

Grid::Grid(RasterHeader header, float fill) : header_(std::move(header)) {
    header_.validate();
    samples_.assign(header_.pixel_count(), fill);
}

Grid Grid::float_like(const RasterHeader& like, float fill) {
    RasterHeader h = like;
    h.sample_type = SampleType::Float32;
    h.nodata = kNoData;
    return Grid(std::move(h), fill);
}

std::size_t Grid::valid_count() const {
    return static_cast<std::size_t>(
        std::count_if(samples_.begin(), samples_.end(), [this](float v) { return is_valid_value(v); }));
}

bool bit_identical(const Grid& a, const Grid& b) {
    const auto& ha = a.header();
    const auto& hb = b.header();
    if (ha.width != hb.width || ha.height != hb.height || ha.sample_type != hb.sample_type ||
        !(ha.geo == hb.geo) || ha.crs != hb.crs)
        return false;
    if (ha.nodata.has_value() != hb.nodata.has_value()) return false;
    if (ha.nodata && std::memcmp(&*ha.nodata, &*hb.nodata, sizeof(float)) != 0) return false;
    return a.size() == b.size() &&
           std::memcmp(a.samples().data(), b.samples().data(), a.size() * sizeof(float)) == 0;
}

Extent extent_of(const RasterHeader& h) {
    const double x0 = h.geo.origin_x;
    const double x1 = h.geo.origin_x + h.width * h.geo.pixel_size_x;
    const double y0 = h.geo.origin_y;
    const double y1 = h.geo.origin_y + h.height * h.geo.pixel_size_y;
    return {std::min(x0, x1), std::max(x0, x1), std::min(y0, y1), std::max(y0, y1)};
}

}  // namespace canopy

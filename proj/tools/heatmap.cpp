#include "heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <png.h>

namespace canopy::cli {

namespace {

constexpr std::array<std::array<double, 3>, 5> kViridis{{
    {68, 1, 84},
    {59, 82, 139},
    {33, 145, 140},
    {94, 201, 98},
    {253, 231, 37},
}};

constexpr std::array<Rgba, 8> kClasses{{
    {230, 25, 75, 255},
    {60, 180, 75, 255},
    {0, 130, 200, 255},
    {245, 130, 48, 255},
    {145, 30, 180, 255},
    {70, 240, 240, 255},
    {240, 50, 230, 255},
    {210, 245, 60, 255},
}};

Rgba ramp(double t) {
    t = std::clamp(t, 0.0, 1.0) * (kViridis.size() - 1);
    const std::size_t i = std::min(kViridis.size() - 2, static_cast<std::size_t>(t));
    const double f = t - static_cast<double>(i);
    Rgba c{0, 0, 0, 255};
    for (int k = 0; k < 3; ++k)
        c[k] = static_cast<std::uint8_t>(std::lround(kViridis[i][k] + f * (kViridis[i + 1][k] - kViridis[i][k])));
    return c;
}

void write_cb(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + n);
}

}  // namespace

std::vector<Rgba> colorize(const Grid& grid, Palette palette) {
    std::vector<Rgba> px(grid.size(), Rgba{0, 0, 0, 0});
    if (palette == Palette::Categorical) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!grid.is_valid(i)) continue;
            const long label = std::lround(grid[i]);
            px[i] = label <= 0 ? Rgba{128, 128, 128, 255} : kClasses[static_cast<std::size_t>(label - 1) % kClasses.size()];
        }
        return px;
    }
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.is_valid(i)) {
            lo = std::min(lo, double(grid[i]));
            hi = std::max(hi, double(grid[i]));
        }
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.is_valid(i)) px[i] = ramp((grid[i] - lo) / span);
    return px;
}

std::vector<std::uint8_t> render_heatmap(const Grid& grid, Palette palette) {
    const std::vector<Rgba> px = colorize(grid, palette);
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng: cannot create write struct");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng: encoding failed");
    }
    png_set_write_fn(png, &out, write_cb, nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(grid.width()), static_cast<png_uint_32>(grid.height()), 8,
                 PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    for (int r = 0; r < grid.height(); ++r)
        png_write_row(png, reinterpret_cast<png_const_bytep>(px.data() + grid.index(0, r)));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

}  // namespace canopy::cli

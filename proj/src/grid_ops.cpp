#include "canopy/grid_ops.hpp"

#include <algorithm>
#include <cmath>

#include "canopy/error.hpp"

namespace canopy {

bool same_geometry(const RasterHeader& a, const RasterHeader& b) {
    return a.width == b.width && a.height == b.height && a.geo == b.geo;
}

Grid resample_onto(const RasterHeader& target, const Grid& src, Resampling method) {
    RasterHeader h = target;
    h.crs = src.header().crs;
    h.layout = src.header().layout;
    if (method == Resampling::Bilinear || src.header().sample_type == SampleType::Float32) {
        h.sample_type = SampleType::Float32;
        h.nodata = src.header().nodata ? src.header().nodata : std::optional<float>(Grid::kNoData);
    } else {
        h.sample_type = src.header().sample_type;
        h.nodata = src.header().nodata;
    }
    Grid out(h, h.nodata ? *h.nodata : 0.0f);
    const GeoTransform& sg = src.geo();
    const Extent ext = extent_of(src.header());
    const int sw = src.width(), sh = src.height();

    parallel_for(static_cast<std::size_t>(h.height), [&](std::size_t row) {
        const int r = static_cast<int>(row);
        const double y = h.geo.center_y(r);
        for (int c = 0; c < h.width; ++c) {
            const double x = h.geo.center_x(c);
            if (x < ext.min_x || x > ext.max_x || y < ext.min_y || y > ext.max_y) continue;
            if (method == Resampling::Nearest) {
                const int sc = std::clamp(static_cast<int>(std::floor((x - sg.origin_x) / sg.pixel_size_x)), 0, sw - 1);
                const int sr = std::clamp(static_cast<int>(std::floor((y - sg.origin_y) / sg.pixel_size_y)), 0, sh - 1);
                const float v = src.at(sc, sr);
                if (src.is_valid_value(v)) out.at(c, r) = v;
                continue;
            }
            const double fc = std::clamp(sg.col_of(x), 0.0, double(sw - 1));
            const double fr = std::clamp(sg.row_of(y), 0.0, double(sh - 1));
            const int c0 = static_cast<int>(std::floor(fc)), r0 = static_cast<int>(std::floor(fr));
            const int c1 = std::min(c0 + 1, sw - 1), r1 = std::min(r0 + 1, sh - 1);
            const double tx = fc - c0, ty = fr - r0;
            const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
            const float v[4] = {src.at(c0, r0), src.at(c1, r0), src.at(c0, r1), src.at(c1, r1)};
            double acc = 0.0;
            bool ok = true;
            for (int k = 0; k < 4; ++k) {
                if (w[k] == 0.0) continue;
                if (!src.is_valid_value(v[k])) {
                    ok = false;
                    break;
                }
                acc += w[k] * v[k];
            }
            if (ok) out.at(c, r) = static_cast<float>(acc);
        }
    });
    return out;
}

GridPair align(const Grid& a, const Grid& b, Resampling method) {
    if (a.header().crs != b.header().crs) throw CrsMismatch(a.header().crs, b.header().crs);
    if (!extent_of(a.header()).overlaps(extent_of(b.header()))) throw DisjointExtents();
    if (same_geometry(a.header(), b.header())) return {a, b, GridPair::Alignment::Exact, method};
    return {a, resample_onto(a.header(), b, method), GridPair::Alignment::Resampled, method};
}

Grid focal(const Grid& grid, int radius, FocalStat stat) {
    if (radius < 0) throw InvalidArgument("focal radius must be >= 0");
    RasterHeader h = grid.header();
    h.sample_type = SampleType::Float32;
    if (!h.nodata) h.nodata = Grid::kNoData;
    Grid out(h, *h.nodata);
    const int w = grid.width(), ht = grid.height();

    parallel_for(static_cast<std::size_t>(ht), [&](std::size_t row) {
        const int r = static_cast<int>(row);
        std::vector<float> window;
        window.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)));
        for (int c = 0; c < w; ++c) {
            window.clear();
            for (int rr = std::max(0, r - radius); rr <= std::min(ht - 1, r + radius); ++rr)
                for (int cc = std::max(0, c - radius); cc <= std::min(w - 1, c + radius); ++cc) {
                    const float v = grid.at(cc, rr);
                    if (grid.is_valid_value(v)) window.push_back(v);
                }
            if (window.empty()) continue;
            float result = 0.0f;
            switch (stat) {
                case FocalStat::Mean: {
                    double s = 0.0;
                    for (float v : window) s += v;
                    result = static_cast<float>(s / double(window.size()));
                    break;
                }
                case FocalStat::Max: result = *std::max_element(window.begin(), window.end()); break;
                case FocalStat::Min: result = *std::min_element(window.begin(), window.end()); break;
                case FocalStat::Median: {
                    const std::size_t mid = window.size() / 2;
                    std::nth_element(window.begin(), window.begin() + mid, window.end());
                    const float upper = window[mid];
                    if (window.size() % 2 == 1) {
                        result = upper;
                    } else {
                        const float lower = *std::max_element(window.begin(), window.begin() + mid);
                        result = static_cast<float>(0.5 * (double(lower) + double(upper)));
                    }
                    break;
                }
            }
            out.at(c, r) = result;
        }
    });
    return out;
}

Grid crop(const Grid& grid, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > grid.width() || y0 + h > grid.height())
        throw InvalidArgument("crop window outside grid");
    RasterHeader hd = grid.header();
    hd.width = w;
    hd.height = h;
    hd.geo.origin_x = grid.geo().origin_x + x0 * grid.geo().pixel_size_x;
    hd.geo.origin_y = grid.geo().origin_y + y0 * grid.geo().pixel_size_y;
    std::vector<float> s(static_cast<std::size_t>(w) * h);
    for (int r = 0; r < h; ++r)
        std::copy_n(grid.samples().begin() + grid.index(x0, y0 + r), w, s.begin() + std::size_t(r) * w);
    return Grid(std::move(hd), std::move(s));
}

Grid for_each_tile(const Grid& grid, const TileCursor& cursor, const TileFn& f) {
    if (cursor.tile_w < 1 || cursor.tile_h < 1 || cursor.overlap < 0)
        throw InvalidArgument("tile cursor needs positive tile size and non-negative overlap");
    const int across = (grid.width() + cursor.tile_w - 1) / cursor.tile_w;
    const int down = (grid.height() + cursor.tile_h - 1) / cursor.tile_h;
    const std::size_t ntiles = std::size_t(across) * down;

    std::vector<Grid> results(ntiles);
    struct Window { int x0, y0, core_x, core_y, core_w, core_h; };
    std::vector<Window> windows(ntiles);
    parallel_for(ntiles, [&](std::size_t i) {
        const int tx = static_cast<int>(i) % across, ty = static_cast<int>(i) / across;
        const int cx = tx * cursor.tile_w, cy = ty * cursor.tile_h;
        const int cw = std::min(cursor.tile_w, grid.width() - cx);
        const int ch = std::min(cursor.tile_h, grid.height() - cy);
        const int x0 = std::max(0, cx - cursor.overlap), y0 = std::max(0, cy - cursor.overlap);
        const int x1 = std::min(grid.width(), cx + cw + cursor.overlap);
        const int y1 = std::min(grid.height(), cy + ch + cursor.overlap);
        Grid tile = f(crop(grid, x0, y0, x1 - x0, y1 - y0));
        if (tile.width() != x1 - x0 || tile.height() != y1 - y0)
            throw InvalidArgument("tile function changed the tile size");
        results[i] = std::move(tile);
        windows[i] = {x0, y0, cx, cy, cw, ch};
    });

    RasterHeader h = grid.header();
    h.sample_type = results.front().header().sample_type;
    h.nodata = results.front().header().nodata;
    Grid out(h, 0.0f);
    for (std::size_t i = 0; i < ntiles; ++i) {
        const Window& wdw = windows[i];
        const Grid& t = results[i];
        for (int r = 0; r < wdw.core_h; ++r)
            for (int c = 0; c < wdw.core_w; ++c)
                out.at(wdw.core_x + c, wdw.core_y + r) = t.at(wdw.core_x - wdw.x0 + c, wdw.core_y - wdw.y0 + r);
    }
    return out;
}

}  // namespace canopy

#pragma once

#include <functional>

#include "canopy/grid.hpp"
#include "canopy/parallel.hpp"

namespace canopy {

enum class Resampling { Nearest, Bilinear };

struct GridPair {
    enum class Alignment { Exact, Resampled };
    Grid a;
    Grid b;
    Alignment alignment = Alignment::Exact;
    Resampling method = Resampling::Bilinear;
};

bool same_geometry(const RasterHeader& a, const RasterHeader& b);

// Resample `src` onto the pixel grid described by `target`. Cells whose
// centre falls outside src's extent are nodata; bilinear cells with a nodata
// neighbour of non-zero weight are nodata.
Grid resample_onto(const RasterHeader& target, const Grid& src, Resampling method);

// Bring b onto a's grid. Throws CrsMismatch or DisjointExtents.
GridPair align(const Grid& a, const Grid& b, Resampling method);

// Elementwise combine of an aligned pair into a Float32 grid. Cells where
// either operand is nodata are nodata in the result.
template <class F>
Grid map2(const GridPair& pair, F&& f) {
    Grid out = Grid::float_like(pair.a.header());
    const std::size_t n = out.size();
    const std::size_t rows = static_cast<std::size_t>(out.height());
    const std::size_t w = static_cast<std::size_t>(out.width());
    parallel_for(rows, [&](std::size_t r) {
        for (std::size_t i = r * w; i < (r + 1) * w && i < n; ++i) {
            const float av = pair.a[i], bv = pair.b[i];
            if (pair.a.is_valid_value(av) && pair.b.is_valid_value(bv)) out[i] = static_cast<float>(f(av, bv));
        }
    });
    return out;
}

enum class FocalStat { Mean, Median, Max, Min };

// Square (2r+1)^2 window statistic over valid cells, clipped at the grid
// border. The result is Float32; it keeps the input's nodata value if it has
// one, NaN otherwise. Windows without valid cells produce nodata.
Grid focal(const Grid& grid, int radius, FocalStat stat);

// Copy of the sub-rectangle [x0, x0+w) x [y0, y0+h) with its geotransform
// shifted accordingly.
Grid crop(const Grid& grid, int x0, int y0, int w, int h);

struct TileCursor {
    int tile_w = 512;
    int tile_h = 512;
    int overlap = 0;  // halo in pixels on every side, clipped at the grid border
};

using TileFn = std::function<Grid(const Grid&)>;

// Applies f to each tile (plus halo) and stitches the tile cores together.
// Equal to f(grid) whenever f's neighbourhood support is <= overlap.
Grid for_each_tile(const Grid& grid, const TileCursor& cursor, const TileFn& f);

}  // namespace canopy

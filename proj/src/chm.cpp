#include "canopy/chm.hpp"

#include <algorithm>
#include <array>
#include <atomic>

#include "canopy/error.hpp"
#include "canopy/grid_ops.hpp"

namespace canopy {

void ChmParams::validate() const {
    if (!(max_plausible_height > 0.0f)) throw InvalidArgument("max_plausible_height must be > 0");
    if (smooth_radius < 0) throw InvalidArgument("smooth_radius must be >= 0");
}

Grid derive_chm(const Grid& dsm, const Grid& dem, const ChmParams& params) {
    params.validate();
    const GridPair pair = align(dsm, dem, Resampling::Bilinear);
    const bool clamp = params.clamp_negative;
    const float cap = params.max_plausible_height;
    Grid chm = map2(pair, [clamp, cap](float surface, float ground) {
        float h = surface - ground;
        if (clamp && h < 0.0f) h = 0.0f;
        return h > cap ? Grid::kNoData : h;
    });
    if (params.smooth_radius == 0) return chm;
    const int r = params.smooth_radius;
    // Cells removed by the cap stay nodata; smoothing only touches valid cells.
    return for_each_tile(chm, {512, 512, r}, [r](const Grid& tile) {
        Grid out = focal(tile, r, FocalStat::Median);
        for (std::size_t i = 0; i < out.size(); ++i)
            if (!tile.is_valid(i)) out[i] = Grid::kNoData;
        return out;
    });
}

Grid fill_pits(const Grid& chm, float max_pit_depth) {
    if (max_pit_depth < 0.0f) throw InvalidArgument("max_pit_depth must be >= 0");
    Grid cur = chm;
    const int w = chm.width(), h = chm.height();
    for (;;) {
        Grid next = cur;
        std::atomic<bool> changed{false};
        parallel_for(static_cast<std::size_t>(std::max(0, h - 2)), [&](std::size_t i) {
            const int r = static_cast<int>(i) + 1;
            std::array<float, 8> nb;
            for (int c = 1; c < w - 1; ++c) {
                const float v = cur.at(c, r);
                if (!cur.is_valid_value(v)) continue;
                int k = 0;
                bool complete = true;
                for (int dr = -1; dr <= 1 && complete; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        const float n = cur.at(c + dc, r + dr);
                        if (!cur.is_valid_value(n)) {
                            complete = false;
                            break;
                        }
                        nb[k++] = n;
                    }
                if (!complete) continue;
                std::sort(nb.begin(), nb.end());
                if (!(nb[0] - v > max_pit_depth)) continue;
                next.at(c, r) = static_cast<float>(0.5 * (double(nb[3]) + double(nb[4])));
                changed.store(true, std::memory_order_relaxed);
            }
        });
        if (!changed.load()) return next;
        cur = std::move(next);
    }
}

}  // namespace canopy

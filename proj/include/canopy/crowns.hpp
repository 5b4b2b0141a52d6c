#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "canopy/grid.hpp"

namespace canopy {

struct CrownParams {
    double min_tree_height = 3.0;       // m
    double window_fraction = 0.10;      // search radius as a fraction of height
    double min_window_radius = 1.0;     // m
    double crown_floor_fraction = 0.3;  // crowns stop below this share of apex height

    void validate() const;
    // Search radius in metres for a pixel of the given height.
    double window_radius(double height) const {
        return std::max(min_window_radius, window_fraction * height);
    }
};

struct TreeTop {
    int col = 0, row = 0;
    double x = 0.0, y = 0.0;  // world coordinates of the pixel centre
    double height = 0.0;
};

/// Local maxima of the CHM inside a circular window whose radius grows with
/// height. A pixel qualifies when it is >= min_tree_height and no valid pixel
/// in its window is higher; equal pixels in the window lose to the lowest
/// (row, col). Sorted by descending height, then (row, col).
std::vector<TreeTop> detect_treetops(const Grid& chm, const CrownParams& params);

struct CrownRecord {
    int tree_id = 0;  // 1-based, index into the marker list + 1
    TreeTop top;
    double crown_area = 0.0;      // m^2
    double crown_diameter = 0.0;  // equivalent circle, m
    int species_id = 0;           // modal non-zero species label over the crown, 0 if none
    std::size_t pixel_count = 0;
};

// Per-pixel crown assignment; 0 = unassigned.
struct LabelImage {
    int width = 0, height = 0;
    GeoTransform geo;
    std::vector<std::int32_t> ids;

    std::int32_t at(int col, int row) const { return ids[static_cast<std::size_t>(row) * width + col]; }
};

struct WatershedResult {
    std::vector<CrownRecord> crowns;
    LabelImage labels;
};

/// Marker-controlled flood of the CHM from the given tops, highest pixels
/// first with first-in-first-out order among equal heights. A pixel joins a
/// crown only if chm >= min_tree_height and chm >= crown_floor_fraction x the
/// crown's top height. `species` must share the CHM geometry.
/// Throws MarkerOutsideCanopy for a top below min_tree_height.
WatershedResult watershed_crowns(const Grid& chm, const std::vector<TreeTop>& tops, const Grid& species,
                                 const CrownParams& params);

struct Histogram {
    double bin_width = 1.0;
    std::vector<std::size_t> counts;  // bin k covers [k*w, (k+1)*w)
};

struct CensusSummary {
    std::size_t tree_count = 0;
    std::map<int, std::size_t> per_species;
    Histogram height{5.0, {}};
    Histogram crown_diameter{1.0, {}};
    double area_ha = 0.0;
    double stems_per_ha = 0.0;
};

CensusSummary census(const std::vector<CrownRecord>& crowns, double area_ha);

// RFC 7946 FeatureCollection with one (Multi)Polygon per crown traced along
// pixel edges. Outer rings are counter-clockwise, holes clockwise.
std::string crowns_geojson(const std::vector<CrownRecord>& crowns, const LabelImage& labels);

}  // namespace canopy

#pragma once

#include "canopy/grid.hpp"

namespace canopy {

struct ChmParams {
    bool clamp_negative = true;
    float max_plausible_height = 90.0f;  // metres; taller cells become nodata
    int smooth_radius = 1;               // median window radius in pixels, 0 disables

    void validate() const;
};

/// Canopy height = DSM - DEM on the DSM's pixel grid.
///
/// The DEM is bilinearly resampled onto the DSM when the geometries differ
/// (never the other way round). Negative heights are clamped to zero when
/// requested, heights above the plausibility cap become nodata, and the result
/// is median-smoothed with `smooth_radius`. Throws CrsMismatch/DisjointExtents.
Grid derive_chm(const Grid& dsm, const Grid& dem, const ChmParams& params = {});

/// Raises single-pixel pits: any cell lower than all 8 valid neighbours by more
/// than `max_pit_depth` takes the neighbour median. Repeats until no such cell
/// remains.
Grid fill_pits(const Grid& chm, float max_pit_depth);

}  // namespace canopy

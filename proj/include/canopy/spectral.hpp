#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "canopy/grid.hpp"

namespace canopy {

// Reflectance centroid of one species in (red, green, blue, nir), each in [0, 1].
struct SpectralSignature {
    int species_id = 0;  // 1..255; 0 is reserved for ground / non-canopy
    std::array<double, 4> centroid{};
    std::string label;
};

void validate_signatures(std::span<const SpectralSignature> signatures);

struct RgbNir {
    Grid red, green, blue, nir;
};

// (nir - red) / (nir + red); nodata where either band is nodata or the sum is 0.
Grid ndvi(const Grid& red, const Grid& nir);

/// Nearest-centroid species map (UInt8). Pixels whose NDVI is below the
/// threshold, or that carry nodata in any band, get id 0. Distance ties go to
/// the lowest species_id. Bands must share one geometry.
Grid classify_pixels(const RgbNir& bands, std::span<const SpectralSignature> signatures,
                     float ndvi_canopy_threshold = 0.3f);

/// Each labelled (non-zero) pixel takes the modal non-zero label in its
/// (2r+1)^2 window; a tie for the mode keeps the original label. Ground
/// pixels stay ground.
Grid majority_filter(const Grid& species_map, int radius);

}  // namespace canopy

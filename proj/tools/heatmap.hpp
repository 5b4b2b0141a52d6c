#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "canopy/grid.hpp"

namespace canopy::cli {

enum class Palette {
    Viridis,      // continuous: grid minimum to the first colour, maximum to the last
    Categorical,  // integer labels; 0 drawn grey, others cycle through a fixed set
};

using Rgba = std::array<std::uint8_t, 4>;

// Colour of each pixel; nodata is fully transparent.
std::vector<Rgba> colorize(const Grid& grid, Palette palette);

// 8-bit RGBA PNG of the colorized grid.
std::vector<std::uint8_t> render_heatmap(const Grid& grid, Palette palette);

}  // namespace canopy::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "canopy/grid.hpp"

namespace canopy {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

enum class Compression : std::uint8_t { None = 1, Deflate = 8 };

struct TiffWriteOptions {
    StorageLayout layout = StorageLayout::tiles(256, 256);
    Compression compression = Compression::Deflate;
    // Horizontal differencing. Only applied together with Deflate.
    bool predictor = true;
};

/// Decode a single-band GeoTIFF from the supported subset:
///   - classic TIFF, either byte order, first IFD only
///   - UInt8, UInt16 or Float32 samples
///   - strips or tiles, Compression 1 (none) or 8 (Deflate), Predictor 1 or 2
///   - ModelPixelScale + ModelTiepoint georeferencing, GDAL_NODATA
///
/// Throws UnsupportedFeature or Malformed; both report the byte offset.
Grid read_geotiff(ByteView bytes);

/// Extract one band of a chunky (PlanarConfiguration=1) 1-4 band image.
Grid read_geotiff_band(ByteView bytes, int band);

/// Samples per pixel declared by the first IFD.
int geotiff_band_count(ByteView bytes);

/// Encode as little-endian GeoTIFF. The grid's own layout field is ignored;
/// `options.layout` decides the on-disk arrangement.
Bytes write_geotiff(const Grid& grid, const TiffWriteOptions& options = {});

/// Encode 3 or 4 geometry-identical grids as one pixel-interleaved image.
Bytes write_geotiff_bands(std::span<const Grid> bands, const TiffWriteOptions& options = {});

/// Plain "CCR1" container: fixed little-endian header followed by raw samples.
Bytes write_internal(const Grid& grid);
Grid read_internal(ByteView bytes);

// File helpers. load_raster picks the decoder from the magic bytes.
Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView bytes);
Grid load_raster(const std::filesystem::path& path);
Grid load_raster_band(const std::filesystem::path& path, int band);
void save_geotiff(const std::filesystem::path& path, const Grid& grid,
                  const TiffWriteOptions& options = {});

}  // namespace canopy

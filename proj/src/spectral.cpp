#include "canopy/spectral.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "canopy/error.hpp"
#include "canopy/grid_ops.hpp"

namespace canopy {

void validate_signatures(std::span<const SpectralSignature> signatures) {
    if (signatures.empty()) throw EmptySignatureSet();
    std::set<int> ids;
    std::set<std::array<double, 4>> centroids;
    for (const auto& s : signatures) {
        if (s.species_id < 1 || s.species_id > 255)
            throw InvalidArgument("species_id must be in 1..255, got " + std::to_string(s.species_id));
        if (!ids.insert(s.species_id).second)
            throw InvalidArgument("duplicate species_id " + std::to_string(s.species_id));
        for (double v : s.centroid)
            if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("signature components must lie in [0, 1]");
        if (!centroids.insert(s.centroid).second)
            throw InvalidArgument("species " + std::to_string(s.species_id) + " duplicates another centroid");
    }
}

Grid ndvi(const Grid& red, const Grid& nir) {
    if (!same_geometry(red.header(), nir.header())) throw InvalidArgument("ndvi bands are not aligned");
    const GridPair pair{red, nir, GridPair::Alignment::Exact, Resampling::Nearest};
    return map2(pair, [](float r, float n) {
        const double sum = double(n) + double(r);
        return sum == 0.0 ? Grid::kNoData : static_cast<float>((double(n) - double(r)) / sum);
    });
}

Grid classify_pixels(const RgbNir& bands, std::span<const SpectralSignature> signatures,
                     float ndvi_canopy_threshold) {
    validate_signatures(signatures);
    const Grid* b[4] = {&bands.red, &bands.green, &bands.blue, &bands.nir};
    for (const Grid* g : b)
        if (!same_geometry(g->header(), bands.red.header())) throw InvalidArgument("RGB-NIR bands are not aligned");

    std::vector<SpectralSignature> sorted(signatures.begin(), signatures.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const SpectralSignature& x, const SpectralSignature& y) { return x.species_id < y.species_id; });

    RasterHeader h = bands.red.header();
    h.sample_type = SampleType::UInt8;
    h.nodata.reset();
    Grid out(h, 0.0f);
    const std::size_t w = static_cast<std::size_t>(h.width);
    parallel_for(static_cast<std::size_t>(h.height), [&](std::size_t row) {
        for (std::size_t i = row * w; i < (row + 1) * w; ++i) {
            double px[4];
            bool valid = true;
            for (int k = 0; k < 4; ++k) {
                const float v = (*b[k])[i];
                if (!b[k]->is_valid_value(v)) valid = false;
                px[k] = v;
            }
            if (!valid) continue;
            const double sum = px[3] + px[0];
            if (sum == 0.0 || (px[3] - px[0]) / sum < ndvi_canopy_threshold) continue;
            double best = std::numeric_limits<double>::infinity();
            int best_id = 0;
            for (const auto& s : sorted) {
                double d = 0.0;
                for (int k = 0; k < 4; ++k) d += (px[k] - s.centroid[k]) * (px[k] - s.centroid[k]);
                if (d < best) {
                    best = d;
                    best_id = s.species_id;
                }
            }
            out[i] = static_cast<float>(best_id);
        }
    });
    return out;
}

Grid majority_filter(const Grid& species_map, int radius) {
    if (radius < 0) throw InvalidArgument("majority_filter radius must be >= 0");
    Grid out = species_map;
    const int w = species_map.width(), h = species_map.height();
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
        const int r = static_cast<int>(row);
        std::array<int, 256> counts{};
        for (int c = 0; c < w; ++c) {
            const int own = static_cast<int>(species_map.at(c, r));
            if (own == 0) continue;
            counts.fill(0);
            for (int rr = std::max(0, r - radius); rr <= std::min(h - 1, r + radius); ++rr)
                for (int cc = std::max(0, c - radius); cc <= std::min(w - 1, c + radius); ++cc) {
                    const int l = static_cast<int>(species_map.at(cc, rr));
                    if (l > 0 && l < 256) ++counts[l];
                }
            const int top = *std::max_element(counts.begin() + 1, counts.end());
            if (counts[own] == top) continue;
            int winner = 0, winners = 0;
            for (int l = 1; l < 256; ++l)
                if (counts[l] == top) {
                    winner = l;
                    ++winners;
                }
            if (winners == 1) out.at(c, r) = static_cast<float>(winner);
        }
    });
    return out;
}

}  // namespace canopy

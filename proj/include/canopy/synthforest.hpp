#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "canopy/allometry.hpp"
#include "canopy/grid.hpp"
#include "canopy/species.hpp"

namespace canopy {

enum class Placement : std::uint8_t {
    MaternII,        // hard-core thinning of a Poisson process
    NonOverlapping,  // sequential inhibition on crown discs plus a gap
};

struct SynthParams {
    std::uint64_t seed = 1;
    double width_m = 200.0, height_m = 200.0;
    double resolution = 0.25;  // m/px
    double origin_x = 500000.0, origin_y = 9000000.0;  // lower-left corner
    std::string crs = "EPSG:32718";

    double stems_per_ha = 250.0;
    SpeciesCatalog species = default_species();
    std::vector<double> proportions;  // per catalog entry; empty means equal shares

    // Lognormal tree height: log(H) ~ N(height_mu, height_sigma), redrawn
    // below min_height, clamped at max_height.
    double height_mu = 2.89;  // median about 18 m
    double height_sigma = 0.25;
    double min_height = 5.0;
    double max_height = 60.0;
    // Height-diameter curve H = hd_a * DBH^hd_b, used to place a crown on
    // each height through the inverse of the crown-to-DBH bridge.
    double hd_a = 2.4, hd_b = 0.6;

    Placement placement = Placement::MaternII;
    double hardcore_fraction = 0.4;  // Matern radius, as a fraction of mean crown diameter
    double crown_gap = 1.0;          // NonOverlapping: clearance between crown edges, m
    bool crowns_inside = false;      // keep only crowns entirely inside the extent

    // Multiplicative field 1 + heterogeneity * g(x, y), g in [-1, 1] the mean of
    // four random plane waves with wavelengths in [L/2, 3L/2]. It thins stems
    // and scales the local median height by 1 + heterogeneity * g / 2.
    double heterogeneity = 0.0;
    double heterogeneity_wavelength = 600.0;

    double terrain_base = 150.0;
    double terrain_amplitude = 20.0;  // summed over all waves
    int terrain_waves = 3;

    double spectral_noise = 0.03;

    void validate() const;
    int width_px() const;
    int height_px() const;
    RasterHeader raster_header() const;
    double area_ha() const { return width_m * height_m / 1e4; }
};

struct TruthTree {
    int tree_id = 0;
    double x = 0.0, y = 0.0;  // stem position = crown apex, world m
    double height = 0.0;
    double crown_diameter = 0.0;
    int species_id = 0;
    double dbh = 0.0;  // cm, via the crown bridge
    double agb = 0.0;  // kg
    double carbon = 0.0;
    double co2e = 0.0;
};

struct GroundTruth {
    std::vector<TruthTree> trees;
    Grid dem;
    StandCarbon totals;
    double requested_density = 0.0;  // stems/ha
    double realized_density = 0.0;
};

// Heights of the crown surface of `tree` at distance d from the apex; 0
// outside the crown disc.
double crown_surface(const TruthTree& tree, double d);

// Mean crown diameter implied by the height distribution and species mix,
// ignoring truncation and heterogeneity.
double expected_crown_diameter(const SynthParams& params);

GroundTruth generate(const SynthParams& params, const AllometricModel& model = tropical_with_height());

struct SceneRasters {
    Grid dsm, dem, red, green, blue, nir;
    // 1-based index into truth.trees of the crown on top at each pixel, 0 for ground.
    std::vector<std::int32_t> owner;
};

SceneRasters render(const GroundTruth& truth, const SynthParams& params);

// Trees whose apex pixel shows their own crown: what an overhead census can see.
std::vector<bool> visible_trees(const GroundTruth& truth, const SceneRasters& scene);

// Truth tree list: tree_id,x,y,height_m,crown_diameter_m,species_id,dbh_cm,agb_kg,carbon_kg,co2e_kg
std::string truth_csv(const GroundTruth& truth);
std::string truth_json(const GroundTruth& truth, const SynthParams& params);

}  // namespace canopy

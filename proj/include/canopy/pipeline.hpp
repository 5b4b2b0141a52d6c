#pragma once

#include <optional>
#include <string>
#include <vector>

#include "canopy/allometry.hpp"
#include "canopy/chm.hpp"
#include "canopy/crowns.hpp"
#include "canopy/species.hpp"

namespace canopy {

struct InventoryParams {
    ChmParams chm;
    float pit_depth = 0.0f;  // fill_pits threshold in m; 0 disables
    CrownParams crowns;
    float ndvi_threshold = 0.3f;
    int majority_radius = 1;  // 0 disables the species despeckle
    double carbon_fraction = kDefaultCarbonFraction;

    void validate() const;
};

struct InventoryInputs {
    Grid dsm, dem;
    // Either all four bands or a ready species map.
    std::optional<RgbNir> bands;
    std::optional<Grid> species_map;
};

struct TreeRecord {
    int tree_id = 0;
    double x = 0.0, y = 0.0;
    double height = 0.0;  // m, highest unsmoothed CHM cell under the smoothing window at the top
    double crown_diameter = 0.0, crown_area = 0.0;
    int species_id = 0;           // 0 when no crown pixel carried a species label
    int allometry_species_id = 0;  // species whose parameters were used
    double dbh = 0.0, agb = 0.0, carbon = 0.0, co2e = 0.0;
};

struct Inventory {
    Grid chm;      // conditioned (smoothed, pit-filled) canopy height
    Grid species;  // UInt8 species map on the CHM grid
    WatershedResult crowns;
    std::vector<TreeRecord> trees;
    StandCarbon stand;
    CensusSummary summary;
    bool species_bypass = false;
    std::vector<std::pair<std::string, double>> stage_seconds;  // wall time per stage, in run order
};

/// DSM/DEM -> CHM -> treetops -> species map -> watershed -> allometry.
/// Crowns with no species label use the lowest-id catalog entry for their
/// allometric parameters. The stand area is the DSM extent.
Inventory run_inventory(const InventoryInputs& inputs, const InventoryParams& params, const SpeciesCatalog& catalog,
                        const AllometricModel& model);

// tree_id,x,y,height_m,crown_diameter_m,crown_area_m2,species_id,dbh_cm,agb_kg,carbon_kg,co2e_kg
std::string trees_csv(const std::vector<TreeRecord>& trees);
std::string stand_carbon_json(const Inventory& inv, const std::string& model_id);

}  // namespace canopy

#include "canopy/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>

#include "canopy/error.hpp"
#include "canopy/grid_ops.hpp"
#include "canopy/spectral.hpp"
#include "canopy/text.hpp"

namespace canopy {

namespace {

Grid onto(const RasterHeader& target, const Grid& g, Resampling method) {
    if (same_geometry(target, g.header()) && g.header().crs == target.crs) return g;
    if (g.header().crs != target.crs) throw CrsMismatch(target.crs, g.header().crs);
    return resample_onto(target, g, method);
}

// Categorical map on the CHM grid with nodata folded into ground.
Grid species_on(const RasterHeader& target, const Grid& map) {
    Grid g = onto(target, map, Resampling::Nearest);
    RasterHeader h = g.header();
    h.sample_type = SampleType::UInt8;
    h.nodata.reset();
    std::vector<float> v(g.samples().begin(), g.samples().end());
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!g.is_valid(i) || v[i] < 0.0f || v[i] > 255.0f) v[i] = 0.0f;
    return Grid(h, std::move(v));
}

class StageClock {
public:
    explicit StageClock(Inventory& inv) : inv_(inv), start_(std::chrono::steady_clock::now()) {}
    void lap(const char* stage) {
        const auto now = std::chrono::steady_clock::now();
        inv_.stage_seconds.emplace_back(stage, std::chrono::duration<double>(now - start_).count());
        start_ = now;
    }

private:
    Inventory& inv_;
    std::chrono::steady_clock::time_point start_;
};

double apex_height(const Grid& raw, const TreeTop& top, int radius) {
    double best = top.height;
    for (int r = top.row - radius; r <= top.row + radius; ++r)
        for (int c = top.col - radius; c <= top.col + radius; ++c)
            if (raw.contains(c, r) && raw.is_valid(c, r)) best = std::max(best, static_cast<double>(raw.at(c, r)));
    return best;
}

}  // namespace

void InventoryParams::validate() const {
    chm.validate();
    crowns.validate();
    if (pit_depth < 0.0f) throw InvalidArgument("pit_depth must be >= 0");
    if (majority_radius < 0) throw InvalidArgument("majority_radius must be >= 0");
    if (!(carbon_fraction > 0.0 && carbon_fraction <= 1.0)) throw InvalidArgument("carbon_fraction must be in (0, 1]");
}

Inventory run_inventory(const InventoryInputs& in, const InventoryParams& params, const SpeciesCatalog& catalog,
                        const AllometricModel& model) {
    params.validate();
    model.validate();
    if (catalog.empty()) throw EmptySignatureSet();
    if (!in.bands && !in.species_map) throw InvalidArgument("either RGB-NIR bands or a species map is required");

    Inventory inv;
    StageClock clock(inv);
    ChmParams raw_params = params.chm;
    raw_params.smooth_radius = 0;
    const Grid raw = derive_chm(in.dsm, in.dem, raw_params);
    inv.chm = params.chm.smooth_radius > 0 ? derive_chm(in.dsm, in.dem, params.chm) : raw;
    if (params.pit_depth > 0.0f) inv.chm = fill_pits(inv.chm, params.pit_depth);
    const RasterHeader& hdr = inv.chm.header();
    clock.lap("chm");

    if (in.species_map) {
        inv.species = species_on(hdr, *in.species_map);
        inv.species_bypass = true;
    } else {
        const RgbNir bands{onto(hdr, in.bands->red, Resampling::Bilinear),
                           onto(hdr, in.bands->green, Resampling::Bilinear),
                           onto(hdr, in.bands->blue, Resampling::Bilinear),
                           onto(hdr, in.bands->nir, Resampling::Bilinear)};
        inv.species = classify_pixels(bands, catalog.signatures(), params.ndvi_threshold);
        if (params.majority_radius > 0) inv.species = majority_filter(inv.species, params.majority_radius);
    }

    clock.lap(inv.species_bypass ? "species_map" : "spectral");

    const auto tops = detect_treetops(inv.chm, params.crowns);
    inv.crowns = watershed_crowns(inv.chm, tops, inv.species, params.crowns);
    clock.lap("crowns");

    const SpeciesEntry& fallback = catalog.entries().front();
    std::vector<TreeBiomass> biomass;
    biomass.reserve(inv.crowns.crowns.size());
    for (const CrownRecord& c : inv.crowns.crowns) {
        TreeRecord t;
        t.tree_id = c.tree_id;
        t.x = c.top.x;
        t.y = c.top.y;
        // Smoothing shaves the apex; report the tallest raw cell it could have
        // come from.
        t.height = apex_height(raw, c.top, params.chm.smooth_radius);
        t.crown_diameter = c.crown_diameter;
        t.crown_area = c.crown_area;
        t.species_id = c.species_id;
        const SpeciesEntry* e = catalog.find(c.species_id);
        if (!e) e = &fallback;
        t.allometry_species_id = e->params.species_id;
        const TreeBiomass b =
            tree_biomass(t.tree_id, t.crown_diameter, t.height, e->params, model, params.carbon_fraction);
        t.dbh = b.dbh;
        t.agb = b.agb;
        t.carbon = b.carbon;
        t.co2e = b.co2e;
        inv.trees.push_back(t);
        biomass.push_back(b);
    }
    const Extent ext = extent_of(in.dsm.header());
    const double area_ha = ext.width() * ext.height() / 1e4;
    inv.stand = stand_totals(biomass, area_ha);
    inv.summary = census(inv.crowns.crowns, area_ha);
    clock.lap("allometry");
    return inv;
}

std::string trees_csv(const std::vector<TreeRecord>& trees) {
    std::string out =
        "tree_id,x,y,height_m,crown_diameter_m,crown_area_m2,species_id,dbh_cm,agb_kg,carbon_kg,co2e_kg\n";
    for (const auto& t : trees)
        out += fmt::format("{},{:.3f},{:.3f},{},{},{},{},{},{},{},{}\n", t.tree_id, t.x, t.y, fmt6(t.height),
                           fmt6(t.crown_diameter), fmt6(t.crown_area), t.species_id, fmt6(t.dbh), fmt6(t.agb),
                           fmt6(t.carbon), fmt6(t.co2e));
    return out;
}

std::string stand_carbon_json(const Inventory& inv, const std::string& model_id) {
    const StandCarbon& s = inv.stand;
    std::string species = "{";
    bool first = true;
    for (const auto& [id, n] : inv.summary.per_species) {
        species += fmt::format("{}\"{}\": {}", first ? "" : ", ", id, n);
        first = false;
    }
    species += "}";
    return fmt::format(
        "{{\n  \"model\": \"{}\",\n  \"area_ha\": {},\n  \"tree_count\": {},\n  \"stems_per_ha\": {},\n"
        "  \"trees_per_species\": {},\n  \"agb_kg\": {},\n  \"carbon_kg\": {},\n  \"co2e_kg\": {},\n"
        "  \"agb_mg_ha\": {},\n  \"carbon_mg_ha\": {},\n  \"co2e_t_ha\": {},\n  \"species_map_bypass\": {}\n}}\n",
        model_id, fmt6(s.area_ha), s.tree_count, fmt6(inv.summary.stems_per_ha), species, fmt6(s.agb_kg),
        fmt6(s.carbon_kg), fmt6(s.co2e_kg), fmt6(s.agb_mg_ha), fmt6(s.carbon_mg_ha), fmt6(s.co2e_t_ha),
        inv.species_bypass ? "true" : "false");
}

}  // namespace canopy

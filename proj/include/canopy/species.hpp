#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "canopy/spectral.hpp"

namespace canopy {

// Allometric inputs for one species. DBH (cm) = crown_dbh_a * crown_diameter(m)^crown_dbh_b.
struct SpeciesParams {
    int species_id = 0;
    std::string label;
    double wood_density = 0.6;  // g/cm^3
    double crown_dbh_a = 3.48;
    double crown_dbh_b = 1.20;

    void validate() const;
};

struct SpeciesEntry {
    SpeciesParams params;
    SpectralSignature signature;
};

// Catalog keyed by species id, kept sorted ascending.
class SpeciesCatalog {
public:
    SpeciesCatalog() = default;
    explicit SpeciesCatalog(std::vector<SpeciesEntry> entries);

    const std::vector<SpeciesEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    // nullptr when the id is unknown.
    const SpeciesEntry* find(int species_id) const;
    // Throws InvalidArgument when the id is unknown.
    const SpeciesEntry& at(int species_id) const;

    std::vector<SpectralSignature> signatures() const;

private:
    std::vector<SpeciesEntry> entries_;
};

// Header: species_id,label,r,g,b,nir,wood_density,crown_dbh_a,crown_dbh_b
SpeciesCatalog parse_species_csv(std::string_view text);
std::string species_csv(const SpeciesCatalog& catalog);

// Three well-separated synthetic species used when no file is given.
SpeciesCatalog default_species();

// Reflectance of bare ground / understory; NDVI well under the canopy gate.
inline constexpr std::array<double, 4> kGroundSignature{0.35, 0.30, 0.25, 0.30};

}  // namespace canopy

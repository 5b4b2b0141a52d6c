#include "canopy/species.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "canopy/error.hpp"
#include "canopy/text.hpp"

namespace canopy {

namespace {

constexpr const char* kHeader = "species_id,label,r,g,b,nir,wood_density,crown_dbh_a,crown_dbh_b";

}  // namespace

void SpeciesParams::validate() const {
    if (!(wood_density > 0.1 && wood_density < 1.2))
        throw InvalidArgument(fmt::format("species {}: wood_density {} outside (0.1, 1.2)", species_id, wood_density));
    if (!(crown_dbh_a > 0.0) || !std::isfinite(crown_dbh_a))
        throw InvalidArgument(fmt::format("species {}: crown_dbh_a must be > 0", species_id));
    if (!(crown_dbh_b > 0.0) || !std::isfinite(crown_dbh_b))
        throw InvalidArgument(fmt::format("species {}: crown_dbh_b must be > 0", species_id));
}

SpeciesCatalog::SpeciesCatalog(std::vector<SpeciesEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(),
              [](const SpeciesEntry& a, const SpeciesEntry& b) { return a.params.species_id < b.params.species_id; });
    for (const auto& e : entries_) {
        if (e.params.species_id != e.signature.species_id)
            throw InvalidArgument("species entry has mismatched ids");
        e.params.validate();
    }
    const auto sigs = signatures();
    validate_signatures(sigs);
}

const SpeciesEntry* SpeciesCatalog::find(int species_id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), species_id,
                               [](const SpeciesEntry& e, int id) { return e.params.species_id < id; });
    return it != entries_.end() && it->params.species_id == species_id ? &*it : nullptr;
}

const SpeciesEntry& SpeciesCatalog::at(int species_id) const {
    if (const SpeciesEntry* e = find(species_id)) return *e;
    throw InvalidArgument(fmt::format("unknown species_id {}", species_id));
}

std::vector<SpectralSignature> SpeciesCatalog::signatures() const {
    std::vector<SpectralSignature> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.signature);
    return out;
}

SpeciesCatalog parse_species_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty()) throw InvalidArgument("species file is empty");
    std::size_t first = 0;
    if (!rows[0].empty() && rows[0][0] == "species_id") first = 1;
    std::vector<SpeciesEntry> entries;
    for (std::size_t i = first; i < rows.size(); ++i) {
        const CsvRow& row = rows[i];
        if (row.size() != 9)
            throw InvalidArgument(fmt::format("species file row {}: expected 9 columns, got {}", i + 1, row.size()));
        SpeciesEntry e;
        e.params.species_id = static_cast<int>(parse_int(row[0], "species_id"));
        e.params.label = row[1];
        for (int k = 0; k < 4; ++k) e.signature.centroid[k] = parse_double(row[2 + k], "reflectance");
        e.params.wood_density = parse_double(row[6], "wood_density");
        e.params.crown_dbh_a = parse_double(row[7], "crown_dbh_a");
        e.params.crown_dbh_b = parse_double(row[8], "crown_dbh_b");
        e.signature.species_id = e.params.species_id;
        e.signature.label = e.params.label;
        entries.push_back(std::move(e));
    }
    return SpeciesCatalog(std::move(entries));
}

std::string species_csv(const SpeciesCatalog& catalog) {
    std::string out = std::string(kHeader) + "\n";
    for (const auto& e : catalog.entries()) {
        const auto& c = e.signature.centroid;
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", e.params.species_id, e.params.label, fmt6(c[0]), fmt6(c[1]),
                           fmt6(c[2]), fmt6(c[3]), fmt6(e.params.wood_density), fmt6(e.params.crown_dbh_a),
                           fmt6(e.params.crown_dbh_b));
    }
    return out;
}

SpeciesCatalog default_species() {
    return parse_species_csv(
        "species_id,label,r,g,b,nir,wood_density,crown_dbh_a,crown_dbh_b\n"
        "1,Cedrela,0.05,0.15,0.05,0.45,0.43,3.48,1.20\n"
        "2,Ficus,0.10,0.30,0.08,0.65,0.39,3.48,1.20\n"
        "3,Swietenia,0.20,0.20,0.15,0.85,0.55,3.48,1.20\n");
}

}  // namespace canopy

#include "canopy/allometry.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "canopy/error.hpp"
#include "canopy/text.hpp"

namespace canopy {

namespace {

const std::map<ModelKind, std::vector<std::string>> kRequired = {
    {ModelKind::TropicalWithHeight, {"a", "b"}},
    {ModelKind::TropicalNoHeight, {"c0", "e_coef", "E", "rho_coef", "d1", "d2"}},
    {ModelKind::Custom, {"c", "dbh_exp", "height_exp", "rho_exp"}},
};

ModelKind kind_of(std::string_view id) {
    if (id == "tropical_with_height") return ModelKind::TropicalWithHeight;
    if (id == "tropical_no_height") return ModelKind::TropicalNoHeight;
    return ModelKind::Custom;
}

void check_nonnegative(double v, const char* field) {
    if (std::isnan(v) || v < 0.0) throw NegativeInput(field);
}

}  // namespace

double AllometricModel::param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw InvalidArgument(fmt::format("model '{}' lacks parameter '{}'", id, name));
    return it->second;
}

void AllometricModel::validate() const {
    for (const auto& name : kRequired.at(kind)) {
        const double v = param(name);
        if (!std::isfinite(v)) throw InvalidArgument(fmt::format("model '{}': {} is not finite", id, name));
    }
    for (const auto& [name, v] : params) {
        const auto& req = kRequired.at(kind);
        if (std::find(req.begin(), req.end(), name) == req.end())
            throw InvalidArgument(fmt::format("model '{}': unknown parameter '{}'", id, name));
    }
    // AGB(0, .) = 0 needs a positive power of dbh.
    if (kind == ModelKind::TropicalWithHeight && !(param("a") > 0 && param("b") > 0))
        throw InvalidArgument(fmt::format("model '{}': a and b must be > 0", id));
    if (kind == ModelKind::Custom && !(param("c") >= 0 && param("dbh_exp") > 0))
        throw InvalidArgument(fmt::format("model '{}': c must be >= 0 and dbh_exp > 0", id));
}

AllometricModel tropical_with_height() {
    return {"tropical_with_height", ModelKind::TropicalWithHeight, {{"a", 0.0673}, {"b", 0.976}}};
}

AllometricModel tropical_no_height() {
    return {"tropical_no_height",
            ModelKind::TropicalNoHeight,
            {{"c0", -1.803}, {"e_coef", -0.976}, {"E", 0.0}, {"rho_coef", 0.976}, {"d1", 2.673}, {"d2", -0.0299}}};
}

AllometricModel custom_model(std::string id, double c, double dbh_exp, double height_exp, double rho_exp) {
    AllometricModel m{std::move(id), ModelKind::Custom,
                      {{"c", c}, {"dbh_exp", dbh_exp}, {"height_exp", height_exp}, {"rho_exp", rho_exp}}};
    m.validate();
    return m;
}

double dbh_from_crown(double crown_diameter_m, const SpeciesParams& species) {
    check_nonnegative(crown_diameter_m, "crown_diameter");
    if (crown_diameter_m == 0.0) return 0.0;
    return species.crown_dbh_a * std::pow(crown_diameter_m, species.crown_dbh_b);
}

double agb(double dbh_cm, double height_m, double rho, const AllometricModel& model) {
    check_nonnegative(dbh_cm, "dbh");
    check_nonnegative(height_m, "height");
    if (!(rho > 0.1 && rho < 1.2)) throw InvalidArgument(fmt::format("wood density {} outside (0.1, 1.2)", rho));
    if (dbh_cm == 0.0) return 0.0;
    switch (model.kind) {
    case ModelKind::TropicalWithHeight:
        return model.param("a") * std::pow(rho * dbh_cm * dbh_cm * height_m, model.param("b"));
    case ModelKind::TropicalNoHeight: {
        const double ld = std::log(dbh_cm);
        return std::exp(model.param("c0") + model.param("e_coef") * model.param("E") +
                        model.param("rho_coef") * std::log(rho) + model.param("d1") * ld +
                        model.param("d2") * ld * ld);
    }
    case ModelKind::Custom: {
        const double he = model.param("height_exp");
        const double h = he == 0.0 ? 1.0 : std::pow(height_m, he);
        return model.param("c") * std::pow(dbh_cm, model.param("dbh_exp")) * h * std::pow(rho, model.param("rho_exp"));
    }
    }
    return 0.0;
}

CarbonMass carbon_and_co2e(double agb_kg, double carbon_fraction) {
    check_nonnegative(agb_kg, "agb");
    if (!(carbon_fraction > 0.0 && carbon_fraction <= 1.0)) throw InvalidArgument("carbon_fraction must be in (0, 1]");
    const double carbon = carbon_fraction * agb_kg;
    return {carbon, carbon * kCo2PerCarbon};
}

TreeBiomass tree_biomass(int tree_id, double crown_diameter_m, double height_m, const SpeciesParams& species,
                         const AllometricModel& model, double carbon_fraction) {
    TreeBiomass t;
    t.tree_id = tree_id;
    t.dbh = dbh_from_crown(crown_diameter_m, species);
    t.agb = agb(t.dbh, height_m, species.wood_density, model);
    const CarbonMass cm = carbon_and_co2e(t.agb, carbon_fraction);
    t.carbon = cm.carbon;
    t.co2e = cm.co2e;
    return t;
}

StandCarbon stand_totals(std::span<const TreeBiomass> trees, double area_ha) {
    if (!(area_ha > 0.0)) throw InvalidArgument("stand area must be > 0 ha");
    NeumaierSum a, c, e;
    for (const auto& t : trees) {
        a.add(t.agb);
        c.add(t.carbon);
        e.add(t.co2e);
    }
    StandCarbon s;
    s.area_ha = area_ha;
    s.tree_count = trees.size();
    s.agb_kg = a.value();
    s.carbon_kg = c.value();
    s.co2e_kg = e.value();
    s.agb_mg_ha = s.agb_kg / 1000.0 / area_ha;
    s.carbon_mg_ha = s.carbon_kg / 1000.0 / area_ha;
    s.co2e_t_ha = s.co2e_kg / 1000.0 / area_ha;
    return s;
}

void ModelRegistry::add(AllometricModel model) {
    model.validate();
    models_[model.id] = std::move(model);
}

const AllometricModel& ModelRegistry::get(std::string_view id) const {
    auto it = models_.find(id);
    if (it == models_.end()) throw InvalidArgument(fmt::format("unknown allometric model '{}'", id));
    return it->second;
}

bool ModelRegistry::contains(std::string_view id) const { return models_.find(id) != models_.end(); }

std::vector<std::string> ModelRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& kv : models_) out.push_back(kv.first);
    return out;
}

ModelRegistry default_registry() {
    ModelRegistry r;
    r.add(tropical_with_height());
    r.add(tropical_no_height());
    return r;
}

ModelRegistry parse_registry_csv(std::string_view text) {
    std::map<std::string, AllometricModel> pending;
    const auto rows = parse_csv(text);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const CsvRow& row = rows[i];
        if (i == 0 && !row.empty() && row[0] == "model_id") continue;
        if (row.size() != 3)
            throw InvalidArgument(fmt::format("model registry row {}: expected model_id,param,value", i + 1));
        auto& m = pending[row[0]];
        m.id = row[0];
        m.kind = kind_of(row[0]);
        if (!m.params.emplace(row[1], parse_double(row[2], row[1])).second)
            throw InvalidArgument(fmt::format("model '{}' repeats parameter '{}'", row[0], row[1]));
    }
    ModelRegistry r;
    for (auto& [id, m] : pending) {
        if (m.kind == ModelKind::Custom) {
            m.params.emplace("height_exp", 0.0);
            m.params.emplace("rho_exp", 0.0);
        }
        r.add(std::move(m));
    }
    return r;
}

std::string registry_csv(const ModelRegistry& registry) {
    std::string out = "model_id,param,value\n";
    for (const auto& id : registry.ids())
        for (const auto& [name, v] : registry.get(id).params) out += fmt::format("{},{},{:.17g}\n", id, name, v);
    return out;
}

}  // namespace canopy

#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "canopy/species.hpp"

namespace canopy {

enum class ModelKind { TropicalWithHeight, TropicalNoHeight, Custom };

// Named coefficients of one biomass equation (dbh in cm, height in m, rho in
// g/cm^3, result in kg).
//
//   tropical_with_height: a * (rho * dbh^2 * height)^b
//   tropical_no_height:   exp(c0 + e_coef*E + rho_coef*ln(rho) + d1*ln(dbh) + d2*ln(dbh)^2)
//   custom:               c * dbh^dbh_exp * height^height_exp * rho^rho_exp
struct AllometricModel {
    std::string id;
    ModelKind kind = ModelKind::TropicalWithHeight;
    std::map<std::string, double> params;

    double param(const std::string& name) const;
    void validate() const;
};

AllometricModel tropical_with_height();
AllometricModel tropical_no_height();
AllometricModel custom_model(std::string id, double c, double dbh_exp, double height_exp = 0.0,
                             double rho_exp = 0.0);

inline constexpr double kDefaultCarbonFraction = 0.47;
inline constexpr double kCo2PerCarbon = 44.0 / 12.0;

double dbh_from_crown(double crown_diameter_m, const SpeciesParams& species);
double agb(double dbh_cm, double height_m, double rho, const AllometricModel& model);

struct CarbonMass {
    double carbon = 0.0;  // kg
    double co2e = 0.0;    // kg
};
CarbonMass carbon_and_co2e(double agb_kg, double carbon_fraction = kDefaultCarbonFraction);

struct TreeBiomass {
    int tree_id = 0;
    double dbh = 0.0;  // cm
    double agb = 0.0;  // kg
    double carbon = 0.0;
    double co2e = 0.0;
};

TreeBiomass tree_biomass(int tree_id, double crown_diameter_m, double height_m, const SpeciesParams& species,
                         const AllometricModel& model, double carbon_fraction = kDefaultCarbonFraction);

struct StandCarbon {
    double area_ha = 0.0;
    std::size_t tree_count = 0;
    double agb_kg = 0.0, carbon_kg = 0.0, co2e_kg = 0.0;  // totals
    double agb_mg_ha = 0.0, carbon_mg_ha = 0.0, co2e_t_ha = 0.0;
};

// Totals use compensated (Neumaier) summation, so the result does not depend
// on how the input was produced, only on its order.
StandCarbon stand_totals(std::span<const TreeBiomass> trees, double area_ha);

class NeumaierSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0, comp_ = 0.0;
};

// Registry of models keyed by id. Built-in ids are "tropical_with_height" and
// "tropical_no_height"; any other id is a custom model.
class ModelRegistry {
public:
    void add(AllometricModel model);
    const AllometricModel& get(std::string_view id) const;
    bool contains(std::string_view id) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, AllometricModel, std::less<>> models_;
};

ModelRegistry default_registry();
// CSV rows: model_id,param,value
ModelRegistry parse_registry_csv(std::string_view text);
std::string registry_csv(const ModelRegistry& registry);

}  // namespace canopy

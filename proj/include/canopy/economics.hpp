#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "canopy/allometry.hpp"

namespace canopy {

struct SurveyCostModel {
    std::string method;
    double usd_per_ha = 0.0;
    double ha_per_mission = 0.0;
    double hours_per_mission = 0.0;
    std::string note;

    void validate() const;
};

struct SurveyCost {
    double usd = 0.0;
    std::int64_t missions = 0;  // whole missions needed
    double hours = 0.0;         // pro-rata field time, linear in area
};

SurveyCost survey_cost(double area_ha, const SurveyCostModel& model);

struct OffsetCostModel {
    std::string method;
    double usd_per_tco2_low = 0.0;
    double usd_per_tco2_high = 0.0;
    std::string basis;
    // A published band that differs from the computed one, shown alongside it.
    std::optional<std::pair<double, double>> stated_band;
    // Share of the per-tree cost by item; display only.
    std::map<std::string, double> cost_breakdown;

    void validate() const;
    double midpoint() const { return 0.5 * (usd_per_tco2_low + usd_per_tco2_high); }
};

// trees_per_tonne x usd_per_tree. Throws NonPositive for a non-positive input.
double offset_cost_per_tonne(double trees_per_tonne, double usd_per_tree);

struct ComparisonRow {
    std::string method;
    double usd_low = 0.0, usd_high = 0.0;
    bool cheapest = false;
};

struct ComparisonReport {
    double tco2e = 0.0;
    std::vector<ComparisonRow> rows;
};

/// Cost of offsetting the stand's CO2e under each model. The row with the
/// lowest band midpoint is flagged cheapest (first one on ties).
ComparisonReport compare(const std::vector<OffsetCostModel>& models, const StandCarbon& stand);
ComparisonReport compare_tonnes(const std::vector<OffsetCostModel>& models, double tco2e);

struct CostModels {
    std::vector<SurveyCostModel> surveys;
    std::vector<OffsetCostModel> offsets;
};

// Ground plots, quadrotor, VTOL; forest planting, direct air capture.
CostModels default_cost_models();

// Header: type,method,usd_per_ha,ha_per_mission,hours_per_mission,usd_per_tco2_low,
//         usd_per_tco2_high,stated_low,stated_high,breakdown,note
// type is "survey" or "offset"; fields that do not apply are left empty.
// breakdown is item:share pairs joined by ';'. Notes may not contain commas.
CostModels parse_cost_models_csv(std::string_view text);
std::string cost_models_csv(const CostModels& models);

// Survey costs for `area_ha` and offset costs for `tco2e`.
std::string costs_report_json(const CostModels& models, double area_ha, double tco2e);
std::string costs_report_text(const CostModels& models, double area_ha, double tco2e);

}  // namespace canopy

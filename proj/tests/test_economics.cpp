#include "canopy/economics.hpp"
#include "canopy/error.hpp"
#include "canopy/text.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace canopy;
namespace ct = canopy::test;

namespace {

const SurveyCostModel& survey(const CostModels& m, const std::string& method) {
    for (const auto& s : m.surveys)
        if (s.method == method) return s;
    throw std::runtime_error("missing survey model " + method);
}

const OffsetCostModel& offset(const CostModels& m, const std::string& method) {
    for (const auto& o : m.offsets)
        if (o.method == method) return o;
    throw std::runtime_error("missing offset model " + method);
}

}  // namespace

TEST_CASE("survey costs") {
    const CostModels m = default_cost_models();
    const SurveyCost drone = survey_cost(100, survey(m, "quadrotor_drone"));
    CHECK(drone.usd == 1000.0);
    CHECK(drone.missions == 1);
    CHECK(drone.hours == 5.0);
    CHECK(survey_cost(100, survey(m, "ground_plots")).usd == 30000.0);
    const SurveyCost zero = survey_cost(0.0, survey(m, "ground_plots"));
    CHECK(zero.usd == 0.0);
    CHECK(zero.missions == 0);
    CHECK(zero.hours == 0.0);
    CHECK(survey_cost(250, survey(m, "vtol_drone")).missions == 1);
    CHECK(survey_cost(251, survey(m, "vtol_drone")).missions == 2);
    CHECK_THROWS_AS(survey_cost(-1, survey(m, "vtol_drone")), NegativeInput);
    CHECK_THROWS_AS(survey_cost(1, SurveyCostModel{"bad", 0, 1, 1, ""}), NonPositive);
}

TEST_CASE("survey cost is linear in area") {
    const CostModels m = default_cost_models();
    for (const auto& s : m.surveys)
        for (double a : {1.0, 7.5, 100.0, 1234.0}) {
            CHECK(survey_cost(10 * a, s).usd == doctest::Approx(10 * survey_cost(a, s).usd));
            CHECK(survey_cost(10 * a, s).hours == doctest::Approx(10 * survey_cost(a, s).hours));
        }
}

TEST_CASE("offset cost per tonne") {
    CHECK(offset_cost_per_tonne(7, 3) == 21.0);
    CHECK(offset_cost_per_tonne(6, 3) == 18.0);
    CHECK(offset_cost_per_tonne(8, 3) == 24.0);
    CHECK_THROWS_AS(offset_cost_per_tonne(0, 3), NonPositive);
    CHECK_THROWS_AS(offset_cost_per_tonne(7, -1), NonPositive);
    const OffsetCostModel& forest = offset(default_cost_models(), "forest_planting");
    CHECK(forest.usd_per_tco2_low == 18.0);
    CHECK(forest.usd_per_tco2_high == 24.0);
    REQUIRE(forest.stated_band.has_value());
    CHECK(forest.stated_band->first == 20.0);
    CHECK(forest.stated_band->second == 25.0);
    CHECK(forest.cost_breakdown.at("seedling") == 0.30);
    CHECK(forest.cost_breakdown.at("labour") == 0.45);
    CHECK(forest.cost_breakdown.at("monitoring") == 0.25);
    const OffsetCostModel& dac = offset(default_cost_models(), "direct_air_capture");
    CHECK(dac.usd_per_tco2_low == 94.0);
    CHECK(dac.usd_per_tco2_high == 232.0);
}

TEST_CASE("comparison") {
    const CostModels m = default_cost_models();
    StandCarbon one;
    one.co2e_kg = 1000.0;
    const ComparisonReport r = compare(m.offsets, one);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.tco2e == 1.0);
    CHECK(r.rows[0].method == "forest_planting");
    CHECK(r.rows[0].cheapest);
    CHECK_FALSE(r.rows[1].cheapest);
    CHECK(r.rows[1].usd_low == 94.0);
    CHECK(r.rows[1].usd_high == 232.0);
    CHECK(compare({}, one).rows.empty());
    const ComparisonReport ten = compare_tonnes(m.offsets, 10.0);
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        CHECK(ten.rows[i].usd_low == 10 * r.rows[i].usd_low);
        CHECK(ten.rows[i].usd_high == 10 * r.rows[i].usd_high);
    }
}

TEST_CASE("default report matches the golden file") {
    const std::string want = read_text_file(ct::data_path("costs_default_100ha.json"));
    CHECK(costs_report_json(default_cost_models(), 100, 1) == want);
}

TEST_CASE("cost model csv") {
    const CostModels m = default_cost_models();
    const CostModels again = parse_cost_models_csv(cost_models_csv(m));
    CHECK(cost_models_csv(again) == cost_models_csv(m));
    CHECK(costs_report_json(again, 42, 3.5) == costs_report_json(m, 42, 3.5));
    CHECK_THROWS_AS(parse_cost_models_csv("a,b\n"), InvalidArgument);
    const std::string header = cost_models_csv({});
    CHECK_THROWS_AS(parse_cost_models_csv(header + "rocket,x,1,1,1,,,,,,\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_cost_models_csv(header + "offset,x,,,,30,20,,,,\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_cost_models_csv(header + "survey,x,0,1,1,,,,,,\n"), NonPositive);
    const CostModels custom = parse_cost_models_csv(header + "offset,mangrove,,,,12,16,,,,coastal\n");
    CHECK(custom.offsets.at(0).midpoint() == 14.0);
    CHECK(costs_report_text(custom, 1, 2).find("mangrove") != std::string::npos);
}

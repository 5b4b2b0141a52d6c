#include "canopy/economics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "canopy/error.hpp"
#include "canopy/text.hpp"

namespace canopy {

namespace {

constexpr std::string_view kCostHeader =
    "type,method,usd_per_ha,ha_per_mission,hours_per_mission,usd_per_tco2_low,usd_per_tco2_high,stated_low,"
    "stated_high,breakdown,note";

std::string num(double v) { return fmt::format("{}", v); }

std::string breakdown_text(const std::map<std::string, double>& b) {
    std::string out;
    for (const auto& [item, share] : b) out += fmt::format("{}{}:{}", out.empty() ? "" : ";", item, num(share));
    return out;
}

std::map<std::string, double> parse_breakdown(const std::string& text, std::size_t row) {
    std::map<std::string, double> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find(';', start);
        if (end == std::string::npos) end = text.size();
        const std::string item = trim(text.substr(start, end - start));
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw InvalidArgument(fmt::format("cost models row {}: breakdown item '{}' lacks ':'", row, item));
        out[trim(item.substr(0, colon))] = parse_double(item.substr(colon + 1), "breakdown share");
        start = end + 1;
    }
    return out;
}

}  // namespace

void SurveyCostModel::validate() const {
    if (!(usd_per_ha > 0)) throw NonPositive(method + " usd_per_ha");
    if (!(ha_per_mission > 0)) throw NonPositive(method + " ha_per_mission");
    if (!(hours_per_mission > 0)) throw NonPositive(method + " hours_per_mission");
}

void OffsetCostModel::validate() const {
    if (!(usd_per_tco2_low > 0)) throw NonPositive(method + " usd_per_tco2_low");
    if (!(usd_per_tco2_high >= usd_per_tco2_low))
        throw InvalidArgument(fmt::format("{}: offset band high {} below low {}", method, usd_per_tco2_high,
                                          usd_per_tco2_low));
    if (stated_band && !(stated_band->first > 0 && stated_band->second >= stated_band->first))
        throw InvalidArgument(method + ": stated band must satisfy 0 < low <= high");
}

SurveyCost survey_cost(double area_ha, const SurveyCostModel& model) {
    model.validate();
    if (area_ha < 0 || !std::isfinite(area_ha)) throw NegativeInput("area_ha");
    SurveyCost c;
    c.usd = area_ha * model.usd_per_ha;
    c.missions = static_cast<std::int64_t>(std::ceil(area_ha / model.ha_per_mission));
    c.hours = area_ha / model.ha_per_mission * model.hours_per_mission;
    return c;
}

double offset_cost_per_tonne(double trees_per_tonne, double usd_per_tree) {
    if (!(trees_per_tonne > 0)) throw NonPositive("trees_per_tonne");
    if (!(usd_per_tree > 0)) throw NonPositive("usd_per_tree");
    return trees_per_tonne * usd_per_tree;
}

ComparisonReport compare_tonnes(const std::vector<OffsetCostModel>& models, double tco2e) {
    if (tco2e < 0 || !std::isfinite(tco2e)) throw NegativeInput("tco2e");
    ComparisonReport r;
    r.tco2e = tco2e;
    std::size_t best = 0;
    for (std::size_t i = 0; i < models.size(); ++i) {
        models[i].validate();
        r.rows.push_back({models[i].method, tco2e * models[i].usd_per_tco2_low, tco2e * models[i].usd_per_tco2_high,
                          false});
        if (models[i].midpoint() < models[best].midpoint()) best = i;
    }
    if (!r.rows.empty()) r.rows[best].cheapest = true;
    return r;
}

ComparisonReport compare(const std::vector<OffsetCostModel>& models, const StandCarbon& stand) {
    return compare_tonnes(models, stand.co2e_kg / 1000.0);
}

CostModels default_cost_models() {
    CostModels m;
    m.surveys.push_back({"ground_plots", 300.0, 20.0, 108.0, "2-7 field days per 20 ha; 4.5 d x 24 h"});
    m.surveys.push_back({"quadrotor_drone", 10.0, 100.0, 5.0, "one operator"});
    m.surveys.push_back({"vtol_drone", 10.0, 250.0, 1.0, "per-ha cost assumed equal to the quadrotor"});

    OffsetCostModel forest;
    forest.method = "forest_planting";
    forest.usd_per_tco2_low = offset_cost_per_tonne(6, 3);
    forest.usd_per_tco2_high = offset_cost_per_tonne(8, 3);
    forest.basis = "6-8 trees per tCO2 at about 3 USD per tree";
    forest.stated_band = std::pair{20.0, 25.0};
    forest.cost_breakdown = {{"seedling", 0.30}, {"labour", 0.45}, {"monitoring", 0.25}};
    m.offsets.push_back(forest);

    OffsetCostModel dac;
    dac.method = "direct_air_capture";
    dac.usd_per_tco2_low = 94.0;
    dac.usd_per_tco2_high = 232.0;
    dac.basis = "published plant cost range";
    m.offsets.push_back(dac);
    return m;
}

CostModels parse_cost_models_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty()) throw InvalidArgument("cost models file is empty");
    if (rows[0].size() != 11 || rows[0][0] != "type")
        throw InvalidArgument(fmt::format("cost models header must be: {}", kCostHeader));
    CostModels m;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != 11) throw InvalidArgument(fmt::format("cost models row {}: expected 11 fields", i + 1));
        if (r[0] == "survey") {
            SurveyCostModel s{r[1], parse_double(r[2], "usd_per_ha"), parse_double(r[3], "ha_per_mission"),
                              parse_double(r[4], "hours_per_mission"), r[10]};
            s.validate();
            m.surveys.push_back(s);
        } else if (r[0] == "offset") {
            OffsetCostModel o;
            o.method = r[1];
            o.usd_per_tco2_low = parse_double(r[5], "usd_per_tco2_low");
            o.usd_per_tco2_high = parse_double(r[6], "usd_per_tco2_high");
            if (!r[7].empty() || !r[8].empty())
                o.stated_band = std::pair{parse_double(r[7], "stated_low"), parse_double(r[8], "stated_high")};
            if (!r[9].empty()) o.cost_breakdown = parse_breakdown(r[9], i + 1);
            o.basis = r[10];
            o.validate();
            m.offsets.push_back(o);
        } else {
            throw InvalidArgument(fmt::format("cost models row {}: unknown type '{}'", i + 1, r[0]));
        }
    }
    return m;
}

std::string cost_models_csv(const CostModels& models) {
    std::string out = std::string(kCostHeader) + "\n";
    for (const auto& s : models.surveys)
        out += fmt::format("survey,{},{},{},{},,,,,,{}\n", s.method, num(s.usd_per_ha), num(s.ha_per_mission),
                           num(s.hours_per_mission), s.note);
    for (const auto& o : models.offsets)
        out += fmt::format("offset,{},,,,{},{},{},{},{},{}\n", o.method, num(o.usd_per_tco2_low),
                           num(o.usd_per_tco2_high), o.stated_band ? num(o.stated_band->first) : "",
                           o.stated_band ? num(o.stated_band->second) : "", breakdown_text(o.cost_breakdown),
                           o.basis);
    return out;
}

std::string costs_report_json(const CostModels& models, double area_ha, double tco2e) {
    std::string surveys;
    for (std::size_t i = 0; i < models.surveys.size(); ++i) {
        const auto& s = models.surveys[i];
        const SurveyCost c = survey_cost(area_ha, s);
        surveys += fmt::format(
            "    {{\"method\": \"{}\", \"usd_per_ha\": {}, \"ha_per_mission\": {}, \"hours_per_mission\": {}, "
            "\"usd\": {}, \"missions\": {}, \"hours\": {}}}{}\n",
            s.method, fmt6(s.usd_per_ha), fmt6(s.ha_per_mission), fmt6(s.hours_per_mission), fmt6(c.usd),
            c.missions, fmt6(c.hours), i + 1 < models.surveys.size() ? "," : "");
    }
    const ComparisonReport cmp = compare_tonnes(models.offsets, tco2e);
    std::string offsets;
    for (std::size_t i = 0; i < models.offsets.size(); ++i) {
        const auto& o = models.offsets[i];
        std::string extra;
        if (o.stated_band)
            extra += fmt::format(", \"stated_usd_per_tco2\": [{}, {}]", fmt6(o.stated_band->first),
                                 fmt6(o.stated_band->second));
        if (!o.cost_breakdown.empty()) {
            extra += ", \"cost_breakdown\": {";
            bool first = true;
            for (const auto& [item, share] : o.cost_breakdown) {
                extra += fmt::format("{}\"{}\": {}", first ? "" : ", ", item, fmt6(share));
                first = false;
            }
            extra += "}";
        }
        offsets += fmt::format(
            "    {{\"method\": \"{}\", \"usd_per_tco2\": [{}, {}]{}, \"usd\": [{}, {}], \"cheapest\": {}}}{}\n",
            o.method, fmt6(o.usd_per_tco2_low), fmt6(o.usd_per_tco2_high), extra, fmt6(cmp.rows[i].usd_low),
            fmt6(cmp.rows[i].usd_high), cmp.rows[i].cheapest ? "true" : "false",
            i + 1 < models.offsets.size() ? "," : "");
    }
    return fmt::format("{{\n  \"area_ha\": {},\n  \"tco2e\": {},\n  \"surveys\": [\n{}  ],\n  \"offsets\": [\n{}  ]\n}}\n",
                       fmt6(area_ha), fmt6(tco2e), surveys, offsets);
}

std::string costs_report_text(const CostModels& models, double area_ha, double tco2e) {
    std::string out = fmt::format("Survey cost for {} ha\n", fmt6(area_ha));
    out += fmt::format("  {:<22} {:>10} {:>12} {:>9} {:>10}\n", "method", "USD/ha", "USD", "missions", "hours");
    for (const auto& s : models.surveys) {
        const SurveyCost c = survey_cost(area_ha, s);
        out += fmt::format("  {:<22} {:>10} {:>12} {:>9} {:>10}\n", s.method, fmt6(s.usd_per_ha), fmt6(c.usd),
                           c.missions, fmt6(c.hours));
    }
    const ComparisonReport cmp = compare_tonnes(models.offsets, tco2e);
    out += fmt::format("\nOffset cost for {} tCO2e\n", fmt6(tco2e));
    out += fmt::format("  {:<22} {:>15} {:>25}\n", "method", "USD/tCO2", "USD");
    for (std::size_t i = 0; i < models.offsets.size(); ++i) {
        const auto& o = models.offsets[i];
        out += fmt::format("  {:<22} {:>15} {:>25}{}\n", o.method,
                           fmt6(o.usd_per_tco2_low) + "-" + fmt6(o.usd_per_tco2_high),
                           fmt6(cmp.rows[i].usd_low) + "-" + fmt6(cmp.rows[i].usd_high),
                           cmp.rows[i].cheapest ? "  (cheapest)" : "");
        if (o.stated_band)
            out += fmt::format("  {:<22} {:>15}\n", "  stated band",
                               fmt6(o.stated_band->first) + "-" + fmt6(o.stated_band->second));
        for (const auto& [item, share] : o.cost_breakdown)
            out += fmt::format("  {:<22} {:>15}\n", "  " + item, fmt6(share * 100) + "%");
    }
    return out;
}

}  // namespace canopy

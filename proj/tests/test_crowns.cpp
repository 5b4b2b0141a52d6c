#include <cmath>
#include <random>

#include "canopy/crowns.hpp"
#include "canopy/error.hpp"
#include "canopy/parallel.hpp"
#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace canopy;
using namespace canopy::test;
namespace ct = canopy::test;

namespace {

Grid zeros_like(const Grid& g) {
    RasterHeader h = g.header();
    h.sample_type = SampleType::UInt8;
    h.nodata.reset();
    return Grid(h, 0.0f);
}

double ring_area(const nlohmann::json& ring) {
    double s = 0;
    for (std::size_t k = 0; k + 1 < ring.size(); ++k)
        s += ring[k][0].get<double>() * ring[k + 1][1].get<double>() -
             ring[k + 1][0].get<double>() * ring[k][1].get<double>();
    return s / 2;
}

}  // namespace

TEST_CASE("no canopy, no tops") {
    CHECK(detect_treetops(ct::constant(20, 20, 0.0f), {}).empty());
    CHECK(detect_treetops(ct::constant(20, 20, 2.9f), {}).empty());
}

TEST_CASE("single paraboloid has one top at its apex") {
    Grid g = ct::constant(41, 41, 0.0f, 0.25);
    add_crown(g, 20, 20, 12, 32);
    const auto tops = detect_treetops(g, {});
    REQUIRE(tops.size() == 1);
    CHECK(tops[0].col == 20);
    CHECK(tops[0].row == 20);
    CHECK(tops[0].height == 12.0);
    CHECK(tops[0].x == doctest::Approx(20.5 * 0.25));
    CHECK(tops[0].y == doctest::Approx(41 * 0.25 - 20.5 * 0.25));
}

TEST_CASE("plateau resolves to its lowest row, col") {
    Grid g = ct::constant(12, 12, 0.0f);
    for (int r = 4; r <= 6; ++r)
        for (int c = 3; c <= 5; ++c) g.at(c, r) = 8.0f;
    const auto tops = detect_treetops(g, {});
    REQUIRE(tops.size() == 1);
    CHECK(tops[0].col == 3);
    CHECK(tops[0].row == 4);
}

TEST_CASE("treetops match a brute-force window scan") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const Grid g = random_chm(rng, 20 + trial, 48 - trial, trial % 2 == 0);
        CrownParams p;
        p.window_fraction = 0.05 + 0.01 * trial;
        const auto got = detect_treetops(g, p);
        const auto want = brute_tops(g, p);
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            REQUIRE(got[k].col == want[k].col);
            REQUIRE(got[k].row == want[k].row);
        }
    }
}

TEST_CASE("raising min_tree_height never adds tops") {
    std::mt19937_64 rng(32);
    const Grid g = random_chm(rng, 60, 60, false);
    std::size_t last = std::numeric_limits<std::size_t>::max();
    for (double m : {1.0, 3.0, 5.0, 10.0, 20.0, 35.0}) {
        CrownParams p;
        p.min_tree_height = m;
        const std::size_t n = detect_treetops(g, p).size();
        CHECK(n <= last);
        last = n;
    }
}

TEST_CASE("isolated crown claims exactly the pixels above its floor") {
    Grid g = ct::constant(41, 41, 0.0f, 0.25);
    add_crown(g, 20, 20, 12, 32);
    const auto tops = detect_treetops(g, {});
    const auto ws = watershed_crowns(g, tops, zeros_like(g), {});
    REQUIRE(ws.crowns.size() == 1);
    std::size_t want = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const bool in = g[i] >= 3.0f && g[i] >= 0.3 * 12.0;
        want += in;
        REQUIRE((ws.labels.ids[i] == 1) == in);
    }
    const CrownRecord& c = ws.crowns[0];
    CHECK(c.pixel_count == want);
    CHECK(c.crown_area == want * 0.0625);
    CHECK(c.crown_diameter == doctest::Approx(2 * std::sqrt(c.crown_area / M_PI)));
    CHECK(c.species_id == 0);
}

TEST_CASE("two equal paraboloids split at the saddle") {
    Grid g = ct::constant(60, 30, 0.0f, 0.25);
    add_crown(g, 18, 15, 20, 26);
    add_crown(g, 40, 15, 20, 26);
    const auto tops = detect_treetops(g, {});
    REQUIRE(tops.size() == 2);
    const auto ws = watershed_crowns(g, tops, zeros_like(g), {});
    CHECK(ws.labels.ids == brute_flood(g, tops, {}));
    const int left = ws.labels.at(18, 15), right = ws.labels.at(40, 15);
    CHECK(left != right);
    for (int r = 0; r < 30; ++r) {
        for (int c = 0; c <= 28; ++c) CHECK(ws.labels.at(c, r) != right);
        for (int c = 30; c < 60; ++c) CHECK(ws.labels.at(c, r) != left);
    }
}

TEST_CASE("zero markers, zero crowns") {
    Grid g = ct::constant(10, 10, 0.0f);
    add_crown(g, 5, 5, 10, 8);
    const auto ws = watershed_crowns(g, {}, zeros_like(g), {});
    CHECK(ws.crowns.empty());
    for (auto id : ws.labels.ids) CHECK(id == 0);
}

TEST_CASE("marker below the canopy is rejected") {
    Grid g = ct::constant(10, 10, 1.0f);
    const std::vector<TreeTop> tops = {{2, 2, 0, 0, 1.0}};
    CHECK_THROWS_AS(watershed_crowns(g, tops, zeros_like(g), {}), MarkerOutsideCanopy);
    Grid other = zeros_like(g);
    other.header().geo.origin_x += 1;
    CHECK_THROWS_AS(watershed_crowns(g, {}, other, {}), InvalidArgument);
}

TEST_CASE("species vote is the modal label, ties to the lowest id") {
    Grid g = ct::constant(9, 9, 0.0f);
    add_crown(g, 4, 4, 10, 9);
    Grid sp = zeros_like(g);
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) sp.at(c, r) = c < 4 ? 5.0f : (c > 4 ? 2.0f : 0.0f);
    auto ws = watershed_crowns(g, detect_treetops(g, {}), sp, {});
    CHECK(ws.crowns.at(0).species_id == 2);  // symmetric crown: 5 and 2 tie
    sp.at(4, 4) = 5.0f;
    ws = watershed_crowns(g, detect_treetops(g, {}), sp, {});
    CHECK(ws.crowns.at(0).species_id == 5);
}

TEST_CASE("watershed matches the brute-force flood and keeps its invariants") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 60; ++trial) {
        const Grid g = random_chm(rng, 8 + int(rng() % 57), 8 + int(rng() % 57), trial % 3 == 0);
        CrownParams p;
        p.crown_floor_fraction = 0.2 + 0.1 * (trial % 5);
        auto tops = detect_treetops(g, p);
        if (trial % 4 == 1 && !tops.empty()) {
            // Arbitrary markers, not only maxima.
            tops.clear();
            for (std::size_t i = 0; i < g.size(); i += 37)
                if (g.is_valid(i) && g[i] >= p.min_tree_height) {
                    const int c = int(i % g.width()), r = int(i / g.width());
                    tops.push_back({c, r, 0, 0, g[i]});
                }
        }
        const auto ws = watershed_crowns(g, tops, zeros_like(g), p);
        REQUIRE(ws.labels.ids == brute_flood(g, tops, p));
        REQUIRE(ws.crowns.size() == tops.size());
        std::vector<std::size_t> count(tops.size() + 1, 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (ws.labels.ids[i] == 0) continue;
            REQUIRE(g[i] >= p.min_tree_height);
            ++count[ws.labels.ids[i]];
        }
        for (std::size_t k = 0; k < tops.size(); ++k) {
            REQUIRE(ws.labels.at(tops[k].col, tops[k].row) == int(k + 1));
            REQUIRE(ws.crowns[k].pixel_count == count[k + 1]);
            REQUIRE(ws.crowns[k].crown_area == count[k + 1] * g.pixel_area());
        }
    }
}

TEST_CASE("treetops and crowns do not depend on the thread count") {
    std::mt19937_64 rng(34);
    const Grid g = random_chm(rng, 64, 64, true);
    set_thread_count(1);
    const auto t1 = detect_treetops(g, {});
    const auto w1 = watershed_crowns(g, t1, zeros_like(g), {});
    set_thread_count(8);
    const auto t8 = detect_treetops(g, {});
    const auto w8 = watershed_crowns(g, t8, zeros_like(g), {});
    set_thread_count(0);
    REQUIRE(t1.size() == t8.size());
    CHECK(w1.labels.ids == w8.labels.ids);
    CHECK(crowns_geojson(w1.crowns, w1.labels) == crowns_geojson(w8.crowns, w8.labels));
}

TEST_CASE("census") {
    CensusSummary s = census({}, 1.0);
    CHECK(s.tree_count == 0);
    CHECK(s.stems_per_ha == 0.0);
    std::vector<CrownRecord> recs(7);
    for (int k = 0; k < 7; ++k) {
        recs[k].tree_id = k + 1;
        recs[k].top.height = 4.0 + 3 * k;
        recs[k].crown_diameter = 2.5 + k;
        recs[k].species_id = 1 + k % 2;
    }
    s = census(recs, 1.0);
    CHECK(s.tree_count == 7);
    CHECK(s.stems_per_ha == 7.0);
    CHECK(s.per_species.at(1) == 4);
    CHECK(s.per_species.at(2) == 3);
    CHECK(s.height.counts == std::vector<std::size_t>{1, 1, 2, 2, 1});
    CHECK(s.crown_diameter.counts == std::vector<std::size_t>{0, 0, 1, 1, 1, 1, 1, 1, 1});
    CHECK(census(recs, 2.0).stems_per_ha == 3.5);
    CHECK_THROWS_AS(census(recs, 0.0), InvalidArgument);
}

TEST_CASE("geojson rings enclose exactly the crown area") {
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 15; ++trial) {
        Grid g = random_chm(rng, 50, 40, trial % 2 == 0);
        g.header().geo = {500000.0, 9000020.0, 0.5, -0.5};
        const auto ws = watershed_crowns(g, detect_treetops(g, {}), zeros_like(g), {});
        // Punch holes and diagonal-only links into the label image.
        LabelImage img = ws.labels;
        for (std::size_t i = 0; i < img.ids.size(); i += 7) img.ids[i] = 0;
        std::vector<CrownRecord> recs = ws.crowns;
        for (auto& r : recs) r.pixel_count = 0;
        for (auto id : img.ids)
            if (id) ++recs[id - 1].pixel_count;
        const auto doc = nlohmann::json::parse(crowns_geojson(recs, img));
        REQUIRE(doc["type"] == "FeatureCollection");
        std::size_t nonempty = 0;
        for (const auto& r : recs) nonempty += r.pixel_count > 0;
        REQUIRE(doc["features"].size() == nonempty);
        for (const auto& f : doc["features"]) {
            const int id = f["properties"]["tree_id"];
            const auto& geom = f["geometry"];
            auto polys = geom["type"] == "Polygon" ? nlohmann::json::array({geom["coordinates"]}) : geom["coordinates"];
            double area = 0;
            for (const auto& poly : polys)
                for (std::size_t k = 0; k < poly.size(); ++k) {
                    const auto& ring = poly[k];
                    REQUIRE(ring.front() == ring.back());
                    const double a = ring_area(ring);
                    if (k == 0)
                        REQUIRE(a > 0);
                    else
                        REQUIRE(a < 0);
                    area += a;
                }
            CHECK(area == doctest::Approx(recs[id - 1].pixel_count * 0.25));
        }
    }
}

#include <cmath>

#include "canopy/error.hpp"
#include "canopy/parallel.hpp"
#include "canopy/synthforest.hpp"
#include "doctest.h"

using namespace canopy;

namespace {

SynthParams small(std::uint64_t seed = 7) {
    SynthParams p;
    p.seed = seed;
    p.width_m = 60;
    p.height_m = 40;
    p.resolution = 0.5;
    return p;
}

}  // namespace

TEST_CASE("zero density gives an empty forest and a bare surface") {
    SynthParams p = small();
    p.stems_per_ha = 0;
    const GroundTruth t = generate(p);
    CHECK(t.trees.empty());
    CHECK(t.totals.agb_mg_ha == 0.0);
    const SceneRasters s = render(t, p);
    for (std::size_t i = 0; i < s.dsm.size(); ++i) REQUIRE(s.dsm[i] == s.dem[i]);
    CHECK(s.red.header().geo == s.dsm.header().geo);
    CHECK(s.nir.width() == 120);
    CHECK(s.nir.height() == 80);
}

TEST_CASE("fixed seed is reproducible and seeds differ") {
    const SynthParams p = small(11);
    const GroundTruth a = generate(p), b = generate(p);
    CHECK(truth_csv(a) == truth_csv(b));
    CHECK(truth_json(a, p) == truth_json(b, p));
    const SceneRasters ra = render(a, p);
    set_thread_count(1);
    const SceneRasters rb = render(b, p);
    set_thread_count(0);
    CHECK(bit_identical(ra.dsm, rb.dsm));
    CHECK(bit_identical(ra.nir, rb.nir));
    CHECK(ra.owner == rb.owner);
    CHECK(truth_csv(generate(small(12))) != truth_csv(a));
}

TEST_CASE("realized density tracks the request") {
    for (Placement mode : {Placement::MaternII, Placement::NonOverlapping}) {
        double total = 0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            SynthParams p;
            p.seed = seed;
            p.width_m = p.height_m = 100;
            p.stems_per_ha = 250;
            p.height_mu = std::log(15.0);
            p.placement = mode;
            total += generate(p).realized_density;
        }
        const double mean = total / 10;
        INFO("mode ", int(mode), " mean ", mean);
        CHECK(std::abs(mean - 250) <= 0.15 * 250);
    }
}

TEST_CASE("matern spacing and non-overlap hold") {
    SynthParams p;
    p.width_m = p.height_m = 100;
    const double r = p.hardcore_fraction * expected_crown_diameter(p);
    const GroundTruth m = generate(p);
    for (std::size_t i = 0; i < m.trees.size(); ++i)
        for (std::size_t j = i + 1; j < m.trees.size(); ++j)
            REQUIRE(std::hypot(m.trees[i].x - m.trees[j].x, m.trees[i].y - m.trees[j].y) >= r);

    p.placement = Placement::NonOverlapping;
    p.crowns_inside = true;
    const GroundTruth n = generate(p);
    for (std::size_t i = 0; i < n.trees.size(); ++i) {
        const auto& a = n.trees[i];
        REQUIRE(a.x - a.crown_diameter / 2 >= p.origin_x);
        REQUIRE(a.y + a.crown_diameter / 2 <= p.origin_y + p.height_m);
        for (std::size_t j = i + 1; j < n.trees.size(); ++j) {
            const auto& b = n.trees[j];
            REQUIRE(std::hypot(a.x - b.x, a.y - b.y) >= (a.crown_diameter + b.crown_diameter) / 2 + p.crown_gap);
        }
    }
}

TEST_CASE("trees obey the height distribution bounds and the crown bridge") {
    SynthParams p = small(3);
    p.height_sigma = 0.6;
    p.min_height = 8;
    const GroundTruth t = generate(p);
    REQUIRE(!t.trees.empty());
    for (const auto& tree : t.trees) {
        CHECK(tree.height >= 8);
        CHECK(tree.height <= p.max_height);
        const SpeciesParams& sp = p.species.at(tree.species_id).params;
        CHECK(tree.dbh == doctest::Approx(sp.crown_dbh_a * std::pow(tree.crown_diameter, sp.crown_dbh_b)));
        CHECK(tree.dbh == doctest::Approx(std::pow(tree.height / p.hd_a, 1 / p.hd_b)).epsilon(1e-9));
    }
}

TEST_CASE("totals close over the tree list") {
    const SynthParams p = small(5);
    const GroundTruth t = generate(p, tropical_no_height());
    std::vector<TreeBiomass> b;
    for (const auto& tree : t.trees) {
        const TreeBiomass tb = tree_biomass(tree.tree_id, tree.crown_diameter, tree.height,
                                            p.species.at(tree.species_id).params, tropical_no_height());
        CHECK(tb.agb == tree.agb);
        b.push_back(tb);
    }
    const StandCarbon s = stand_totals(b, p.area_ha());
    CHECK(s.agb_mg_ha == t.totals.agb_mg_ha);
    CHECK(s.co2e_t_ha == t.totals.co2e_t_ha);
}

TEST_CASE("single tree apex identity") {
    SynthParams p = small();
    p.stems_per_ha = 0;
    GroundTruth t = generate(p);
    TruthTree tree;
    tree.tree_id = 1;
    tree.x = p.origin_x + 30.1;
    tree.y = p.origin_y + 20.3;
    tree.height = 21.5;
    tree.crown_diameter = 7.0;
    tree.species_id = 2;
    t.trees.push_back(tree);
    const SceneRasters s = render(t, p);
    double best = 0;
    for (std::size_t i = 0; i < s.dsm.size(); ++i) {
        REQUIRE(s.dsm[i] >= s.dem[i]);
        best = std::max(best, double(s.dsm[i]) - double(s.dem[i]));
    }
    // Nearest pixel centre is at most half a pixel diagonal from the apex.
    const double half_diag = p.resolution * std::sqrt(0.5);
    CHECK(best <= 21.5 + 1e-4);
    CHECK(best >= crown_surface(tree, half_diag) - 1e-4);
    const auto vis = visible_trees(t, s);
    CHECK(vis == std::vector<bool>{true});
    // Band values inside the crown sit near the species centroid.
    const int col = int(std::lround(s.dsm.geo().col_of(tree.x))), row = int(std::lround(s.dsm.geo().row_of(tree.y)));
    CHECK(std::abs(s.nir.at(col, row) - 0.65) < 0.2);
    CHECK(std::abs(s.nir.at(0, 0) - 0.30) < 0.2);
}

TEST_CASE("dsm never below dem and overtopped trees are hidden") {
    SynthParams p = small(9);
    p.stems_per_ha = 600;
    p.hardcore_fraction = 0.1;
    const GroundTruth t = generate(p);
    const SceneRasters s = render(t, p);
    for (std::size_t i = 0; i < s.dsm.size(); ++i) REQUIRE(s.dsm[i] >= s.dem[i]);
    const auto vis = visible_trees(t, s);
    std::size_t hidden = 0;
    for (bool v : vis) hidden += !v;
    CHECK(hidden > 0);
    CHECK(hidden < vis.size());
}

TEST_CASE("parameter validation") {
    SynthParams p = small();
    p.resolution = 0;
    CHECK_THROWS_AS(generate(p), InvalidArgument);
    p = small();
    p.proportions = {0.5, 0.4, 0.2};
    CHECK_THROWS_AS(generate(p), InvalidArgument);
    p.proportions = {0.5, 0.5, 0.0};
    CHECK_NOTHROW(generate(p));
    p = small();
    p.heterogeneity = 1.0;
    CHECK_THROWS_AS(generate(p), InvalidArgument);
}

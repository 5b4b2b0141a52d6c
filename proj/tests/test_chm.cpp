#include <cmath>
#include <random>

#include "canopy/chm.hpp"
#include "canopy/error.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace canopy;
namespace ct = canopy::test;

namespace {

ChmParams raw() {
    ChmParams p;
    p.smooth_radius = 0;
    return p;
}

// Values on a 1/64 m lattice keep every sum and difference exact in float.
Grid lattice(int w, int h, std::mt19937_64& rng, int lo, int hi) {
    std::uniform_int_distribution<int> u(lo * 64, hi * 64);
    std::vector<float> s(std::size_t(w) * h);
    for (auto& v : s) v = float(u(rng)) / 64.0f;
    return Grid(ct::header(w, h, SampleType::Float32, 0.25), std::move(s));
}

bool has_pit(const Grid& g, float depth) {
    for (int r = 1; r < g.height() - 1; ++r)
        for (int c = 1; c < g.width() - 1; ++c) {
            bool all = true;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc)
                    if ((dr || dc) && !(g.at(c + dc, r + dr) - g.at(c, r) > depth)) all = false;
            if (all) return true;
        }
    return false;
}

}  // namespace

TEST_CASE("constant subtraction") {
    const Grid chm = derive_chm(ct::constant(6, 5, 125.0f), ct::constant(6, 5, 120.0f));
    for (std::size_t i = 0; i < chm.size(); ++i) REQUIRE(chm[i] == 5.0f);
    const Grid zero = derive_chm(ct::constant(6, 5, 321.5f), ct::constant(6, 5, 321.5f));
    for (std::size_t i = 0; i < zero.size(); ++i) REQUIRE(zero[i] == 0.0f);
}

TEST_CASE("height cap turns blunders into nodata") {
    Grid dsm = ct::constant(7, 7, 20.0f);
    dsm.at(3, 3) = 200.0f;
    for (int radius : {0, 1}) {
        ChmParams p;
        p.smooth_radius = radius;
        const Grid chm = derive_chm(dsm, ct::constant(7, 7, 0.0f), p);
        CHECK(!chm.is_valid(3, 3));
        CHECK(chm.at(2, 3) == 20.0f);
        CHECK(chm.valid_count() == 48);
    }
}

TEST_CASE("negative heights clamp to zero only when asked") {
    const Grid dsm = ct::constant(3, 3, 99.0f);
    const Grid dem = ct::constant(3, 3, 100.0f);
    CHECK(derive_chm(dsm, dem, raw())[4] == 0.0f);
    ChmParams keep = raw();
    keep.clamp_negative = false;
    CHECK(derive_chm(dsm, dem, keep)[4] == -1.0f);
}

TEST_CASE("coarser DEM is resampled onto the DSM grid") {
    const Grid dsm = ct::constant(20, 20, 130.0f, 0.5);
    const Grid dem = ct::constant(5, 5, 110.0f, 2.0);
    const Grid chm = derive_chm(dsm, dem);
    CHECK(chm.width() == 20);
    CHECK(chm.geo() == dsm.geo());
    for (std::size_t i = 0; i < chm.size(); ++i) REQUIRE(chm[i] == 20.0f);
    Grid other = dem;
    other.header().crs = "EPSG:32718";
    CHECK_THROWS_AS(derive_chm(dsm, other), CrsMismatch);
}

TEST_CASE("chm + dem == dsm exactly before smoothing") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> ground(100.0f, 3000.0f), canopy_h(0.0f, 85.0f);
    std::vector<float> dem_s(250000), dsm_s(250000);
    for (std::size_t i = 0; i < dem_s.size(); ++i) {
        dem_s[i] = ground(rng);
        dsm_s[i] = dem_s[i] + canopy_h(rng);
    }
    const Grid dem(ct::header(500, 500), dem_s), dsm(ct::header(500, 500), dsm_s);
    const Grid chm = derive_chm(dsm, dem, raw());
    for (std::size_t i = 0; i < chm.size(); ++i) {
        REQUIRE(chm.is_valid(i));
        REQUIRE(chm[i] >= 0.0f);
        REQUIRE(chm[i] + dem[i] == dsm[i]);
    }
}

TEST_CASE("translation equivariance is bit-exact") {
    std::mt19937_64 rng(3);
    const Grid dem = lattice(40, 30, rng, 200, 400);
    Grid dsm = lattice(40, 30, rng, 0, 60);
    for (std::size_t i = 0; i < dsm.size(); ++i) dsm[i] += dem[i] - 5.0f;  // some negatives
    for (float shift : {1.0f, 117.0f, 1024.0f}) {
        Grid dsm2 = dsm, dem2 = dem;
        for (std::size_t i = 0; i < dsm.size(); ++i) {
            dsm2[i] += shift;
            dem2[i] += shift;
        }
        CHECK(bit_identical(derive_chm(dsm, dem), derive_chm(dsm2, dem2)));
        CHECK(bit_identical(derive_chm(dsm, dem, raw()), derive_chm(dsm2, dem2, raw())));
    }
}

TEST_CASE("fill_pits") {
    const Grid flat = ct::constant(9, 9, 10.0f);
    CHECK(bit_identical(fill_pits(flat, 2.0f), flat));

    Grid pit = flat;
    pit.at(4, 4) = -5.0f;
    const Grid fixed = fill_pits(pit, 2.0f);
    CHECK(fixed.at(4, 4) == 10.0f);
    pit.at(4, 4) = 9.0f;  // shallower than the threshold
    CHECK(fill_pits(pit, 2.0f).at(4, 4) == 9.0f);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 25; ++trial) {
        const Grid g = ct::random_float(24, 19, rng(), 0.0f, 30.0f);
        for (float depth : {0.5f, 2.0f, 5.0f}) {
            const Grid out = fill_pits(g, depth);
            REQUIRE_FALSE(has_pit(out, depth));
            for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(out[i] >= g[i]);
        }
    }
}

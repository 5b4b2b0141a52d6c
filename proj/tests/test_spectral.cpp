#include <map>
#include <random>

#include "canopy/error.hpp"
#include "canopy/species.hpp"
#include "canopy/spectral.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace canopy;
namespace ct = canopy::test;

namespace {

std::vector<SpectralSignature> three() { return default_species().signatures(); }

RgbNir bands_from(const std::vector<std::array<double, 4>>& px, int w) {
    const int h = static_cast<int>(px.size()) / w;
    RgbNir b{ct::constant(w, h, 0.0f), ct::constant(w, h, 0.0f), ct::constant(w, h, 0.0f), ct::constant(w, h, 0.0f)};
    Grid* g[4] = {&b.red, &b.green, &b.blue, &b.nir};
    for (std::size_t i = 0; i < px.size(); ++i)
        for (int k = 0; k < 4; ++k) (*g[k])[i] = static_cast<float>(px[i][k]);
    return b;
}

int brute_nearest(const std::array<double, 4>& p, const std::vector<SpectralSignature>& sigs, float gate) {
    // Recompute from the float-rounded pixel the grid actually stores.
    double q[4];
    for (int k = 0; k < 4; ++k) q[k] = static_cast<float>(p[k]);
    if (q[3] + q[0] == 0.0 || (q[3] - q[0]) / (q[3] + q[0]) < gate) return 0;
    std::map<int, double> dist;
    for (const auto& s : sigs) {
        double d = 0;
        for (int k = 0; k < 4; ++k) d += (q[k] - s.centroid[k]) * (q[k] - s.centroid[k]);
        dist[s.species_id] = d;
    }
    int best = 0;
    for (const auto& [id, d] : dist)
        if (best == 0 || d < dist[best]) best = id;
    return best;
}

int brute_majority(const Grid& m, int c, int r, int radius) {
    const int own = static_cast<int>(m.at(c, r));
    if (own == 0) return 0;
    std::map<int, int> counts;
    for (int rr = r - radius; rr <= r + radius; ++rr)
        for (int cc = c - radius; cc <= c + radius; ++cc)
            if (cc >= 0 && rr >= 0 && cc < m.width() && rr < m.height() && m.at(cc, rr) != 0.0f)
                ++counts[static_cast<int>(m.at(cc, rr))];
    int top = 0;
    for (const auto& kv : counts) top = std::max(top, kv.second);
    if (counts[own] == top) return own;
    std::vector<int> modes;
    for (const auto& kv : counts)
        if (kv.second == top) modes.push_back(kv.first);
    return modes.size() == 1 ? modes[0] : own;
}

Grid random_labels(int w, int h, std::uint64_t seed, int nlabels, double zero_share) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> lab(1, nlabels);
    RasterHeader hd = ct::header(w, h, SampleType::UInt8);
    Grid g(hd, 0.0f);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = u(rng) < zero_share ? 0.0f : static_cast<float>(lab(rng));
    return g;
}

}  // namespace

TEST_CASE("ndvi formula") {
    Grid red = ct::constant(3, 1, 0.2f), nir = ct::constant(3, 1, 0.8f);
    red[1] = 0.5f;
    nir[1] = 0.5f;
    red[2] = 0.0f;
    nir[2] = 0.0f;
    const Grid v = ndvi(red, nir);
    CHECK(v[0] == doctest::Approx(0.6).epsilon(1e-7));
    CHECK(v[1] == 0.0f);
    CHECK_FALSE(v.is_valid(std::size_t(2)));
}

TEST_CASE("ndvi matches an elementwise loop and stays in [-1, 1]") {
    const Grid red = ct::random_float(61, 47, 11, 0.0f, 1.0f);
    const Grid nir = ct::random_float(61, 47, 12, 0.0f, 1.0f);
    const Grid v = ndvi(red, nir);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double want = (double(nir[i]) - red[i]) / (double(nir[i]) + red[i]);
        REQUIRE(v[i] == static_cast<float>(want));
        REQUIRE(v[i] >= -1.0f);
        REQUIRE(v[i] <= 1.0f);
    }
}

TEST_CASE("classification basics") {
    const auto sigs = three();
    std::vector<std::array<double, 4>> px = {sigs[1].centroid, {0.4, 0.9, 0.1, 0.49}, sigs[0].centroid};
    const Grid m = classify_pixels(bands_from(px, 3), sigs);
    CHECK(m.header().sample_type == SampleType::UInt8);
    CHECK(m[0] == 2.0f);
    CHECK(m[1] == 0.0f);  // NDVI ~0.1
    CHECK(m[2] == 1.0f);
    CHECK_THROWS_AS(classify_pixels(bands_from(px, 3), std::vector<SpectralSignature>{}), EmptySignatureSet);
}

TEST_CASE("distance ties go to the lowest species id") {
    std::vector<SpectralSignature> sigs = {{7, {0.2, 0.2, 0.2, 0.8}, "b"}, {4, {0.2, 0.2, 0.2, 0.6}, "a"}};
    const Grid m = classify_pixels(bands_from({{0.2, 0.2, 0.2, 0.7}}, 1), sigs);
    CHECK(m[0] == 4.0f);
}

TEST_CASE("nodata in any band gives ground") {
    const auto sigs = three();
    RgbNir b = bands_from({sigs[0].centroid, sigs[0].centroid}, 2);
    b.green[1] = Grid::kNoData;
    b.green.header().nodata = Grid::kNoData;
    const Grid m = classify_pixels(b, sigs);
    CHECK(m[0] == 1.0f);
    CHECK(m[1] == 0.0f);
}

TEST_CASE("random pixels match a brute-force nearest-centroid scan") {
    const auto sigs = three();
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::array<double, 4>> px(1000);
    for (auto& p : px)
        for (auto& v : p) v = u(rng);
    for (float gate : {0.3f, -1.0f}) {
        const Grid m = classify_pixels(bands_from(px, 40), sigs, gate);
        for (std::size_t i = 0; i < px.size(); ++i) REQUIRE(m[i] == float(brute_nearest(px[i], sigs, gate)));
    }
}

TEST_CASE("label equivariance under id permutation") {
    auto sigs = three();
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::array<double, 4>> px(900);
    for (auto& p : px)
        for (auto& v : p) v = u(rng);
    const RgbNir bands = bands_from(px, 30);
    const Grid base = classify_pixels(bands, sigs);
    const std::map<int, int> perm = {{1, 9}, {2, 4}, {3, 200}};
    auto permuted = sigs;
    for (auto& s : permuted) s.species_id = perm.at(s.species_id);
    std::reverse(permuted.begin(), permuted.end());
    const Grid m = classify_pixels(bands, permuted);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const int want = base[i] == 0.0f ? 0 : perm.at(int(base[i]));
        REQUIRE(m[i] == float(want));
    }
}

TEST_CASE("signature validation") {
    std::vector<SpectralSignature> bad = {{1, {0.1, 0.1, 0.1, 1.5}, "x"}};
    CHECK_THROWS_AS(validate_signatures(bad), InvalidArgument);
    bad = {{1, {0.1, 0.1, 0.1, 0.5}, "x"}, {2, {0.1, 0.1, 0.1, 0.5}, "y"}};
    CHECK_THROWS_AS(validate_signatures(bad), InvalidArgument);
    bad = {{0, {0.1, 0.1, 0.1, 0.5}, "x"}};
    CHECK_THROWS_AS(validate_signatures(bad), InvalidArgument);
}

TEST_CASE("majority filter") {
    Grid uniform(ct::header(9, 9, SampleType::UInt8), 3.0f);
    CHECK(bit_identical(majority_filter(uniform, 1), uniform));
    Grid salt = uniform;
    salt.at(4, 4) = 1.0f;
    CHECK(majority_filter(salt, 1).at(4, 4) == 3.0f);
    Grid hole = uniform;
    hole.at(4, 4) = 0.0f;
    CHECK(majority_filter(hole, 1).at(4, 4) == 0.0f);
    CHECK(bit_identical(majority_filter(salt, 0), salt));
}

TEST_CASE("majority filter vs brute-force mode") {
    for (int trial = 0; trial < 30; ++trial) {
        const Grid g = random_labels(23 + trial % 5, 17, 100 + trial, 1 + trial % 4, 0.3);
        const int radius = 1 + trial % 3;
        const Grid out = majority_filter(g, radius);
        for (int r = 0; r < g.height(); ++r)
            for (int c = 0; c < g.width(); ++c) {
                REQUIRE(out.at(c, r) == float(brute_majority(g, c, r, radius)));
                // never introduces a label absent from the window
                bool seen = false;
                for (int rr = std::max(0, r - radius); rr <= std::min(g.height() - 1, r + radius); ++rr)
                    for (int cc = std::max(0, c - radius); cc <= std::min(g.width() - 1, c + radius); ++cc)
                        seen = seen || g.at(cc, rr) == out.at(c, r);
                REQUIRE(seen);
            }
    }
}

TEST_CASE("species catalog csv") {
    const SpeciesCatalog cat = default_species();
    REQUIRE(cat.size() == 3);
    CHECK(cat.at(2).params.label == "Ficus");
    CHECK(cat.at(3).params.wood_density == 0.55);
    CHECK(cat.find(9) == nullptr);
    const SpeciesCatalog again = parse_species_csv(species_csv(cat));
    REQUIRE(again.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(again.entries()[i].signature.centroid == cat.entries()[i].signature.centroid);
        CHECK(again.entries()[i].params.crown_dbh_b == cat.entries()[i].params.crown_dbh_b);
    }
    CHECK_THROWS_AS(parse_species_csv("1,a,0.1,0.1,0.1,0.5,0.05,3,1\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_species_csv("1,a,0.1,0.1\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_species_csv("1,a,0.1,0.1,0.1,zz,0.5,3,1\n"), InvalidArgument);
    // ground reflectance sits below the canopy gate
    const auto& gs = kGroundSignature;
    CHECK((gs[3] - gs[0]) / (gs[3] + gs[0]) < 0.3);
}

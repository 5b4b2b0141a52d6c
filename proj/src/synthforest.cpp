#include "canopy/synthforest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "canopy/error.hpp"
#include "canopy/parallel.hpp"
#include "canopy/rng.hpp"
#include "canopy/text.hpp"

namespace canopy {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum Stream : std::uint64_t {
    kTerrain = 1,
    kCount,
    kPosition,
    kMark,
    kThin,
    kSpecies,
    kHeight,
    kField,
    kBandNoise = 100,  // + band index
};

std::vector<double> shares(const SynthParams& p) {
    if (!p.proportions.empty()) return p.proportions;
    return std::vector<double>(p.species.size(), 1.0 / static_cast<double>(p.species.size()));
}

// Low-frequency field driving stem thinning and local stature: the mean of
// a few plane waves with random direction, phase and wavelength, in [-1, 1].
struct HeterogeneityField {
    static constexpr int kWaves = 4;
    double amp = 0.0;
    std::array<double, kWaves> kx{}, ky{}, phase{};

    HeterogeneityField(const SynthParams& p) : amp(p.heterogeneity) {
        const CounterRng rng(p.seed, kField);
        for (int k = 0; k < kWaves; ++k) {
            const auto c = static_cast<std::uint64_t>(k) * 4;
            const double wavelength = p.heterogeneity_wavelength * (0.5 + rng.uniform(c));
            const double theta = kTwoPi * rng.uniform(c + 1);
            kx[k] = kTwoPi * std::cos(theta) / wavelength;
            ky[k] = kTwoPi * std::sin(theta) / wavelength;
            phase[k] = kTwoPi * rng.uniform(c + 2);
        }
    }

    double g(double x, double y) const {
        double s = 0.0;
        for (int k = 0; k < kWaves; ++k) s += std::sin(kx[k] * x + ky[k] * y + phase[k]);
        return s / kWaves;
    }
    double factor(double x, double y) const { return 1.0 + amp * g(x, y); }
};

struct TerrainWave {
    double amplitude, kx, ky, phase;
};

std::vector<TerrainWave> terrain_waves(const SynthParams& p) {
    const CounterRng rng(p.seed, kTerrain);
    std::vector<TerrainWave> waves;
    for (int k = 0; k < p.terrain_waves; ++k) {
        const auto c = static_cast<std::uint64_t>(k) * 4;
        const double wavelength = 300.0 + 1200.0 * rng.uniform(c);
        const double theta = kTwoPi * rng.uniform(c + 1);
        waves.push_back({p.terrain_amplitude / p.terrain_waves, kTwoPi * std::cos(theta) / wavelength,
                         kTwoPi * std::sin(theta) / wavelength, kTwoPi * rng.uniform(c + 2)});
    }
    return waves;
}

Grid render_terrain(const SynthParams& p) {
    const RasterHeader hdr = p.raster_header();
    Grid dem(hdr, 0.0f);
    const auto waves = terrain_waves(p);
    parallel_for(static_cast<std::size_t>(hdr.height), [&](std::size_t r) {
        const int row = static_cast<int>(r);
        const double y = hdr.geo.center_y(row) - p.origin_y;
        for (int col = 0; col < hdr.width; ++col) {
            const double x = hdr.geo.center_x(col) - p.origin_x;
            double z = p.terrain_base;
            for (const auto& w : waves) z += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
            dem.at(col, row) = static_cast<float>(z);
        }
    });
    return dem;
}

double crown_from_height(double h, const SynthParams& p, const SpeciesParams& sp) {
    const double dbh = std::pow(h / p.hd_a, 1.0 / p.hd_b);
    return std::pow(dbh / sp.crown_dbh_a, 1.0 / sp.crown_dbh_b);
}

// A tree before ids and biomass are attached. Positions are relative to the
// lower-left corner.
struct Draft {
    double x, y, height, crown_diameter;
    int species_id;
};

class Drafter {
public:
    Drafter(const SynthParams& p, const HeterogeneityField& field)
        : p_(p), field_(field), cum_(shares(p)), species_(p.seed, kSpecies), height_(p.seed, kHeight) {
        for (std::size_t i = 1; i < cum_.size(); ++i) cum_[i] += cum_[i - 1];
    }

    Draft draft(double x, double y, std::uint64_t key) const {
        const double u = species_.uniform(key);
        std::size_t s = 0;
        while (s + 1 < cum_.size() && u >= cum_[s]) ++s;
        const SpeciesParams& sp = p_.species.entries()[s].params;
        const double mu = p_.height_mu + std::log(1.0 + 0.5 * field_.amp * field_.g(x, y));
        double h = p_.min_height;
        for (std::uint64_t t = 0; t < 64; ++t) {
            const double v = std::exp(mu + p_.height_sigma * height_.normal(key * 64 + t));
            if (v >= p_.min_height) {
                h = std::min(v, p_.max_height);
                break;
            }
        }
        return {x, y, h, crown_from_height(h, p_, sp), sp.species_id};
    }

    bool inside(const Draft& d) const {
        if (!p_.crowns_inside) return true;
        const double r = d.crown_diameter / 2;
        return d.x >= r && d.y >= r && d.x <= p_.width_m - r && d.y <= p_.height_m - r;
    }

private:
    const SynthParams& p_;
    const HeterogeneityField& field_;
    std::vector<double> cum_;
    CounterRng species_, height_;
};

// Uniform bucket grid over the scene for neighbour queries.
class PointHash {
public:
    PointHash(double width, double height, double cell)
        : cell_(std::max(cell, 1e-3)),
          nx_(std::max(1, static_cast<int>(std::ceil(width / cell_)))),
          ny_(std::max(1, static_cast<int>(std::ceil(height / cell_)))),
          buckets_(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_)) {}

    void insert(double x, double y, std::size_t id) { buckets_[bucket(cx(x), cy(y))].push_back(id); }

    template <class F>
    void near(double x, double y, double reach, F&& f) const {
        const int k = static_cast<int>(std::ceil(reach / cell_));
        const int c0 = cx(x), r0 = cy(y);
        for (int r = std::max(0, r0 - k); r <= std::min(ny_ - 1, r0 + k); ++r)
            for (int c = std::max(0, c0 - k); c <= std::min(nx_ - 1, c0 + k); ++c)
                for (std::size_t id : buckets_[bucket(c, r)]) f(id);
    }

private:
    int cx(double x) const { return std::clamp(static_cast<int>(x / cell_), 0, nx_ - 1); }
    int cy(double y) const { return std::clamp(static_cast<int>(y / cell_), 0, ny_ - 1); }
    std::size_t bucket(int c, int r) const {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(c);
    }

    double cell_;
    int nx_, ny_;
    std::vector<std::vector<std::size_t>> buckets_;
};

std::vector<Draft> place_matern(const SynthParams& p, const HeterogeneityField& field, const Drafter& drafter) {
    const double lambda = p.stems_per_ha / 1e4 * (1.0 + field.amp);  // per m^2, before thinning
    const double r = p.hardcore_fraction * expected_crown_diameter(p);
    const double disc = std::numbers::pi * r * r;
    // Matern II keeps (1 - exp(-lambda0 disc)) / disc points per unit area; invert for lambda0.
    double lambda0 = lambda;
    if (disc > 0) {
        const double x = lambda * disc;
        lambda0 = x < 1.0 ? -std::log1p(-x) / disc : -std::log(1e-6) / disc;
    }
    const CounterRng count(p.seed, kCount), pos(p.seed, kPosition), mark(p.seed, kMark), thin(p.seed, kThin);
    const std::uint64_t n = count.poisson(lambda0 * p.width_m * p.height_m, 0);

    std::vector<double> xs(n), ys(n), marks(n);
    PointHash hash(p.width_m, p.height_m, r);
    for (std::uint64_t i = 0; i < n; ++i) {
        xs[i] = pos.uniform(2 * i) * p.width_m;
        ys[i] = pos.uniform(2 * i + 1) * p.height_m;
        marks[i] = mark.uniform(i);
        hash.insert(xs[i], ys[i], i);
    }
    std::vector<Draft> out;
    for (std::uint64_t i = 0; i < n; ++i) {
        bool keep = true;
        if (r > 0) {
            hash.near(xs[i], ys[i], r, [&](std::size_t j) {
                if (j == i || !keep) return;
                const double d = std::hypot(xs[i] - xs[j], ys[i] - ys[j]);
                if (d < r && (marks[j] < marks[i] || (marks[j] == marks[i] && j < i))) keep = false;
            });
        }
        if (!keep) continue;
        if (field.amp > 0 && thin.uniform(i) >= field.factor(xs[i], ys[i]) / (1.0 + field.amp)) continue;
        const Draft d = drafter.draft(xs[i], ys[i], i);
        if (drafter.inside(d)) out.push_back(d);
    }
    return out;
}

std::vector<Draft> place_nonoverlapping(const SynthParams& p, const HeterogeneityField& field,
                                        const Drafter& drafter) {
    const CounterRng count(p.seed, kCount), pos(p.seed, kPosition), thin(p.seed, kThin);
    const std::uint64_t target = count.poisson(p.stems_per_ha / 1e4 * p.width_m * p.height_m, 0);
    const std::uint64_t max_attempts = 200 * target + 1000;
    const double cell = 2.0 * expected_crown_diameter(p) + p.crown_gap;
    PointHash hash(p.width_m, p.height_m, cell);
    std::vector<Draft> out;
    double widest = 0.0;
    for (std::uint64_t k = 0; k < max_attempts && out.size() < target; ++k) {
        const double x = pos.uniform(2 * k) * p.width_m, y = pos.uniform(2 * k + 1) * p.height_m;
        if (field.amp > 0 && thin.uniform(k) >= field.factor(x, y) / (1.0 + field.amp)) continue;
        const Draft d = drafter.draft(x, y, k);
        if (!drafter.inside(d)) continue;
        bool clear = true;
        hash.near(x, y, (d.crown_diameter + widest) / 2 + p.crown_gap, [&](std::size_t j) {
            const Draft& o = out[j];
            if (std::hypot(x - o.x, y - o.y) < (d.crown_diameter + o.crown_diameter) / 2 + p.crown_gap)
                clear = false;
        });
        if (!clear) continue;
        hash.insert(x, y, out.size());
        out.push_back(d);
        widest = std::max(widest, d.crown_diameter);
    }
    return out;
}

}  // namespace

void SynthParams::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw InvalidArgument(fmt::format("synth parameter out of range: {}", what));
    };
    need(width_m > 0 && height_m > 0, "extent must be positive");
    need(resolution > 0, "resolution must be > 0");
    need(width_px() >= 1 && height_px() >= 1, "extent smaller than one pixel");
    need(stems_per_ha >= 0 && std::isfinite(stems_per_ha), "stems_per_ha must be >= 0");
    need(!species.empty(), "species mix is empty");
    need(proportions.empty() || proportions.size() == species.size(), "one proportion per species");
    if (!proportions.empty()) {
        double sum = 0;
        for (double v : proportions) {
            need(v >= 0, "proportions must be >= 0");
            sum += v;
        }
        need(std::abs(sum - 1.0) <= 1e-9, "proportions must sum to 1");
    }
    for (const auto& e : species.entries()) e.params.validate();
    need(std::isfinite(height_mu), "height_mu must be finite");
    need(height_sigma >= 0, "height_sigma must be >= 0");
    need(min_height > 0 && max_height > min_height, "need 0 < min_height < max_height");
    need(hd_a > 0 && hd_b > 0, "height-diameter coefficients must be > 0");
    need(hardcore_fraction >= 0, "hardcore_fraction must be >= 0");
    need(crown_gap >= 0, "crown_gap must be >= 0");
    need(heterogeneity >= 0 && heterogeneity < 1, "heterogeneity must be in [0, 1)");
    need(heterogeneity_wavelength > 0, "heterogeneity_wavelength must be > 0");
    need(terrain_waves >= 0 && terrain_amplitude >= 0, "terrain waves and amplitude must be >= 0");
    need(spectral_noise >= 0, "spectral_noise must be >= 0");
}

int SynthParams::width_px() const { return static_cast<int>(std::lround(width_m / resolution)); }
int SynthParams::height_px() const { return static_cast<int>(std::lround(height_m / resolution)); }

RasterHeader SynthParams::raster_header() const {
    RasterHeader h;
    h.width = width_px();
    h.height = height_px();
    h.sample_type = SampleType::Float32;
    h.geo = {origin_x, origin_y + h.height * resolution, resolution, -resolution};
    h.crs = crs;
    return h;
}

double crown_surface(const TruthTree& tree, double d) {
    const double half = tree.crown_diameter / 2;
    if (d > half) return 0.0;
    const double q = d / half;
    return tree.height - 0.6 * tree.height * q * q;
}

double expected_crown_diameter(const SynthParams& p) {
    const auto w = shares(p);
    double mean = 0.0;
    for (std::size_t s = 0; s < p.species.size(); ++s) {
        const SpeciesParams& sp = p.species.entries()[s].params;
        const double e = 1.0 / (sp.crown_dbh_b * p.hd_b);
        const double k = std::pow(sp.crown_dbh_a, -1.0 / sp.crown_dbh_b) * std::pow(p.hd_a, -e);
        mean += w[s] * k * std::exp(e * p.height_mu + 0.5 * e * e * p.height_sigma * p.height_sigma);
    }
    return mean;
}

GroundTruth generate(const SynthParams& params, const AllometricModel& model) {
    params.validate();
    model.validate();
    GroundTruth truth;
    truth.dem = render_terrain(params);
    truth.requested_density = params.stems_per_ha;

    const HeterogeneityField field(params);

    std::vector<Draft> drafts;
    if (params.stems_per_ha > 0) {
        const Drafter drafter(params, field);
        drafts = params.placement == Placement::MaternII ? place_matern(params, field, drafter)
                                                         : place_nonoverlapping(params, field, drafter);
    }

    std::vector<TreeBiomass> biomass;
    for (const Draft& d : drafts) {
        TruthTree t;
        t.tree_id = static_cast<int>(truth.trees.size()) + 1;
        t.x = params.origin_x + d.x;
        t.y = params.origin_y + d.y;
        t.height = d.height;
        t.crown_diameter = d.crown_diameter;
        t.species_id = d.species_id;
        const TreeBiomass b =
            tree_biomass(t.tree_id, t.crown_diameter, t.height, params.species.at(d.species_id).params, model);
        t.dbh = b.dbh;
        t.agb = b.agb;
        t.carbon = b.carbon;
        t.co2e = b.co2e;
        truth.trees.push_back(t);
        biomass.push_back(b);
    }
    truth.totals = stand_totals(biomass, params.area_ha());
    truth.realized_density = static_cast<double>(truth.trees.size()) / params.area_ha();
    return truth;
}

SceneRasters render(const GroundTruth& truth, const SynthParams& params) {
    params.validate();
    const RasterHeader hdr = params.raster_header();
    if (truth.dem.width() != hdr.width || truth.dem.height() != hdr.height)
        throw InvalidArgument("ground truth terrain does not match the synth extent");
    SceneRasters out;
    out.dem = truth.dem;
    out.dsm = truth.dem;
    out.owner.assign(hdr.pixel_count(), 0);

    // Bucket trees by row band so each band paints only its own rows.
    constexpr int kBand = 64;
    const int nbands = (hdr.height + kBand - 1) / kBand;
    std::vector<std::vector<std::size_t>> band_trees(static_cast<std::size_t>(nbands));
    const auto& g = hdr.geo;
    for (std::size_t i = 0; i < truth.trees.size(); ++i) {
        const TruthTree& t = truth.trees[i];
        const double half = t.crown_diameter / 2;
        const int r0 = std::max(0, static_cast<int>(std::floor(g.row_of(t.y + half))));
        const int r1 = std::min(hdr.height - 1, static_cast<int>(std::ceil(g.row_of(t.y - half))));
        for (int b = r0 / kBand; r0 <= r1 && b <= r1 / kBand; ++b) band_trees[static_cast<std::size_t>(b)].push_back(i);
    }

    std::vector<double> top(hdr.pixel_count(), 0.0);
    parallel_for(static_cast<std::size_t>(nbands), [&](std::size_t b) {
        const int row_lo = static_cast<int>(b) * kBand, row_hi = std::min(hdr.height, row_lo + kBand);
        for (std::size_t i : band_trees[b]) {
            const TruthTree& t = truth.trees[i];
            const double half = t.crown_diameter / 2;
            const int r0 = std::max(row_lo, static_cast<int>(std::floor(g.row_of(t.y + half))));
            const int r1 = std::min(row_hi - 1, static_cast<int>(std::ceil(g.row_of(t.y - half))));
            const int c0 = std::max(0, static_cast<int>(std::floor(g.col_of(t.x - half))));
            const int c1 = std::min(hdr.width - 1, static_cast<int>(std::ceil(g.col_of(t.x + half))));
            for (int row = r0; row <= r1; ++row) {
                const double dy = g.center_y(row) - t.y;
                for (int col = c0; col <= c1; ++col) {
                    const double d = std::hypot(g.center_x(col) - t.x, dy);
                    if (d > half) continue;
                    const double z = crown_surface(t, d);
                    const std::size_t idx = out.dsm.index(col, row);
                    // Trees are visited in index order, so ties keep the lower index.
                    if (z > top[idx]) {
                        top[idx] = z;
                        out.owner[idx] = static_cast<std::int32_t>(i + 1);
                    }
                }
            }
        }
        for (int row = row_lo; row < row_hi; ++row)
            for (int col = 0; col < hdr.width; ++col) {
                const std::size_t idx = out.dsm.index(col, row);
                if (out.owner[idx] != 0)
                    out.dsm[idx] = static_cast<float>(static_cast<double>(out.dem[idx]) + top[idx]);
            }
    });

    std::vector<std::array<double, 4>> centroid(truth.trees.size());
    for (std::size_t i = 0; i < truth.trees.size(); ++i)
        centroid[i] = params.species.at(truth.trees[i].species_id).signature.centroid;

    Grid* bands[4] = {&out.red, &out.green, &out.blue, &out.nir};
    for (int k = 0; k < 4; ++k) {
        *bands[k] = Grid(hdr, 0.0f);
        Grid& band = *bands[k];
        const CounterRng noise(params.seed, kBandNoise + static_cast<std::uint64_t>(k));
        parallel_for(static_cast<std::size_t>(hdr.height), [&](std::size_t r) {
            for (int col = 0; col < hdr.width; ++col) {
                const std::size_t idx = band.index(col, static_cast<int>(r));
                const std::int32_t o = out.owner[idx];
                double v = o ? centroid[static_cast<std::size_t>(o - 1)][k] : kGroundSignature[k];
                if (params.spectral_noise > 0) v += params.spectral_noise * noise.normal(idx);
                band[idx] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        });
    }
    return out;
}

std::vector<bool> visible_trees(const GroundTruth& truth, const SceneRasters& scene) {
    std::vector<bool> vis(truth.trees.size(), false);
    const auto& g = scene.dsm.geo();
    for (std::size_t i = 0; i < truth.trees.size(); ++i) {
        const int col = static_cast<int>(std::lround(g.col_of(truth.trees[i].x)));
        const int row = static_cast<int>(std::lround(g.row_of(truth.trees[i].y)));
        if (scene.dsm.contains(col, row))
            vis[i] = scene.owner[scene.dsm.index(col, row)] == static_cast<std::int32_t>(i + 1);
    }
    return vis;
}

std::string truth_csv(const GroundTruth& truth) {
    std::string out = "tree_id,x,y,height_m,crown_diameter_m,species_id,dbh_cm,agb_kg,carbon_kg,co2e_kg\n";
    for (const auto& t : truth.trees)
        out += fmt::format("{},{:.3f},{:.3f},{},{},{},{},{},{},{}\n", t.tree_id, t.x, t.y, fmt6(t.height),
                           fmt6(t.crown_diameter), t.species_id, fmt6(t.dbh), fmt6(t.agb), fmt6(t.carbon),
                           fmt6(t.co2e));
    return out;
}

std::string truth_json(const GroundTruth& truth, const SynthParams& params) {
    const StandCarbon& s = truth.totals;
    return fmt::format(
        "{{\n  \"seed\": {},\n  \"area_ha\": {},\n  \"requested_stems_per_ha\": {},\n"
        "  \"realized_stems_per_ha\": {},\n  \"tree_count\": {},\n  \"agb_kg\": {},\n  \"carbon_kg\": {},\n"
        "  \"co2e_kg\": {},\n  \"agb_mg_ha\": {},\n  \"carbon_mg_ha\": {},\n  \"co2e_t_ha\": {}\n}}\n",
        params.seed, fmt6(s.area_ha), fmt6(truth.requested_density), fmt6(truth.realized_density), s.tree_count,
        fmt6(s.agb_kg), fmt6(s.carbon_kg), fmt6(s.co2e_kg), fmt6(s.agb_mg_ha), fmt6(s.carbon_mg_ha),
        fmt6(s.co2e_t_ha));
}

}  // namespace canopy

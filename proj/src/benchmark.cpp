#include "canopy/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "canopy/error.hpp"
#include "canopy/text.hpp"

namespace canopy {

namespace {

Extent scene_extent(const SynthParams& s) {
    return {s.origin_x, s.origin_x + s.width_m, s.origin_y, s.origin_y + s.height_m};
}

std::vector<Stem> stems_of(const GroundTruth& truth) {
    std::vector<Stem> out;
    out.reserve(truth.trees.size());
    for (const auto& t : truth.trees) out.push_back({t.x, t.y, t.agb});
    return out;
}

// Keeps inverse-variance weighting defined when a component is exact.
double positive(double v, double scale) { return std::max(v, 1e-12 * (1.0 + scale * scale)); }

std::string summary_json(const ErrorSummary& s) {
    return fmt::format(
        "{{\"runs\": {}, \"mean_bias_mg_ha\": {}, \"mean_abs_error_mg_ha\": {}, \"rmse_percent\": {}, "
        "\"coverage\": {}}}",
        s.runs, fmt6(s.mean_bias), fmt6(s.mean_abs_error), fmt6(s.rmse_percent), fmt6(s.coverage));
}

std::string report_json(const ErrorReport& r, double variance) {
    return fmt::format("{{\"estimate\": {}, \"variance\": {}, \"bias\": {}, \"error_percent\": {}, \"within_ci\": {}}}",
                       fmt6(r.estimate), fmt6(variance), fmt6(r.bias), fmt6(r.rmse_percent),
                       r.within_ci ? "true" : "false");
}

}  // namespace

SynthParams reference_scene() {
    SynthParams s;
    s.width_m = s.height_m = 1200.0;
    s.resolution = 0.5;
    s.stems_per_ha = 200.0;
    s.height_mu = std::log(14.0);
    s.heterogeneity = 0.6;
    s.heterogeneity_wavelength = 500.0;
    s.spectral_noise = 0.03;
    return s;
}

DetectionMatch match_detections(const std::vector<TreeRecord>& detected, const std::vector<TruthTree>& reference,
                                double tolerance_fraction, double min_tolerance) {
    DetectionMatch m;
    m.detections = detected.size();
    m.references = reference.size();
    std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
    for (std::size_t j = 0; j < reference.size(); ++j) {
        const double tol = std::max(min_tolerance, tolerance_fraction * reference[j].crown_diameter);
        for (std::size_t i = 0; i < detected.size(); ++i) {
            const double d = std::hypot(detected[i].x - reference[j].x, detected[i].y - reference[j].y);
            if (d <= tol) cand.emplace_back(d, i, j);
        }
    }
    std::sort(cand.begin(), cand.end());
    std::vector<bool> used_d(detected.size(), false), used_r(reference.size(), false);
    for (const auto& [d, i, j] : cand) {
        if (used_d[i] || used_r[j]) continue;
        used_d[i] = used_r[j] = true;
        m.pairs.emplace_back(i, j);
    }
    m.matched = m.pairs.size();
    m.precision = m.detections ? static_cast<double>(m.matched) / static_cast<double>(m.detections) : 1.0;
    m.recall = m.references ? static_cast<double>(m.matched) / static_cast<double>(m.references) : 1.0;
    return m;
}

PlotEstimate plot_estimate(const std::vector<GroundPlot>& plots, const Extent& extent, int support_side) {
    if (plots.empty()) throw TooFewPlots(0, 1);
    if (support_side < 1) throw InvalidArgument("support_side must be >= 1");
    PlotEstimate e;
    e.plot_count = plots.size();
    const double n = static_cast<double>(plots.size());
    double mean = 0.0;
    for (const auto& p : plots) mean += p.biomass_density;
    mean /= n;
    if (plots.size() >= 10) {
        e.variogram = fit_variogram(plots);
        const OrdinaryKriging ok(plots, e.variogram);
        std::vector<std::pair<double, double>> support;
        const int k = support_side;
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c)
                support.emplace_back(extent.min_x + (c + 0.5) * extent.width() / k,
                                     extent.min_y + (r + 0.5) * extent.height() / k);
        const auto b = ok.block(support);
        e.mean = b.mean;
        e.variance = b.variance;
        e.kriged = true;
        return e;
    }
    e.mean = mean;
    if (plots.size() == 1) {
        e.variance = mean * mean;
    } else {
        double s2 = 0.0;
        for (const auto& p : plots) s2 += (p.biomass_density - mean) * (p.biomass_density - mean);
        e.variance = s2 / (n - 1) / n;
    }
    return e;
}

void BenchmarkParams::validate() const {
    scene.validate();
    inventory.validate();
    if (seeds < 1) throw InvalidArgument("benchmark needs at least one seed");
    if (!(recall > 0.0 && recall <= 1.0)) throw InvalidArgument("recall must be in (0, 1]");
    if (support_side < 1) throw InvalidArgument("support_side must be >= 1");
}

BenchmarkRun benchmark_run(const BenchmarkParams& params, std::uint64_t seed, const AllometricModel& model) {
    SynthParams scene = params.scene;
    scene.seed = seed;
    const GroundTruth truth = generate(scene, model);
    BenchmarkRun run;
    run.seed = seed;
    run.truth_mg_ha = truth.totals.agb_mg_ha;
    run.true_trees = truth.trees.size();

    // Census path: render, then inventory every visible crown.
    Inventory inv;
    {
        SceneRasters r = render(truth, scene);
        InventoryInputs in{std::move(r.dsm), std::move(r.dem),
                           RgbNir{std::move(r.red), std::move(r.green), std::move(r.blue), std::move(r.nir)},
                           std::nullopt};
        inv = run_inventory(in, params.inventory, scene.species, model);
    }
    run.detected_trees = inv.trees.size();
    std::vector<double> agbs;
    agbs.reserve(inv.trees.size());
    for (const auto& t : inv.trees) agbs.push_back(t.agb);
    run.census_mean = inv.stand.agb_mg_ha;
    run.census_var = census_variance(agbs, scene.area_ha(), params.recall);

    // Plot path: sparse ground plots over the true stems.
    const auto stems = stems_of(truth);
    const auto plots = sample_plots(stems, scene_extent(scene), params.plots);
    run.plots = plot_estimate(plots, scene_extent(scene), params.support_side);

    const double scale = run.truth_mg_ha;
    run.ensemble = ensemble(run.census_mean, positive(run.census_var, scale), run.plots.mean,
                            positive(run.plots.variance, scale));
    run.census_error = error_report(run.census_mean, run.census_var, run.truth_mg_ha);
    run.plot_error = error_report(run.plots.mean, run.plots.variance, run.truth_mg_ha);
    run.ensemble_error = error_report(run.ensemble.mean, run.ensemble.variance, run.truth_mg_ha);
    return run;
}

BenchmarkResult run_benchmark(const BenchmarkParams& params, const AllometricModel& model) {
    params.validate();
    BenchmarkResult res;
    std::vector<ErrorReport> c, p, e;
    for (int k = 0; k < params.seeds; ++k) {
        res.runs.push_back(benchmark_run(params, params.first_seed + static_cast<std::uint64_t>(k), model));
        c.push_back(res.runs.back().census_error);
        p.push_back(res.runs.back().plot_error);
        e.push_back(res.runs.back().ensemble_error);
    }
    res.census = summarize(c);
    res.plots = summarize(p);
    res.ensemble = summarize(e);
    return res;
}

std::vector<SweepPoint> spacing_sweep(const BenchmarkParams& params, const std::vector<double>& spacings,
                                      const AllometricModel& model) {
    params.validate();
    std::vector<GroundTruth> truths;
    for (int k = 0; k < params.seeds; ++k) {
        SynthParams scene = params.scene;
        scene.seed = params.first_seed + static_cast<std::uint64_t>(k);
        truths.push_back(generate(scene, model));
    }
    const Extent ext = scene_extent(params.scene);
    std::vector<SweepPoint> out;
    for (double spacing : spacings) {
        PlotDesign design = params.plots;
        design.spacing = spacing;
        SweepPoint pt;
        pt.spacing = spacing;
        for (const auto& truth : truths) {
            const auto plots = sample_plots(stems_of(truth), ext, design);
            const PlotEstimate est = plot_estimate(plots, ext, params.support_side);
            pt.mean_plots += static_cast<double>(est.plot_count);
            pt.mean_abs_error_pct += std::abs(est.mean - truth.totals.agb_mg_ha) / truth.totals.agb_mg_ha * 100.0;
        }
        pt.mean_plots /= static_cast<double>(truths.size());
        pt.mean_abs_error_pct /= static_cast<double>(truths.size());
        out.push_back(pt);
    }
    return out;
}

std::string benchmark_json(const BenchmarkResult& result, const BenchmarkParams& params,
                           const std::vector<SweepPoint>& sweep) {
    std::string runs;
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        const BenchmarkRun& r = result.runs[i];
        runs += fmt::format(
            "    {{\"seed\": {}, \"truth_agb_mg_ha\": {}, \"true_trees\": {}, \"detected_trees\": {}, "
            "\"plot_count\": {}, \"plots_kriged\": {},\n"
            "     \"variogram\": {{\"nugget\": {}, \"sill\": {}, \"range_m\": {}}},\n"
            "     \"census\": {},\n     \"plots\": {},\n     \"ensemble\": {},\n"
            "     \"ensemble_census_weight\": {}}}{}\n",
            r.seed, fmt6(r.truth_mg_ha), r.true_trees, r.detected_trees, r.plots.plot_count,
            r.plots.kriged ? "true" : "false", fmt6(r.plots.variogram.nugget), fmt6(r.plots.variogram.sill),
            fmt6(r.plots.variogram.range), report_json(r.census_error, r.census_var),
            report_json(r.plot_error, r.plots.variance), report_json(r.ensemble_error, r.ensemble.variance),
            fmt6(r.ensemble.census_weight), i + 1 < result.runs.size() ? "," : "");
    }
    std::string sw;
    for (std::size_t i = 0; i < sweep.size(); ++i)
        sw += fmt::format("    {{\"spacing_m\": {}, \"mean_plots\": {}, \"mean_abs_error_percent\": {}}}{}\n",
                          fmt6(sweep[i].spacing), fmt6(sweep[i].mean_plots), fmt6(sweep[i].mean_abs_error_pct),
                          i + 1 < sweep.size() ? "," : "");
    const SynthParams& s = params.scene;
    return fmt::format(
        "{{\n  \"scene\": {{\"width_m\": {}, \"height_m\": {}, \"resolution_m\": {}, \"stems_per_ha\": {}, "
        "\"heterogeneity\": {}, \"heterogeneity_wavelength_m\": {}}},\n"
        "  \"plot_design\": {{\"spacing_m\": {}, \"radius_m\": {}}},\n"
        "  \"census_recall\": {},\n  \"first_seed\": {},\n  \"seeds\": {},\n"
        "  \"summary\": {{\n    \"census\": {},\n    \"plots\": {},\n    \"ensemble\": {}\n  }},\n"
        "  \"runs\": [\n{}  ],\n  \"spacing_sweep\": [\n{}  ]\n}}\n",
        fmt6(s.width_m), fmt6(s.height_m), fmt6(s.resolution), fmt6(s.stems_per_ha), fmt6(s.heterogeneity),
        fmt6(s.heterogeneity_wavelength), fmt6(params.plots.spacing), fmt6(params.plots.radius), fmt6(params.recall),
        params.first_seed, params.seeds, summary_json(result.census), summary_json(result.plots),
        summary_json(result.ensemble), runs, sw);
}

}  // namespace canopy

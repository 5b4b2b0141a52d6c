#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "canopy/pipeline.hpp"
#include "canopy/spatial.hpp"
#include "canopy/synthforest.hpp"

namespace canopy {

// One-to-one greedy pairing of detected trees with reference trees, closest
// pairs first. A pair qualifies when the stem offset is at most
// max(min_tolerance, tolerance_fraction x reference crown diameter).
struct DetectionMatch {
    std::size_t detections = 0, references = 0, matched = 0;
    double precision = 0.0, recall = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (detection, reference)
};

DetectionMatch match_detections(const std::vector<TreeRecord>& detected, const std::vector<TruthTree>& reference,
                                double tolerance_fraction = 0.25, double min_tolerance = 1.0);

struct PlotEstimate {
    double mean = 0.0, variance = 0.0;  // Mg/ha and (Mg/ha)^2
    std::size_t plot_count = 0;
    bool kriged = false;  // false: plain plot mean with s^2/n
    VariogramModel variogram;
};

/// Stand-mean biomass from plots. With at least 10 plots the variogram is
/// fitted and the stand is block-kriged over a support_side^2 lattice of
/// cell centres; otherwise the plot mean is used with variance s^2/n (and the
/// squared mean when there is a single plot).
PlotEstimate plot_estimate(const std::vector<GroundPlot>& plots, const Extent& extent, int support_side = 24);

// Heterogeneous 144 ha scene at 0.5 m/px used for the census-versus-plots
// comparison: 200 stems/ha, median height 14 m, stature and density varying
// by +-60% over a few hundred metres.
SynthParams reference_scene();

struct BenchmarkParams {
    SynthParams scene = reference_scene();  // seed is replaced per run
    InventoryParams inventory;
    PlotDesign plots;
    double recall = 0.9;  // detection recall assumed by the census variance
    std::uint64_t first_seed = 1;
    int seeds = 20;
    int support_side = 24;

    void validate() const;
};

struct BenchmarkRun {
    std::uint64_t seed = 0;
    double truth_mg_ha = 0.0;
    std::size_t true_trees = 0, detected_trees = 0;
    PlotEstimate plots;
    double census_mean = 0.0, census_var = 0.0;
    EnsembleEstimate ensemble;
    ErrorReport census_error, plot_error, ensemble_error;
};

struct BenchmarkResult {
    std::vector<BenchmarkRun> runs;
    ErrorSummary census, plots, ensemble;
};

BenchmarkRun benchmark_run(const BenchmarkParams& params, std::uint64_t seed, const AllometricModel& model);
BenchmarkResult run_benchmark(const BenchmarkParams& params, const AllometricModel& model);

struct SweepPoint {
    double spacing = 0.0;
    double mean_plots = 0.0;           // average plot count per run
    double mean_abs_error_pct = 0.0;   // of the plot estimate, relative to truth
};

// Plot-only path over the scene's ground truth (no rendering) for each spacing.
std::vector<SweepPoint> spacing_sweep(const BenchmarkParams& params, const std::vector<double>& spacings,
                                      const AllometricModel& model);

std::string benchmark_json(const BenchmarkResult& result, const BenchmarkParams& params,
                           const std::vector<SweepPoint>& sweep);

}  // namespace canopy

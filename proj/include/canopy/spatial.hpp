#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "canopy/grid.hpp"

namespace canopy {

struct GroundPlot {
    double x = 0.0, y = 0.0;     // plot centre, m
    double radius = 12.0;        // m
    double biomass_density = 0;  // Mg/ha
};

// A stem with its above-ground biomass, used both for ground truth and for
// census output.
struct Stem {
    double x = 0.0, y = 0.0;
    double agb_kg = 0.0;
};

struct PlotDesign {
    double spacing = 300.0;  // m between plot centres
    double radius = 12.0;    // m
    bool enforce_radius_range = true;  // require 7 <= radius <= 15
};

/// Plots on a regular grid over `extent`, the first centre at spacing/2 from
/// the lower-left corner, rows in ascending y then columns in ascending x.
/// Density is the biomass of stems inside the disc (boundary included)
/// divided by the disc area.
std::vector<GroundPlot> sample_plots(std::span<const Stem> stems, const Extent& extent, const PlotDesign& design);

struct VariogramModel {
    double nugget = 0.0;
    double sill = 1.0;
    double range = 100.0;  // exponential scale parameter, m

    double partial_sill() const { return sill - nugget; }
    // nugget + (sill - nugget)(1 - exp(-h/range)); equals the nugget at h = 0.
    double gamma(double h) const;
    void validate() const;
};

struct EmpiricalVariogram {
    std::vector<double> lag;          // mean pair distance per non-empty bin
    std::vector<double> semivariance;
    std::vector<std::size_t> pairs;
};

EmpiricalVariogram empirical_variogram(std::span<const GroundPlot> plots, int bins = 10);

/// Weighted least-squares exponential fit to the empirical variogram (10
/// bins out to half the largest plot separation). Throws TooFewPlots below
/// 10 plots.
VariogramModel fit_variogram(std::span<const GroundPlot> plots);

struct KrigingPoint {
    double mean = 0.0;
    double variance = 0.0;
    Eigen::VectorXd weights;  // one per plot, sums to 1
    double lagrange = 0.0;
};

// Ordinary kriging system for a fixed plot set, factorised once and shared
// read-only by all queries.
class OrdinaryKriging {
public:
    OrdinaryKriging(std::vector<GroundPlot> plots, VariogramModel model);

    KrigingPoint predict(double x, double y) const;
    const std::vector<GroundPlot>& plots() const { return plots_; }
    const VariogramModel& model() const { return model_; }

    // Kriging estimate of the mean over a set of support points, with the
    // block estimation variance.
    struct Block {
        double mean = 0.0;
        double variance = 0.0;
    };
    Block block(std::span<const std::pair<double, double>> support) const;

private:
    Eigen::VectorXd rhs(double x, double y) const;

    std::vector<GroundPlot> plots_;
    VariogramModel model_;
    Eigen::MatrixXd gamma_;  // plot-to-plot semivariances, zero diagonal
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

struct KrigedGrids {
    Grid mean;
    Grid variance;
};

/// Ordinary kriging at every cell centre of `query`. Needs at least three
/// plots; duplicate plot coordinates raise SingularSystem.
KrigedGrids krige(std::span<const GroundPlot> plots, const VariogramModel& model, const RasterHeader& query);

struct EnsembleEstimate {
    double census_mean = 0, census_var = 0;
    double interp_mean = 0, interp_var = 0;
    double mean = 0, variance = 0;
    double census_weight = 0, interp_weight = 0;
};

// Inverse-variance combination. Throws NonPositiveVariance.
EnsembleEstimate ensemble(double census_mean, double census_var, double interp_mean, double interp_var);

/// Variance of a census stand density (Mg/ha): (1 - recall) * n * s^2 / A^2,
/// where s^2 is the sample variance of per-tree AGB (converted to Mg) and A
/// the area in ha.
double census_variance(std::span<const double> tree_agb_kg, double area_ha, double recall);

struct ErrorReport {
    double estimate = 0, truth = 0;
    double bias = 0;          // estimate - truth, Mg/ha
    double rmse_percent = 0;  // |bias| / truth * 100 for a single run
    bool within_ci = false;   // |bias| <= 1.96 sigma
};

ErrorReport error_report(double estimate, double variance, double truth);

// Aggregate over repeated runs: mean bias, RMSE% of the errors relative to
// the mean truth, and the share of runs whose interval covered the truth.
struct ErrorSummary {
    std::size_t runs = 0;
    double mean_bias = 0, mean_abs_error = 0, rmse_percent = 0, coverage = 0;
};
ErrorSummary summarize(std::span<const ErrorReport> reports);

}  // namespace canopy

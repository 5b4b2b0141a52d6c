#include "canopy/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "canopy/error.hpp"
#include "canopy/parallel.hpp"

namespace canopy {

namespace {

int centre_count(double length, double spacing) {
    if (!(length > spacing / 2)) return 0;
    return static_cast<int>(std::ceil((length - spacing / 2) / spacing));
}

double dist(double ax, double ay, double bx, double by) { return std::hypot(ax - bx, ay - by); }

}  // namespace

std::vector<GroundPlot> sample_plots(std::span<const Stem> stems, const Extent& extent, const PlotDesign& design) {
    if (!(design.spacing > 0)) throw InvalidArgument("plot spacing must be > 0");
    if (!(design.radius > 0)) throw InvalidArgument("plot radius must be > 0");
    if (design.enforce_radius_range && (design.radius < 7 || design.radius > 15))
        throw InvalidArgument(fmt::format("plot radius {} m outside 7-15 m", design.radius));
    const double s = design.spacing, r = design.radius;
    const int nx = centre_count(extent.width(), s), ny = centre_count(extent.height(), s);
    std::vector<GroundPlot> plots;
    plots.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            plots.push_back({extent.min_x + s / 2 + i * s, extent.min_y + s / 2 + j * s, r, 0.0});

    std::vector<double> kg(plots.size(), 0.0);
    const int reach = static_cast<int>(std::ceil(r / s));
    for (const Stem& st : stems) {
        const int ci = static_cast<int>(std::lround((st.x - extent.min_x - s / 2) / s));
        const int cj = static_cast<int>(std::lround((st.y - extent.min_y - s / 2) / s));
        for (int j = std::max(0, cj - reach); j <= std::min(ny - 1, cj + reach); ++j)
            for (int i = std::max(0, ci - reach); i <= std::min(nx - 1, ci + reach); ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * nx + i;
                const double dx = st.x - plots[k].x, dy = st.y - plots[k].y;
                if (dx * dx + dy * dy <= r * r) kg[k] += st.agb_kg;
            }
    }
    const double area_ha = std::numbers::pi * r * r / 10000.0;
    for (std::size_t k = 0; k < plots.size(); ++k) plots[k].biomass_density = kg[k] / 1000.0 / area_ha;
    return plots;
}

double VariogramModel::gamma(double h) const {
    return nugget + (sill - nugget) * (1.0 - std::exp(-h / range));
}

void VariogramModel::validate() const {
    if (!(nugget >= 0.0)) throw InvalidArgument("variogram nugget must be >= 0");
    if (!(sill > nugget)) throw InvalidArgument("variogram sill must exceed the nugget");
    if (!(range > 0.0)) throw InvalidArgument("variogram range must be > 0");
}

EmpiricalVariogram empirical_variogram(std::span<const GroundPlot> plots, int bins) {
    double max_d = 0.0;
    for (std::size_t i = 0; i < plots.size(); ++i)
        for (std::size_t j = i + 1; j < plots.size(); ++j)
            max_d = std::max(max_d, dist(plots[i].x, plots[i].y, plots[j].x, plots[j].y));
    const double max_lag = max_d / 2;
    std::vector<double> sum_d(bins, 0.0), sum_g(bins, 0.0);
    std::vector<std::size_t> n(bins, 0);
    for (std::size_t i = 0; i < plots.size(); ++i)
        for (std::size_t j = i + 1; j < plots.size(); ++j) {
            const double d = dist(plots[i].x, plots[i].y, plots[j].x, plots[j].y);
            if (d > max_lag) continue;
            const int k = max_lag > 0 ? std::min(bins - 1, static_cast<int>(d / (max_lag / bins))) : 0;
            const double dz = plots[i].biomass_density - plots[j].biomass_density;
            sum_d[k] += d;
            sum_g[k] += 0.5 * dz * dz;
            ++n[k];
        }
    EmpiricalVariogram ev;
    for (int k = 0; k < bins; ++k) {
        if (n[k] == 0) continue;
        ev.lag.push_back(sum_d[k] / n[k]);
        ev.semivariance.push_back(sum_g[k] / n[k]);
        ev.pairs.push_back(n[k]);
    }
    return ev;
}

VariogramModel fit_variogram(std::span<const GroundPlot> plots) {
    if (plots.size() < 10) throw TooFewPlots(plots.size(), 10);
    const EmpiricalVariogram ev = empirical_variogram(plots, 10);

    double mean = 0.0;
    for (const auto& p : plots) mean += p.biomass_density;
    mean /= static_cast<double>(plots.size());
    double var = 0.0;
    for (const auto& p : plots) var += (p.biomass_density - mean) * (p.biomass_density - mean);
    var /= static_cast<double>(plots.size() - 1);
    const double psill_floor = std::max(1e-12, 1e-6 * var);

    double max_lag = 0.0, min_lag = std::numeric_limits<double>::infinity();
    for (double h : ev.lag) {
        max_lag = std::max(max_lag, h);
        min_lag = std::min(min_lag, h);
    }
    if (ev.lag.empty() || !(min_lag > 0.0)) return {var, var + psill_floor, 1.0};

    VariogramModel best{0.0, psill_floor, max_lag};
    double best_sse = std::numeric_limits<double>::infinity();
    const int steps = 240;
    for (int s = 0; s <= steps; ++s) {
        const double a = max_lag / 100.0 * std::pow(1000.0, double(s) / steps);
        // Weighted linear least squares in (nugget, partial sill) for this range.
        double sw = 0, sf = 0, sff = 0, sg = 0, sfg = 0;
        for (std::size_t k = 0; k < ev.lag.size(); ++k) {
            const double w = static_cast<double>(ev.pairs[k]) / (ev.lag[k] * ev.lag[k]);
            const double f = 1.0 - std::exp(-ev.lag[k] / a), g = ev.semivariance[k];
            sw += w;
            sf += w * f;
            sff += w * f * f;
            sg += w * g;
            sfg += w * f * g;
        }
        double nug = 0.0, ps = 0.0;
        const double det = sw * sff - sf * sf;
        if (det > 1e-12 * sw * sff) {
            nug = (sff * sg - sf * sfg) / det;
            ps = (sw * sfg - sf * sg) / det;
        }
        if (!(det > 1e-12 * sw * sff) || nug < 0.0 || ps < 0.0) {
            // Best boundary solution: pure structure or pure nugget.
            const double ps0 = sff > 0 ? std::max(0.0, sfg / sff) : 0.0;
            const double nug1 = std::max(0.0, sg / sw);
            double sse0 = 0, sse1 = 0;
            for (std::size_t k = 0; k < ev.lag.size(); ++k) {
                const double w = static_cast<double>(ev.pairs[k]) / (ev.lag[k] * ev.lag[k]);
                const double f = 1.0 - std::exp(-ev.lag[k] / a), g = ev.semivariance[k];
                sse0 += w * (g - ps0 * f) * (g - ps0 * f);
                sse1 += w * (g - nug1) * (g - nug1);
            }
            if (sse0 <= sse1) {
                nug = 0.0;
                ps = ps0;
            } else {
                nug = nug1;
                ps = 0.0;
            }
        }
        double sse = 0.0;
        for (std::size_t k = 0; k < ev.lag.size(); ++k) {
            const double w = static_cast<double>(ev.pairs[k]) / (ev.lag[k] * ev.lag[k]);
            const double e = ev.semivariance[k] - nug - ps * (1.0 - std::exp(-ev.lag[k] / a));
            sse += w * e * e;
        }
        if (sse < best_sse) {
            best_sse = sse;
            best = {nug, nug + std::max(ps, psill_floor), a};
        }
    }
    return best;
}

OrdinaryKriging::OrdinaryKriging(std::vector<GroundPlot> plots, VariogramModel model)
    : plots_(std::move(plots)), model_(model) {
    model_.validate();
    const std::size_t n = plots_.size();
    if (n < 3) throw TooFewPlots(n, 3);
    std::set<std::pair<double, double>> seen;
    for (const auto& p : plots_)
        if (!seen.insert({p.x, p.y}).second)
            throw SingularSystem(fmt::format("duplicate plot coordinates ({}, {})", p.x, p.y));

    gamma_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) gamma_(i, j) = model_.gamma(dist(plots_[i].x, plots_[i].y, plots_[j].x, plots_[j].y));
        a(i, n) = a(n, i) = 1.0;
    }
    a.topLeftCorner(n, n) = gamma_;
    lu_.compute(a);
    if (!(lu_.rcond() > 1e-13)) throw SingularSystem("ill-conditioned plot configuration");
}

Eigen::VectorXd OrdinaryKriging::rhs(double x, double y) const {
    const std::size_t n = plots_.size();
    Eigen::VectorXd b(static_cast<Eigen::Index>(n + 1));
    for (std::size_t i = 0; i < n; ++i) b(i) = model_.gamma(dist(x, y, plots_[i].x, plots_[i].y));
    b(n) = 1.0;
    return b;
}

KrigingPoint OrdinaryKriging::predict(double x, double y) const {
    const std::size_t n = plots_.size();
    const Eigen::VectorXd b = rhs(x, y);
    const Eigen::VectorXd sol = lu_.solve(b);
    KrigingPoint out;
    out.weights = sol.head(n);
    out.lagrange = sol(n);
    for (std::size_t i = 0; i < n; ++i) out.mean += sol(i) * plots_[i].biomass_density;
    out.variance = std::max(0.0, out.weights.dot(b.head(n)) + out.lagrange);
    return out;
}

OrdinaryKriging::Block OrdinaryKriging::block(std::span<const std::pair<double, double>> support) const {
    if (support.empty()) throw InvalidArgument("block support is empty");
    const std::size_t n = plots_.size(), m = support.size();
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n), gbar = Eigen::VectorXd::Zero(n);
    for (const auto& [x, y] : support) {
        const Eigen::VectorXd b = rhs(x, y);
        lambda += lu_.solve(b).head(n);
        gbar += b.head(n);
    }
    lambda /= static_cast<double>(m);
    gbar /= static_cast<double>(m);
    std::vector<double> row_sum(m, 0.0);
    parallel_for(m, [&](std::size_t s) {
        double acc = 0.0;
        for (std::size_t t = 0; t < m; ++t)
            if (t != s) acc += model_.gamma(dist(support[s].first, support[s].second, support[t].first, support[t].second));
        row_sum[s] = acc;
    });
    double gbb = 0.0;
    for (double v : row_sum) gbb += v;
    gbb /= static_cast<double>(m) * static_cast<double>(m);

    Block out;
    for (std::size_t i = 0; i < n; ++i) out.mean += lambda(i) * plots_[i].biomass_density;
    out.variance = std::max(0.0, 2.0 * lambda.dot(gbar) - lambda.dot(gamma_ * lambda) - gbb);
    return out;
}

KrigedGrids krige(std::span<const GroundPlot> plots, const VariogramModel& model, const RasterHeader& query) {
    const OrdinaryKriging ok(std::vector<GroundPlot>(plots.begin(), plots.end()), model);
    KrigedGrids out{Grid::float_like(query), Grid::float_like(query)};
    const int w = query.width;
    parallel_for(static_cast<std::size_t>(query.height), [&](std::size_t r) {
        for (int c = 0; c < w; ++c) {
            const KrigingPoint p = ok.predict(query.geo.center_x(c), query.geo.center_y(static_cast<double>(r)));
            const std::size_t i = r * static_cast<std::size_t>(w) + c;
            out.mean[i] = static_cast<float>(p.mean);
            out.variance[i] = static_cast<float>(p.variance);
        }
    });
    return out;
}

EnsembleEstimate ensemble(double census_mean, double census_var, double interp_mean, double interp_var) {
    if (!(census_var > 0.0) || !(interp_var > 0.0)) throw NonPositiveVariance();
    const double pc = 1.0 / census_var, pi = 1.0 / interp_var;
    const double total = pc + pi;
    EnsembleEstimate e;
    e.census_mean = census_mean;
    e.census_var = census_var;
    e.interp_mean = interp_mean;
    e.interp_var = interp_var;
    e.census_weight = pc / total;
    e.interp_weight = pi / total;
    e.mean = (census_mean * pc + interp_mean * pi) / total;
    e.variance = 1.0 / total;
    return e;
}

double census_variance(std::span<const double> tree_agb_kg, double area_ha, double recall) {
    if (!(recall > 0.0 && recall <= 1.0)) throw InvalidArgument("detection recall must be in (0, 1]");
    if (!(area_ha > 0.0)) throw InvalidArgument("census area must be > 0 ha");
    const std::size_t n = tree_agb_kg.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : tree_agb_kg) mean += v / 1000.0;
    mean /= static_cast<double>(n);
    double s2 = 0.0;
    for (double v : tree_agb_kg) s2 += (v / 1000.0 - mean) * (v / 1000.0 - mean);
    s2 /= static_cast<double>(n - 1);
    return (1.0 - recall) * static_cast<double>(n) * s2 / (area_ha * area_ha);
}

ErrorReport error_report(double estimate, double variance, double truth) {
    if (std::isnan(variance) || variance < 0.0) throw InvalidArgument("estimate variance must be >= 0");
    ErrorReport r;
    r.estimate = estimate;
    r.truth = truth;
    r.bias = estimate - truth;
    r.rmse_percent = r.bias == 0.0 ? 0.0 : std::abs(r.bias) / std::abs(truth) * 100.0;
    r.within_ci = std::abs(r.bias) <= 1.96 * std::sqrt(variance);
    return r;
}

ErrorSummary summarize(std::span<const ErrorReport> reports) {
    ErrorSummary s;
    s.runs = reports.size();
    if (reports.empty()) return s;
    double sq = 0.0, truth = 0.0, covered = 0.0;
    for (const auto& r : reports) {
        s.mean_bias += r.bias;
        s.mean_abs_error += std::abs(r.bias);
        sq += r.bias * r.bias;
        truth += r.truth;
        covered += r.within_ci;
    }
    const double n = static_cast<double>(reports.size());
    s.mean_bias /= n;
    s.mean_abs_error /= n;
    s.rmse_percent = std::sqrt(sq / n) / (truth / n) * 100.0;
    s.coverage = covered / n;
    return s;
}

}  // namespace canopy

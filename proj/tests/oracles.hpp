#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance run. Deliberately naive: full scans, explicit open lists,
// cofactor determinants.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "canopy/crowns.hpp"
#include "test_util.hpp"

namespace canopy::test {

// Paraboloid crown: apex h at (cx, cy) in pixel units, edge at 0.4h.
inline void add_crown(Grid& g, double cx, double cy, double h, double diameter_px) {
    for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) {
            const double d = std::hypot(c - cx, r - cy);
            if (d > diameter_px / 2) continue;
            const double z = h - 0.6 * h * std::pow(2 * d / diameter_px, 2);
            g.at(c, r) = std::max(g.at(c, r), float(z));
        }
}

inline Grid random_chm(std::mt19937_64& rng, int w, int h, bool quantize) {
    Grid g = constant(w, h, 0.0f, 0.5);
    std::uniform_real_distribution<double> u(0, 1);
    const int bumps = 1 + int(u(rng) * 12);
    for (int b = 0; b < bumps; ++b) add_crown(g, u(rng) * w, u(rng) * h, 4 + u(rng) * 30, 4 + u(rng) * 24);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (u(rng) < 0.3) g[i] += float(u(rng) * 2);
        if (quantize) g[i] = std::round(g[i] * 2) / 2;
        if (u(rng) < 0.01) g[i] = Grid::kNoData;
    }
    return g;
}

// Brute force: every pixel against every other pixel by world distance.
inline std::vector<TreeTop> brute_tops(const Grid& chm, const CrownParams& p) {
    std::vector<TreeTop> out;
    const double px = std::abs(chm.geo().pixel_size_x), py = std::abs(chm.geo().pixel_size_y);
    for (int r = 0; r < chm.height(); ++r)
        for (int c = 0; c < chm.width(); ++c) {
            const float v = chm.at(c, r);
            if (!chm.is_valid(c, r) || v < p.min_tree_height) continue;
            const double rad = std::max(p.min_window_radius, p.window_fraction * v);
            bool top = true;
            for (int rr = 0; rr < chm.height() && top; ++rr)
                for (int cc = 0; cc < chm.width() && top; ++cc) {
                    if ((rr == r && cc == c) || !chm.is_valid(cc, rr)) continue;
                    const double d2 = std::pow((cc - c) * px, 2) + std::pow((rr - r) * py, 2);
                    if (d2 > rad * rad) continue;
                    const float q = chm.at(cc, rr);
                    if (q > v || (q == v && std::make_pair(rr, cc) < std::make_pair(r, c))) top = false;
                }
            if (top) out.push_back({c, r, chm.geo().center_x(c), chm.geo().center_y(r), v});
        }
    std::sort(out.begin(), out.end(), [](const TreeTop& a, const TreeTop& b) {
        if (a.height != b.height) return a.height > b.height;
        return std::make_pair(a.row, a.col) < std::make_pair(b.row, b.col);
    });
    return out;
}

// Flood with an explicit open list scanned linearly for the highest pixel
// (earliest inserted among equals); one global pass, no components.
inline std::vector<std::int32_t> brute_flood(const Grid& chm, const std::vector<TreeTop>& tops, const CrownParams& p) {
    const int w = chm.width(), h = chm.height();
    std::vector<std::int32_t> lab(chm.size(), 0);
    struct Open {
        int c, r;
        float v;
        long seq;
    };
    std::vector<Open> open;
    long seq = 0;
    for (std::size_t k = 0; k < tops.size(); ++k) {
        lab[chm.index(tops[k].col, tops[k].row)] = int(k + 1);
        open.push_back({tops[k].col, tops[k].row, chm.at(tops[k].col, tops[k].row), seq++});
    }
    while (!open.empty()) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < open.size(); ++k)
            if (open[k].v > open[best].v || (open[k].v == open[best].v && open[k].seq < open[best].seq)) best = k;
        const Open o = open[best];
        open.erase(open.begin() + long(best));
        const int l = lab[chm.index(o.c, o.r)];
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                if (!dr && !dc) continue;
                const int c = o.c + dc, r = o.r + dr;
                if (c < 0 || r < 0 || c >= w || r >= h) continue;
                const float v = chm.at(c, r);
                if (lab[chm.index(c, r)] || !chm.is_valid(c, r) || v < float(p.min_tree_height) ||
                    v < p.crown_floor_fraction * tops[l - 1].height)
                    continue;
                lab[chm.index(c, r)] = l;
                open.push_back({c, r, v, seq++});
            }
    }
    return lab;
}

inline Grid random_grid(std::mt19937_64& rng, int w, int h, SampleType t) {
    RasterHeader hd = canopy::test::header(w, h, t, 0.25);
    hd.geo.origin_x = 352000.5;
    hd.geo.origin_y = 8770000.25;
    std::vector<float> s(hd.pixel_count());
    switch (t) {
        case SampleType::UInt8: for (auto& v : s) v = float(rng() % 256); break;
        case SampleType::UInt16: for (auto& v : s) v = float(rng() % 65536); break;
        case SampleType::Float32:
            for (auto& v : s) {
                const auto bits = static_cast<std::uint32_t>(rng());
                v = std::bit_cast<float>(bits);
            }
            break;
    }
    return Grid(hd, std::move(s));
}

// Determinant by cofactor expansion in long double.
inline long double det(const std::vector<std::vector<long double>>& m) {
    const std::size_t n = m.size();
    if (n == 1) return m[0][0];
    long double s = 0;
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<std::vector<long double>> sub;
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<long double> row;
            for (std::size_t k = 0; k < n; ++k)
                if (k != c) row.push_back(m[r][k]);
            sub.push_back(row);
        }
        s += ((c % 2) ? -1.0L : 1.0L) * m[0][c] * det(sub);
    }
    return s;
}

// Cramer's rule.
inline std::vector<long double> cramer(const std::vector<std::vector<long double>>& a, const std::vector<long double>& b) {
    const long double d = det(a);
    std::vector<long double> x(b.size());
    for (std::size_t c = 0; c < b.size(); ++c) {
        auto m = a;
        for (std::size_t r = 0; r < b.size(); ++r) m[r][c] = b[r];
        x[c] = det(m) / d;
    }
    return x;
}

}  // namespace canopy::test

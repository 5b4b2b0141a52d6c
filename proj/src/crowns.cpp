#include "canopy/crowns.hpp"

#include <cmath>
#include <numbers>
#include <queue>
#include <unordered_map>

#include <fmt/format.h>

#include "canopy/error.hpp"
#include "canopy/grid_ops.hpp"
#include "canopy/parallel.hpp"
#include "canopy/text.hpp"

namespace canopy {

namespace {

// Fixed neighbour visiting order for the flood.
constexpr int kDr[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kDc[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

struct Offset {
    int dc, dr;
    double d2;
};

std::vector<Offset> disc_offsets(double radius, double px, double py) {
    std::vector<Offset> out;
    const int rc = static_cast<int>(std::floor(radius / px)), rr = static_cast<int>(std::floor(radius / py));
    for (int dr = -rr; dr <= rr; ++dr)
        for (int dc = -rc; dc <= rc; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const double d2 = (dc * px) * (dc * px) + (dr * py) * (dr * py);
            if (d2 <= radius * radius) out.push_back({dc, dr, d2});
        }
    std::sort(out.begin(), out.end(), [](const Offset& a, const Offset& b) {
        if (a.d2 != b.d2) return a.d2 < b.d2;
        return a.dr != b.dr ? a.dr < b.dr : a.dc < b.dc;
    });
    return out;
}

bool eligible(const Grid& chm, std::size_t i, float min_height) {
    const float v = chm[i];
    return chm.is_valid_value(v) && v >= min_height;
}

}  // namespace

void CrownParams::validate() const {
    if (!(min_tree_height > 0.0)) throw InvalidArgument("min_tree_height must be > 0");
    if (!(window_fraction > 0.0 && window_fraction < 1.0)) throw InvalidArgument("window_fraction must be in (0, 1)");
    if (!(min_window_radius > 0.0)) throw InvalidArgument("min_window_radius must be > 0");
    if (!(crown_floor_fraction > 0.0 && crown_floor_fraction < 1.0))
        throw InvalidArgument("crown_floor_fraction must be in (0, 1)");
}

std::vector<TreeTop> detect_treetops(const Grid& chm, const CrownParams& params) {
    params.validate();
    const int w = chm.width(), h = chm.height();
    const double px = std::abs(chm.geo().pixel_size_x), py = std::abs(chm.geo().pixel_size_y);
    const float min_h = static_cast<float>(params.min_tree_height);

    float max_h = -std::numeric_limits<float>::infinity();
    for (std::size_t i = 0; i < chm.size(); ++i)
        if (eligible(chm, i, min_h)) max_h = std::max(max_h, chm[i]);
    if (max_h < min_h) return {};
    const auto offsets = disc_offsets(params.window_radius(max_h), px, py);

    std::vector<std::vector<TreeTop>> rows(static_cast<std::size_t>(h));
    parallel_for(rows.size(), [&](std::size_t rr) {
        const int r = static_cast<int>(rr);
        for (int c = 0; c < w; ++c) {
            const std::size_t i = chm.index(c, r);
            if (!eligible(chm, i, min_h)) continue;
            const float v = chm[i];
            const double radius = params.window_radius(v);
            const double r2 = radius * radius;
            bool top = true;
            for (const Offset& o : offsets) {
                if (o.d2 > r2) break;
                const int cc = c + o.dc, rq = r + o.dr;
                if (!chm.contains(cc, rq)) continue;
                const float q = chm.at(cc, rq);
                if (!chm.is_valid_value(q)) continue;
                if (q > v || (q == v && (rq < r || (rq == r && cc < c)))) {
                    top = false;
                    break;
                }
            }
            if (top) rows[rr].push_back({c, r, chm.geo().center_x(c), chm.geo().center_y(r), double(v)});
        }
    });
    std::vector<TreeTop> tops;
    for (auto& row : rows) tops.insert(tops.end(), row.begin(), row.end());
    std::stable_sort(tops.begin(), tops.end(), [](const TreeTop& a, const TreeTop& b) {
        if (a.height != b.height) return a.height > b.height;
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    return tops;
}

WatershedResult watershed_crowns(const Grid& chm, const std::vector<TreeTop>& tops, const Grid& species,
                                 const CrownParams& params) {
    params.validate();
    if (!same_geometry(chm.header(), species.header()))
        throw InvalidArgument("species map does not share the CHM geometry");
    const int w = chm.width(), h = chm.height();
    const std::size_t n = chm.size();
    const float min_h = static_cast<float>(params.min_tree_height);

    WatershedResult result;
    result.labels = {w, h, chm.geo(), std::vector<std::int32_t>(n, 0)};
    auto& ids = result.labels.ids;

    std::vector<double> floor_h(tops.size());
    std::vector<std::size_t> marker_px(tops.size());
    {
        std::vector<char> taken(n, 0);
        for (std::size_t k = 0; k < tops.size(); ++k) {
            const TreeTop& t = tops[k];
            if (!chm.contains(t.col, t.row)) throw InvalidArgument("treetop outside the CHM");
            const std::size_t i = chm.index(t.col, t.row);
            if (!eligible(chm, i, min_h)) throw MarkerOutsideCanopy(t.col, t.row);
            if (taken[i]) throw InvalidArgument("two treetops share one pixel");
            taken[i] = 1;
            marker_px[k] = i;
            floor_h[k] = params.crown_floor_fraction * t.height;
        }
    }

    // Connected canopy components (8-neighbour). The flood never leaves a
    // component, so each one is flooded independently.
    std::vector<std::int32_t> comp(n, -1);
    std::int32_t ncomp = 0;
    {
        std::vector<std::size_t> stack;
        for (std::size_t s = 0; s < n; ++s) {
            if (comp[s] >= 0 || !eligible(chm, s, min_h)) continue;
            comp[s] = ncomp;
            stack.push_back(s);
            while (!stack.empty()) {
                const std::size_t p = stack.back();
                stack.pop_back();
                const int pr = static_cast<int>(p / w), pc = static_cast<int>(p % w);
                for (int k = 0; k < 8; ++k) {
                    const int qc = pc + kDc[k], qr = pr + kDr[k];
                    if (!chm.contains(qc, qr)) continue;
                    const std::size_t q = chm.index(qc, qr);
                    if (comp[q] < 0 && eligible(chm, q, min_h)) {
                        comp[q] = ncomp;
                        stack.push_back(q);
                    }
                }
            }
            ++ncomp;
        }
    }
    std::vector<std::vector<std::size_t>> by_comp(static_cast<std::size_t>(ncomp));
    for (std::size_t k = 0; k < tops.size(); ++k) by_comp[comp[marker_px[k]]].push_back(k);
    std::vector<std::size_t> seeded;
    for (std::size_t c = 0; c < by_comp.size(); ++c)
        if (!by_comp[c].empty()) seeded.push_back(c);

    struct Item {
        float height;
        std::uint64_t seq;
        std::size_t index;
    };
    const auto lower = [](const Item& a, const Item& b) {
        return a.height < b.height || (a.height == b.height && a.seq > b.seq);
    };
    parallel_for(seeded.size(), [&](std::size_t s) {
        std::priority_queue<Item, std::vector<Item>, decltype(lower)> pq(lower);
        std::uint64_t seq = 0;
        for (std::size_t k : by_comp[seeded[s]]) {
            ids[marker_px[k]] = static_cast<std::int32_t>(k + 1);
            pq.push({chm[marker_px[k]], seq++, marker_px[k]});
        }
        while (!pq.empty()) {
            const Item it = pq.top();
            pq.pop();
            const std::int32_t label = ids[it.index];
            const double floor_v = floor_h[static_cast<std::size_t>(label - 1)];
            const int pr = static_cast<int>(it.index / w), pc = static_cast<int>(it.index % w);
            for (int k = 0; k < 8; ++k) {
                const int qc = pc + kDc[k], qr = pr + kDr[k];
                if (!chm.contains(qc, qr)) continue;
                const std::size_t q = chm.index(qc, qr);
                if (ids[q] != 0 || !eligible(chm, q, min_h) || double(chm[q]) < floor_v) continue;
                ids[q] = label;
                pq.push({chm[q], seq++, q});
            }
        }
    });

    // Per-crown statistics.
    std::vector<std::size_t> count(tops.size(), 0);
    std::vector<std::vector<std::pair<int, std::size_t>>> votes(tops.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (ids[i] == 0) continue;
        const std::size_t k = static_cast<std::size_t>(ids[i] - 1);
        ++count[k];
        const float sv = species[i];
        if (!species.is_valid_value(sv) || sv <= 0.0f) continue;
        const int sp = static_cast<int>(sv);
        auto& v = votes[k];
        auto it = std::find_if(v.begin(), v.end(), [&](const auto& p) { return p.first == sp; });
        if (it == v.end())
            v.emplace_back(sp, 1);
        else
            ++it->second;
    }
    const double area = chm.pixel_area();
    result.crowns.reserve(tops.size());
    for (std::size_t k = 0; k < tops.size(); ++k) {
        CrownRecord rec;
        rec.tree_id = static_cast<int>(k + 1);
        rec.top = tops[k];
        rec.pixel_count = count[k];
        rec.crown_area = static_cast<double>(count[k]) * area;
        rec.crown_diameter = 2.0 * std::sqrt(rec.crown_area / std::numbers::pi);
        std::size_t best = 0;
        for (const auto& [sp, c] : votes[k])
            if (c > best || (c == best && sp < rec.species_id)) {
                best = c;
                rec.species_id = sp;
            }
        result.crowns.push_back(rec);
    }
    return result;
}

CensusSummary census(const std::vector<CrownRecord>& crowns, double area_ha) {
    if (!(area_ha > 0.0)) throw InvalidArgument("census area must be > 0 ha");
    CensusSummary s;
    s.area_ha = area_ha;
    s.tree_count = crowns.size();
    const auto bump = [](Histogram& hist, double v) {
        const std::size_t k = static_cast<std::size_t>(std::max(0.0, std::floor(v / hist.bin_width)));
        if (hist.counts.size() <= k) hist.counts.resize(k + 1, 0);
        ++hist.counts[k];
    };
    for (const auto& c : crowns) {
        ++s.per_species[c.species_id];
        bump(s.height, c.top.height);
        bump(s.crown_diameter, c.crown_diameter);
    }
    s.stems_per_ha = static_cast<double>(s.tree_count) / area_ha;
    return s;
}

// ---- GeoJSON ----------------------------------------------------------------

namespace {

struct Vertex {
    int i, j;  // pixel-corner coordinates, j grows downwards
    bool operator==(const Vertex&) const = default;
};

struct Edge {
    Vertex a, b;
};

using Ring = std::vector<Vertex>;

// Signed area in the (i, -j) frame: positive for counter-clockwise.
double signed_area(const Ring& ring) {
    double s = 0.0;
    for (std::size_t k = 0; k < ring.size(); ++k) {
        const Vertex& p = ring[k];
        const Vertex& q = ring[(k + 1) % ring.size()];
        s += double(p.i) * double(-q.j) - double(q.i) * double(-p.j);
    }
    return s / 2.0;
}

bool inside(const Ring& ring, double x, double y) {
    bool in = false;
    for (std::size_t k = 0, m = ring.size() - 1; k < ring.size(); m = k++) {
        const double xi = ring[k].i, yi = ring[k].j, xm = ring[m].i, ym = ring[m].j;
        if ((yi > y) != (ym > y) && x < (xm - xi) * (y - yi) / (ym - yi) + xi) in = !in;
    }
    return in;
}

std::vector<Ring> trace_rings(const std::vector<std::size_t>& pixels, const LabelImage& img, std::int32_t label) {
    const int w = img.width, h = img.height;
    const auto same = [&](int c, int r) { return c >= 0 && r >= 0 && c < w && r < h && img.at(c, r) == label; };
    std::vector<Edge> edges;
    for (std::size_t p : pixels) {
        const int c = static_cast<int>(p % w), r = static_cast<int>(p / w);
        // Interior kept on the left when walking in the (i, -j) frame.
        if (!same(c, r + 1)) edges.push_back({{c, r + 1}, {c + 1, r + 1}});
        if (!same(c + 1, r)) edges.push_back({{c + 1, r + 1}, {c + 1, r}});
        if (!same(c, r - 1)) edges.push_back({{c + 1, r}, {c, r}});
        if (!same(c - 1, r)) edges.push_back({{c, r}, {c, r + 1}});
    }
    const auto key = [&](const Vertex& v) { return std::uint64_t(v.j) * std::uint64_t(w + 1) + std::uint64_t(v.i); };
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> out_of;
    for (std::size_t e = 0; e < edges.size(); ++e) out_of[key(edges[e].a)].push_back(e);

    std::vector<char> used(edges.size(), 0);
    std::vector<Ring> rings;
    for (std::size_t e0 = 0; e0 < edges.size(); ++e0) {
        if (used[e0]) continue;
        Ring ring;
        std::size_t cur = e0;
        for (;;) {
            used[cur] = 1;
            ring.push_back(edges[cur].a);
            const Edge& ce = edges[cur];
            const int dx = ce.b.i - ce.a.i, dy = -(ce.b.j - ce.a.j);
            std::size_t next = edges.size();
            int best_rank = 3;
            for (std::size_t cand : out_of[key(ce.b)]) {
                if (used[cand] && cand != e0) continue;
                const Edge& ne = edges[cand];
                const int ex = ne.b.i - ne.a.i, ey = -(ne.b.j - ne.a.j);
                const int cross = dx * ey - dy * ex;
                const int rank = cross > 0 ? 0 : (cross == 0 ? 1 : 2);
                if (rank < best_rank) {
                    best_rank = rank;
                    next = cand;
                }
            }
            if (next == e0 || next == edges.size()) break;
            cur = next;
        }
        // Drop collinear vertices.
        Ring simple;
        for (std::size_t k = 0; k < ring.size(); ++k) {
            const Vertex& p = ring[(k + ring.size() - 1) % ring.size()];
            const Vertex& v = ring[k];
            const Vertex& q = ring[(k + 1) % ring.size()];
            if ((v.i - p.i) * (q.j - v.j) - (v.j - p.j) * (q.i - v.i) != 0) simple.push_back(v);
        }
        rings.push_back(std::move(simple));
    }
    return rings;
}

}  // namespace

std::string crowns_geojson(const std::vector<CrownRecord>& crowns, const LabelImage& labels) {
    std::vector<std::vector<std::size_t>> pixels(crowns.size());
    for (std::size_t i = 0; i < labels.ids.size(); ++i) {
        const std::int32_t id = labels.ids[i];
        if (id > 0 && static_cast<std::size_t>(id) <= crowns.size()) pixels[id - 1].push_back(i);
    }
    const GeoTransform& g = labels.geo;
    const bool flip = g.pixel_size_y > 0;  // south-up grids mirror the orientation
    const auto write_ring = [&](std::string& out, Ring ring) {
        if (flip) std::reverse(ring.begin(), ring.end());
        out += '[';
        for (std::size_t k = 0; k <= ring.size(); ++k) {
            const Vertex& v = ring[k % ring.size()];
            if (k) out += ',';
            out += fmt::format("[{:.3f},{:.3f}]", g.origin_x + v.i * g.pixel_size_x, g.origin_y + v.j * g.pixel_size_y);
        }
        out += ']';
    };

    std::string out = "{\"type\":\"FeatureCollection\",\"features\":[";
    bool first_feature = true;
    for (const CrownRecord& rec : crowns) {
        const auto& px = pixels[static_cast<std::size_t>(rec.tree_id - 1)];
        if (px.empty()) continue;
        std::vector<Ring> rings = trace_rings(px, labels, rec.tree_id);
        std::vector<std::size_t> outer;
        std::vector<std::vector<std::size_t>> holes;
        std::vector<double> area(rings.size());
        for (std::size_t k = 0; k < rings.size(); ++k) {
            area[k] = signed_area(rings[k]);
            if (area[k] > 0) outer.push_back(k);
        }
        holes.resize(outer.size());
        for (std::size_t k = 0; k < rings.size(); ++k) {
            if (area[k] > 0) continue;
            // Centre of the unclaimed pixel to the right of the hole's first edge.
            const Vertex a = rings[k][0], b = rings[k][1 % rings[k].size()];
            const int dx = (b.i > a.i) - (b.i < a.i), dy = (b.j > a.j) - (b.j < a.j);
            const double x = a.i + dx * 0.5 - dy * 0.5, y = a.j + dy * 0.5 + dx * 0.5;
            std::size_t owner = 0;
            double owner_area = std::numeric_limits<double>::infinity();
            for (std::size_t o = 0; o < outer.size(); ++o)
                if (area[outer[o]] < owner_area && inside(rings[outer[o]], x, y)) {
                    owner = o;
                    owner_area = area[outer[o]];
                }
            holes[owner].push_back(k);
        }
        std::string geom;
        for (std::size_t o = 0; o < outer.size(); ++o) {
            if (o) geom += ',';
            geom += '[';
            write_ring(geom, rings[outer[o]]);
            for (std::size_t hk : holes[o]) {
                geom += ',';
                write_ring(geom, rings[hk]);
            }
            geom += ']';
        }
        out += first_feature ? "" : ",";
        first_feature = false;
        out += fmt::format(
            "{{\"type\":\"Feature\",\"id\":{0},\"geometry\":{{\"type\":\"{1}\",\"coordinates\":{2}}},"
            "\"properties\":{{\"tree_id\":{0},\"height_m\":{3},\"crown_diameter_m\":{4},\"species_id\":{5}}}}}",
            rec.tree_id, outer.size() == 1 ? "Polygon" : "MultiPolygon", outer.size() == 1 ? geom : "[" + geom + "]",
            fmt6(rec.top.height), fmt6(rec.crown_diameter), rec.species_id);
    }
    out += "]}\n";
    return out;
}

}  // namespace canopy

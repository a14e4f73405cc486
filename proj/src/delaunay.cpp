#include "nok/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace nok {

namespace {

constexpr double kDupTol = 1e-12;
constexpr double kIncircleTol = 1e-12;

struct Pt {
    double x, y;
};

double cross(const Pt& a, const Pt& b, const Pt& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// Positive when d lies strictly inside the circumcircle of CCW triangle abc
/// (the classic 4x4 determinant reduced to 3x3).
double incircle(const Pt& a, const Pt& b, const Pt& c, const Pt& d) {
    const double ax = a.x - d.x, ay = a.y - d.y;
    const double bx = b.x - d.x, by = b.y - d.y;
    const double cx = c.x - d.x, cy = c.y - d.y;
    const double a2 = ax * ax + ay * ay;
    const double b2 = bx * bx + by * by;
    const double c2 = cx * cx + cy * cy;
    return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
}

struct Tri {
    std::array<std::int64_t, 3> v;
    bool alive = true;
};

} // namespace

std::vector<std::array<std::int64_t, 3>> delaunay_triangulate(const Tensor& points) {
    if (points.rank() != 2 || points.dim(1) != 2) throw shape_error("delaunay: [n, 2] points expected");
    const std::int64_t n = points.dim(0);
    if (n < 3) throw degenerate_geometry_error("delaunay: at least 3 points required");
    const auto& pv = points.rdata();
    std::vector<Pt> pts(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) pts[static_cast<std::size_t>(i)] = {pv[static_cast<std::size_t>(2 * i)], pv[static_cast<std::size_t>(2 * i + 1)]};

    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i + 1; j < n; ++j)
            if (std::abs(pts[static_cast<std::size_t>(i)].x - pts[static_cast<std::size_t>(j)].x) <= kDupTol &&
                std::abs(pts[static_cast<std::size_t>(i)].y - pts[static_cast<std::size_t>(j)].y) <= kDupTol)
                throw invalid_argument_error("delaunay: duplicate points");

    bool noncollinear = false;
    for (std::int64_t k = 2; k < n && !noncollinear; ++k)
        if (std::abs(cross(pts[0], pts[1], pts[static_cast<std::size_t>(k)])) > kIncircleTol) noncollinear = true;
    if (!noncollinear) throw degenerate_geometry_error("delaunay: points are collinear");

    // super-triangle enclosing every point
    double lox = pts[0].x, hix = pts[0].x, loy = pts[0].y, hiy = pts[0].y;
    for (const auto& p : pts) {
        lox = std::min(lox, p.x);
        hix = std::max(hix, p.x);
        loy = std::min(loy, p.y);
        hiy = std::max(hiy, p.y);
    }
    const double cx = 0.5 * (lox + hix), cy = 0.5 * (loy + hiy);
    const double span = std::max({hix - lox, hiy - loy, 1.0});
    std::vector<Pt> all = pts;
    all.push_back({cx - 30.0 * span, cy - 20.0 * span});
    all.push_back({cx + 30.0 * span, cy - 20.0 * span});
    all.push_back({cx, cy + 30.0 * span});
    const std::int64_t s0 = n, s1 = n + 1, s2 = n + 2;

    std::vector<Tri> tris;
    tris.push_back({{s0, s1, s2}, true});

    auto as_ccw = [&](std::array<std::int64_t, 3> t) {
        if (cross(all[static_cast<std::size_t>(t[0])], all[static_cast<std::size_t>(t[1])], all[static_cast<std::size_t>(t[2])]) < 0.0)
            std::swap(t[1], t[2]);
        return t;
    };

    for (std::int64_t ip = 0; ip < n; ++ip) {
        const Pt& p = all[static_cast<std::size_t>(ip)];
        // collect the cavity and its boundary edges
        std::map<std::pair<std::int64_t, std::int64_t>, int> edge_count;
        for (auto& t : tris) {
            if (!t.alive) continue;
            const auto v = as_ccw(t.v);
            // on-circle counts as inside: cocircular ties resolve toward the
            // later-inserted point, which keeps the result order-deterministic
            if (incircle(all[static_cast<std::size_t>(v[0])], all[static_cast<std::size_t>(v[1])], all[static_cast<std::size_t>(v[2])], p) > -kIncircleTol) {
                t.alive = false;
                for (int e = 0; e < 3; ++e) {
                    auto a = t.v[static_cast<std::size_t>(e)], b = t.v[static_cast<std::size_t>((e + 1) % 3)];
                    if (a > b) std::swap(a, b);
                    ++edge_count[{a, b}];
                }
            }
        }
        for (const auto& [edge, cnt] : edge_count) {
            if (cnt != 1) continue; // interior cavity edge
            tris.push_back({as_ccw({edge.first, edge.second, ip}), true});
        }
        if (tris.size() > 4096) { // compact occasionally
            std::vector<Tri> live;
            for (auto& t : tris)
                if (t.alive) live.push_back(t);
            tris = std::move(live);
        }
    }

    std::vector<std::array<std::int64_t, 3>> out;
    for (const auto& t : tris) {
        if (!t.alive) continue;
        if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue; // touches the super-triangle
        out.push_back(as_ccw(t.v));
    }
    if (out.empty()) throw degenerate_geometry_error("delaunay: triangulation collapsed");
    return out;
}

std::vector<double> delaunay_weights_2d(const Tensor& points) {
    const auto tris = delaunay_triangulate(points);
    const auto& pv = points.rdata();
    std::vector<double> w(static_cast<std::size_t>(points.dim(0)), 0.0);
    for (const auto& t : tris) {
        const double ax = pv[static_cast<std::size_t>(2 * t[0])], ay = pv[static_cast<std::size_t>(2 * t[0] + 1)];
        const double bx = pv[static_cast<std::size_t>(2 * t[1])], by = pv[static_cast<std::size_t>(2 * t[1] + 1)];
        const double cx = pv[static_cast<std::size_t>(2 * t[2])], cy = pv[static_cast<std::size_t>(2 * t[2] + 1)];
        const double area = 0.5 * std::abs((bx - ax) * (cy - ay) - (by - ay) * (cx - ax));
        for (int k = 0; k < 3; ++k) w[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])] += area / 3.0;
    }
    return w;
}

} // namespace nok

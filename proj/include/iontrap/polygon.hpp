#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <vector>

#include "iontrap/errors.hpp"
#include "iontrap/vec.hpp"

namespace iontrap {

// Simple polygon in the z = 0 plane, vertices in micrometres.
using Polygon = std::vector<Vec2>;

inline double signed_area(const Polygon& poly) {
    double a = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        a += cross(p, q);
    }
    return 0.5 * a;
}

// Ensures counter-clockwise winding (positive signed area).
inline void make_ccw(Polygon& poly) {
    if (signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
}

namespace detail {

inline double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
    return cross(b - a, c - a);
}

inline bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
           std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

// Proper or improper intersection of closed segments [a,b] and [c,d].
inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double d1 = orient(c, d, a);
    const double d2 = orient(c, d, b);
    const double d3 = orient(a, b, c);
    const double d4 = orient(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    if (d1 == 0.0 && on_segment(c, d, a)) return true;
    if (d2 == 0.0 && on_segment(c, d, b)) return true;
    if (d3 == 0.0 && on_segment(a, b, c)) return true;
    if (d4 == 0.0 && on_segment(a, b, d)) return true;
    return false;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return norm(p - a);
    double t = dot(p - a, ab) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + ab * t));
}

inline double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c,
                                       const Vec2& d) {
    if (segments_intersect(a, b, c, d)) return 0.0;
    return std::min(std::min(point_segment_distance(a, c, d), point_segment_distance(b, c, d)),
                    std::min(point_segment_distance(c, a, b), point_segment_distance(d, a, b)));
}

} // namespace detail

// A polygon is simple when it has >= 3 vertices, nonzero area, and no two
// non-adjacent edges touch.
inline bool is_simple(const Polygon& poly) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    if (std::abs(signed_area(poly)) < 1e-12) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        if (norm(b - a) == 0.0) return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            // Skip adjacent edges (they share a vertex by construction).
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            const Vec2& c = poly[j];
            const Vec2& d = poly[(j + 1) % n];
            if (detail::segments_intersect(a, b, c, d)) return false;
        }
    }
    return true;
}

inline bool point_in_polygon(const Vec2& p, const Polygon& poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        const bool crosses = (a.y > p.y) != (b.y > p.y);
        if (crosses && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
    }
    return inside;
}

// True when the interiors of two simple polygons intersect. Shared edges or
// vertices alone do not count as overlap.
inline bool polygons_overlap(const Polygon& p, const Polygon& q) {
    const std::size_t n = p.size();
    const std::size_t m = q.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const Vec2& a = p[i];
            const Vec2& b = p[(i + 1) % n];
            const Vec2& c = q[j];
            const Vec2& d = q[(j + 1) % m];
            const double d1 = detail::orient(c, d, a);
            const double d2 = detail::orient(c, d, b);
            const double d3 = detail::orient(a, b, c);
            const double d4 = detail::orient(a, b, d);
            // Proper crossings always create interior overlap.
            if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
                ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
                return true;
        }
    }
    // No edge crossings: overlap iff one contains the other. Test with a
    // representative interior point (vertex centroid nudged inside via a
    // diagonal midpoint fails on concave shapes, so use an ear midpoint).
    auto interior_point = [](const Polygon& poly) -> Vec2 {
        const std::size_t k = poly.size();
        for (std::size_t i = 0; i < k; ++i) {
            const Vec2 mid = (poly[i] + poly[(i + 2) % k]) * 0.5;
            if (point_in_polygon(mid, poly)) return mid;
        }
        return poly[0];
    };
    if (point_in_polygon(interior_point(p), q)) return true;
    if (point_in_polygon(interior_point(q), p)) return true;
    return false;
}

// Minimum distance between polygon boundaries; 0 when they touch or overlap.
inline double polygon_clearance(const Polygon& p, const Polygon& q) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = p.size();
    const std::size_t m = q.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            best = std::min(best, detail::segment_segment_distance(p[i], p[(i + 1) % n], q[j],
                                                                   q[(j + 1) % m]));
        }
    }
    return best;
}

// Ear-clipping triangulation of a simple polygon (any winding). Returns
// index triples into the input vertex list.
inline std::vector<std::array<int, 3>> triangulate(const Polygon& poly) {
    const int n = static_cast<int>(poly.size());
    if (n < 3) throw geometry_error("triangulate: polygon needs at least 3 vertices");
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    const bool ccw = signed_area(poly) > 0.0;
    if (!ccw) std::reverse(idx.begin(), idx.end());

    auto is_ear = [&](int ia, int ib, int ic, const std::vector<int>& rest) {
        const Vec2& a = poly[ia];
        const Vec2& b = poly[ib];
        const Vec2& c = poly[ic];
        if (detail::orient(a, b, c) <= 1e-14) return false; // reflex or degenerate
        for (int iv : rest) {
            if (iv == ia || iv == ib || iv == ic) continue;
            const Vec2& v = poly[iv];
            if (detail::orient(a, b, v) >= -1e-14 && detail::orient(b, c, v) >= -1e-14 &&
                detail::orient(c, a, v) >= -1e-14)
                return false;
        }
        return true;
    };

    std::vector<std::array<int, 3>> tris;
    tris.reserve(static_cast<std::size_t>(n) - 2);
    while (idx.size() > 3) {
        bool clipped = false;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const int ia = idx[(k + idx.size() - 1) % idx.size()];
            const int ib = idx[k];
            const int ic = idx[(k + 1) % idx.size()];
            if (is_ear(ia, ib, ic, idx)) {
                tris.push_back({ia, ib, ic});
                idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
                clipped = true;
                break;
            }
        }
        if (!clipped) throw geometry_error("triangulate: no ear found (non-simple polygon?)");
    }
    tris.push_back({idx[0], idx[1], idx[2]});
    return tris;
}

} // namespace iontrap

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "iontrap/errors.hpp"
#include "iontrap/polygon.hpp"
#include "iontrap/vec.hpp"

namespace iontrap {

// Triangulated conductor surface, vertices in micrometres. Triangles are
// stored by value (no shared vertex pool); panel solvers never need
// connectivity, only the panels themselves.
struct Triangle {
    Vec3 a, b, c;

    Vec3 centroid() const { return (a + b + c) / 3.0; }
    Vec3 normal() const { return cross(b - a, c - a); } // length = 2*area
    double area() const { return 0.5 * norm(normal()); }

    // Diameter of the circumscribed circle; the panel size measure used by
    // refinement targets.
    double circumdiameter() const {
        const double la = norm(b - c);
        const double lb = norm(c - a);
        const double lc = norm(a - b);
        const double ar = area();
        if (ar <= 0.0) return std::max({la, lb, lc});
        return la * lb * lc / (2.0 * ar);
    }
};

struct TriMesh {
    std::vector<Triangle> tris;

    std::size_t panel_count() const { return tris.size(); }

    double total_area() const {
        double a = 0.0;
        for (const auto& t : tris) a += t.area();
        return a;
    }

    // Signed volume from the divergence theorem; positive for a closed mesh
    // with outward-oriented triangles.
    double signed_volume() const {
        double v = 0.0;
        for (const auto& t : tris) v += triple(t.a, t.b, t.c);
        return v / 6.0;
    }

    void flip_orientation() {
        for (auto& t : tris) std::swap(t.b, t.c);
    }

    void append(const TriMesh& other) {
        tris.insert(tris.end(), other.tris.begin(), other.tris.end());
    }

    double max_circumdiameter() const {
        double d = 0.0;
        for (const auto& t : tris) d = std::max(d, t.circumdiameter());
        return d;
    }
};

// Flips a closed mesh so its signed volume is positive (outward normals).
inline void orient_outward(TriMesh& mesh) {
    if (mesh.signed_volume() < 0.0) mesh.flip_orientation();
}

// Longest-edge bisection of every triangle whose circumdiameter exceeds the
// target. Bisection drives sliver triangles (extrusion side panels) toward
// bounded aspect ratio, and flat splits preserve total area exactly; hanging
// nodes are fine for collocation panels.
inline TriMesh refine_to_size(const TriMesh& mesh, double target_um) {
    if (target_um <= 0.0) throw geometry_error("refine_to_size: target size must be positive");
    TriMesh out;
    out.tris.reserve(mesh.tris.size());
    std::vector<Triangle> stack(mesh.tris.begin(), mesh.tris.end());
    while (!stack.empty()) {
        const Triangle t = stack.back();
        stack.pop_back();
        if (t.circumdiameter() <= target_um) {
            out.tris.push_back(t);
            continue;
        }
        const double la = norm(t.b - t.c);
        const double lb = norm(t.c - t.a);
        const double lc = norm(t.a - t.b);
        if (la >= lb && la >= lc) {
            const Vec3 m = (t.b + t.c) * 0.5;
            stack.push_back({t.a, t.b, m});
            stack.push_back({t.a, m, t.c});
        } else if (lb >= la && lb >= lc) {
            const Vec3 m = (t.c + t.a) * 0.5;
            stack.push_back({t.b, t.c, m});
            stack.push_back({t.b, m, t.a});
        } else {
            const Vec3 m = (t.a + t.b) * 0.5;
            stack.push_back({t.c, t.a, m});
            stack.push_back({t.c, m, t.b});
        }
    }
    return out;
}

// Axis-aligned box, outward-oriented. Faces are gridded so no panel is more
// elongated than the box's smallest dimension allows (max_cell_um = 0 picks
// that automatically); slivers make poor collocation panels.
inline TriMesh make_box(const Vec3& lo, const Vec3& hi, double max_cell_um = 0.0) {
    const Vec3 ext = hi - lo;
    double cell = max_cell_um;
    if (cell <= 0.0) cell = std::max(std::min({ext.x, ext.y, ext.z}), 1e-9);
    TriMesh m;
    // Grid one face spanned by axes (au, av) at the fixed coordinate of axis
    // an; swap controls the winding.
    auto face = [&](int au, int av, int an, double n_value, bool swap) {
        const double lu = lo[au], hu = hi[au];
        const double lv = lo[av], hv = hi[av];
        const int nu = std::max(1, int(std::ceil((hu - lu) / cell)));
        const int nv = std::max(1, int(std::ceil((hv - lv) / cell)));
        for (int i = 0; i < nu; ++i) {
            for (int k = 0; k < nv; ++k) {
                auto corner = [&](int di, int dk) {
                    Vec3 p;
                    p[au] = lu + (hu - lu) * double(i + di) / nu;
                    p[av] = lv + (hv - lv) * double(k + dk) / nv;
                    p[an] = n_value;
                    return p;
                };
                Vec3 a = corner(0, 0), b = corner(1, 0), c = corner(1, 1), d = corner(0, 1);
                if (swap) std::swap(b, d);
                m.tris.push_back({a, b, c});
                m.tris.push_back({a, c, d});
            }
        }
    };
    face(0, 1, 2, lo.z, true);  // bottom
    face(0, 1, 2, hi.z, false); // top
    face(0, 2, 1, lo.y, false); // y = lo
    face(0, 2, 1, hi.y, true);  // y = hi
    face(1, 2, 0, lo.x, true);  // x = lo
    face(1, 2, 0, hi.x, false); // x = hi
    orient_outward(m);
    return m;
}

// Icosphere by repeated midpoint subdivision, radius in micrometres.
inline TriMesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts) v = normalized(v);
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int i, int j) {
            const auto key = std::minmax(i, j);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            verts.push_back(normalized((verts[i] + verts[j]) * 0.5));
            const int k = static_cast<int>(verts.size()) - 1;
            midpoint[key] = k;
            return k;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({ab, f[1], bc});
            next.push_back({ca, bc, f[2]});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    TriMesh m;
    m.tris.reserve(faces.size());
    for (const auto& f : faces) {
        m.tris.push_back({center + verts[f[0]] * radius, center + verts[f[1]] * radius,
                          center + verts[f[2]] * radius});
    }
    orient_outward(m);
    return m;
}

// Sweeps a cross-section polygon along a planar polyline at a fixed
// elevation, producing a closed outward-oriented surface with end caps.
//
// The path is given as [x,y] points (µm); the cross-section lives in the
// (u,w) plane of each station, u horizontal-transverse to the local path
// direction and w vertical. height_um elevates the cross-section origin
// above the z = 0 surface. Corners are mitred along the angle bisector.
inline TriMesh extrude_rail(const Polygon& cross_section, const std::vector<Vec2>& path,
                            double height_um) {
    if (cross_section.size() < 3 || !is_simple(cross_section))
        throw geometry_error("extrude_rail: cross-section must be a simple polygon");
    if (path.size() < 2) throw geometry_error("extrude_rail: path needs at least 2 points");
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (norm(path[i + 1] - path[i]) < 1e-9)
            throw geometry_error("extrude_rail: repeated path point at index " +
                                 std::to_string(i));
    }

    Polygon section = cross_section;
    make_ccw(section);
    const std::size_t nv = section.size();
    double umax = 0.0;
    double edge_max = 0.0;
    for (std::size_t k = 0; k < nv; ++k) {
        umax = std::max(umax, std::abs(section[k].x));
        edge_max = std::max(edge_max, norm(section[(k + 1) % nv] - section[k]));
    }

    // Longitudinal stations at roughly the cross-section edge scale keep the
    // side panels square-ish; joints stay as explicit stations for mitring.
    std::vector<Vec2> stations;
    std::vector<bool> is_joint;
    const double substep = 0.8 * edge_max;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const double seg = norm(path[i + 1] - path[i]);
        const int n = std::max(1, int(std::ceil(seg / substep)));
        for (int s = 0; s < n; ++s) {
            stations.push_back(path[i] + (path[i + 1] - path[i]) * (double(s) / n));
            is_joint.push_back(s == 0);
        }
    }
    stations.push_back(path.back());
    is_joint.push_back(true);

    // Station frames: in-plane normal (mitred at interior joints) plus z.
    const std::size_t np = stations.size();
    std::vector<Vec3> rings(np * nv);
    for (std::size_t i = 0; i < np; ++i) {
        Vec2 dir;
        double miter_scale = 1.0;
        if (i == 0) {
            dir = stations[1] - stations[0];
        } else if (i == np - 1) {
            dir = stations[np - 1] - stations[np - 2];
        } else {
            const Vec2 d0 = (stations[i] - stations[i - 1]) / norm(stations[i] - stations[i - 1]);
            const Vec2 d1 = (stations[i + 1] - stations[i]) / norm(stations[i + 1] - stations[i]);
            dir = d0 + d1;
            if (norm(dir) < 1e-9)
                throw geometry_error("extrude_rail: path reverses onto itself");
            const double cos_half = dot(d0, dir / norm(dir));
            if (cos_half <= 1e-6)
                throw geometry_error("extrude_rail: sweep self-intersects at a joint");
            miter_scale = 1.0 / cos_half;
            // A mitred ring wider than the neighbouring station spacing cuts
            // back into the sweep volume (conservative test).
            const double reach = umax * miter_scale;
            if (is_joint[i] && (reach > norm(stations[i] - stations[i - 1]) ||
                                reach > norm(stations[i + 1] - stations[i])))
                throw geometry_error("extrude_rail: sweep self-intersects at a joint");
        }
        dir = dir / norm(dir);
        const Vec2 n{-dir.y, dir.x}; // horizontal normal, left of travel
        for (std::size_t k = 0; k < nv; ++k) {
            const Vec2 uv = section[k];
            rings[i * nv + k] = Vec3{stations[i].x + n.x * uv.x * miter_scale,
                                     stations[i].y + n.y * uv.x * miter_scale,
                                     height_um + uv.y};
        }
    }

    TriMesh m;
    m.tris.reserve(2 * nv * (np - 1) + 2 * (nv - 2));
    for (std::size_t i = 0; i + 1 < np; ++i) {
        for (std::size_t k = 0; k < nv; ++k) {
            const std::size_t k2 = (k + 1) % nv;
            const Vec3& a = rings[i * nv + k];
            const Vec3& b = rings[i * nv + k2];
            const Vec3& c = rings[(i + 1) * nv + k2];
            const Vec3& d = rings[(i + 1) * nv + k];
            m.tris.push_back({a, b, c});
            m.tris.push_back({a, c, d});
        }
    }
    // End caps from the cross-section triangulation.
    const auto cap = triangulate(section);
    for (const auto& f : cap) {
        m.tris.push_back({rings[f[0]], rings[f[2]], rings[f[1]]});                       // start
        m.tris.push_back({rings[(np - 1) * nv + f[0]], rings[(np - 1) * nv + f[1]],
                          rings[(np - 1) * nv + f[2]]});                                 // end
    }
    orient_outward(m);
    return m;
}

// Loads an OFF or Wavefront OBJ triangle mesh (extension decides).
inline TriMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("load_mesh: cannot open '" + path + "'");
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> faces;

    const auto dot_pos = path.find_last_of('.');
    const std::string ext = dot_pos == std::string::npos ? "" : path.substr(dot_pos + 1);
    if (ext == "off" || ext == "OFF") {
        std::string magic;
        in >> magic;
        if (magic != "OFF") throw parse_error("load_mesh: '" + path + "' is not an OFF file");
        std::size_t nv = 0, nf = 0, ne = 0;
        in >> nv >> nf >> ne;
        verts.resize(nv);
        for (auto& v : verts) in >> v.x >> v.y >> v.z;
        for (std::size_t i = 0; i < nf; ++i) {
            int cnt = 0;
            in >> cnt;
            std::vector<int> ids(cnt);
            for (auto& id : ids) in >> id;
            if (!in) throw parse_error("load_mesh: truncated OFF file '" + path + "'");
            for (int k = 1; k + 1 < cnt; ++k) faces.push_back({ids[0], ids[k], ids[k + 1]});
        }
    } else if (ext == "obj" || ext == "OBJ") {
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string tag;
            ls >> tag;
            if (tag == "v") {
                Vec3 v;
                ls >> v.x >> v.y >> v.z;
                verts.push_back(v);
            } else if (tag == "f") {
                std::vector<int> ids;
                std::string tok;
                while (ls >> tok) ids.push_back(std::stoi(tok.substr(0, tok.find('/'))) - 1);
                for (std::size_t k = 1; k + 1 < ids.size(); ++k)
                    faces.push_back({ids[0], static_cast<int>(ids[k]),
                                     static_cast<int>(ids[k + 1])});
            }
        }
    } else {
        throw parse_error("load_mesh: unsupported mesh format '" + ext + "' (use .off or .obj)");
    }

    TriMesh m;
    m.tris.reserve(faces.size());
    for (const auto& f : faces) {
        for (int id : {f[0], f[1], f[2]}) {
            if (id < 0 || static_cast<std::size_t>(id) >= verts.size())
                throw parse_error("load_mesh: face index out of range in '" + path + "'");
        }
        Triangle t{verts[f[0]], verts[f[1]], verts[f[2]]};
        if (t.area() <= 0.0) throw validation_error("load_mesh: zero-area triangle in '" + path + "'");
        m.tris.push_back(t);
    }
    return m;
}

} // namespace iontrap

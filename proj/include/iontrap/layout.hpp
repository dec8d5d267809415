#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iontrap/constants.hpp"
#include "iontrap/errors.hpp"
#include "iontrap/mesh.hpp"
#include "iontrap/polygon.hpp"

namespace iontrap {

enum class ElectrodeRole { RF, DC, GND };

inline ElectrodeRole role_from_string(const std::string& s) {
    if (s == "RF") return ElectrodeRole::RF;
    if (s == "DC") return ElectrodeRole::DC;
    if (s == "GND") return ElectrodeRole::GND;
    throw parse_error("unknown electrode role '" + s + "' (expected RF, DC or GND)");
}

inline std::string to_string(ElectrodeRole r) {
    switch (r) {
    case ElectrodeRole::RF: return "RF";
    case ElectrodeRole::DC: return "DC";
    default: return "GND";
    }
}

struct Electrode {
    std::string id;
    ElectrodeRole role = ElectrodeRole::GND;
    std::vector<Polygon> planar_faces; // simple polygons in the z = 0 plane, µm
    TriMesh panels_3d;                 // optional metallized surface, µm
};

struct DesignRules {
    double min_spacing_um = 0.0;
};

struct BoundingBox {
    Vec3 lo;
    Vec3 hi;

    bool contains(const Vec3& p) const {
        return p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y && p.z > lo.z && p.z < hi.z;
    }
};

struct ElectrodeLayout {
    std::vector<Electrode> electrodes;
    BoundingBox bounding_box;
    DesignRules design_rules;

    const Electrode* find(const std::string& id) const {
        for (const auto& e : electrodes)
            if (e.id == id) return &e;
        return nullptr;
    }

    std::size_t total_panels() const {
        std::size_t n = 0;
        for (const auto& e : electrodes) n += e.panels_3d.panel_count();
        return n;
    }

    bool has_panels() const { return total_panels() > 0; }
};

struct DriveConfig {
    double rf_amplitude_V = 0.0;
    double rf_omega = 0.0; // angular drive frequency, rad/s
    std::map<std::string, double> dc_voltages;
};

inline DriveConfig make_drive(double rf_amplitude_V, double rf_frequency_hz,
                              std::map<std::string, double> dc = {}) {
    if (rf_frequency_hz <= 0.0) throw validation_error("drive frequency must be positive");
    if (rf_amplitude_V < 0.0) throw validation_error("RF amplitude must be non-negative");
    return DriveConfig{rf_amplitude_V, two_pi * rf_frequency_hz, std::move(dc)};
}

struct IonSpecies {
    std::string name;
    double mass_amu = 0.0;
    int charge_e = 1;

    double mass_kg() const { return mass_amu * constants::atomic_mass_unit; }
    double charge_C() const { return charge_e * constants::elementary_charge; }
};

inline IonSpecies make_species(const std::string& name, double mass_amu, int charge_e = 1) {
    if (mass_amu <= 0.0) throw validation_error("ion mass must be positive");
    if (charge_e < 1) throw validation_error("ion charge must be at least 1 e");
    return IonSpecies{name, mass_amu, charge_e};
}

inline void validate_drive(const DriveConfig& drive, const ElectrodeLayout& layout) {
    if (drive.rf_omega <= 0.0) throw validation_error("drive frequency must be positive");
    if (drive.rf_amplitude_V < 0.0) throw validation_error("RF amplitude must be non-negative");
    for (const auto& [id, v] : drive.dc_voltages) {
        (void)v;
        if (!layout.find(id))
            throw validation_error("dc_voltages references unknown electrode '" + id + "'");
    }
}

namespace detail {

inline void grow(BoundingBox& bb, const Vec3& p) {
    bb.lo.x = std::min(bb.lo.x, p.x);
    bb.lo.y = std::min(bb.lo.y, p.y);
    bb.lo.z = std::min(bb.lo.z, p.z);
    bb.hi.x = std::max(bb.hi.x, p.x);
    bb.hi.y = std::max(bb.hi.y, p.y);
    bb.hi.z = std::max(bb.hi.z, p.z);
}

} // namespace detail

// Geometry-derived valid region: the lateral extent of all conductors and a
// vertical span reaching above the tallest structure. The analysis region of
// interest is well inside; the box exists to catch runaway searches.
inline BoundingBox compute_bounding_box(const std::vector<Electrode>& electrodes) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    BoundingBox bb{{inf, inf, 0.0}, {-inf, -inf, 0.0}};
    for (const auto& e : electrodes) {
        for (const auto& poly : e.planar_faces)
            for (const auto& v : poly) detail::grow(bb, {v.x, v.y, 0.0});
        for (const auto& t : e.panels_3d.tris) {
            detail::grow(bb, t.a);
            detail::grow(bb, t.b);
            detail::grow(bb, t.c);
        }
    }
    if (bb.lo.x > bb.hi.x) throw validation_error("layout has no geometry");
    const double lateral = std::max(bb.hi.x - bb.lo.x, bb.hi.y - bb.lo.y);
    bb.lo.z = 0.0;
    bb.hi.z = std::max(bb.hi.z * 1.5, 0.75 * lateral);
    return bb;
}

// Full layout validation. Throws validation_error naming the offending
// electrode(s); never mutates its input.
inline void validate_layout(const ElectrodeLayout& layout) {
    if (layout.electrodes.empty()) throw validation_error("layout has no electrodes");
    std::set<std::string> ids;
    for (const auto& e : layout.electrodes) {
        if (e.id.empty()) throw validation_error("electrode with empty id");
        if (!ids.insert(e.id).second)
            throw validation_error("duplicate electrode id '" + e.id + "'");
        for (const auto& poly : e.planar_faces) {
            if (!is_simple(poly))
                throw validation_error("electrode '" + e.id + "' has a non-simple polygon");
        }
        for (const auto& t : e.panels_3d.tris) {
            if (t.area() <= 0.0)
                throw validation_error("electrode '" + e.id + "' has a zero-area panel");
        }
    }
    const auto& es = layout.electrodes;
    for (std::size_t i = 0; i < es.size(); ++i) {
        for (std::size_t j = i + 1; j < es.size(); ++j) {
            for (const auto& p : es[i].planar_faces) {
                for (const auto& q : es[j].planar_faces) {
                    if (polygons_overlap(p, q))
                        throw validation_error("planar faces of electrodes '" + es[i].id +
                                               "' and '" + es[j].id + "' overlap");
                    const double gap = polygon_clearance(p, q);
                    if (gap < layout.design_rules.min_spacing_um)
                        throw validation_error(
                            "spacing violation between electrodes '" + es[i].id + "' and '" +
                            es[j].id + "': clearance " + std::to_string(gap) + " um < " +
                            std::to_string(layout.design_rules.min_spacing_um) + " um");
                }
            }
        }
    }
}

// Refines every electrode's 3D panels to the target characteristic size.
// Planar faces are untouched; refinement of flat panels conserves area.
inline ElectrodeLayout panelize(const ElectrodeLayout& layout, double target_panel_size_um) {
    if (target_panel_size_um <= 0.0)
        throw validation_error("panelize: target panel size must be positive");
    ElectrodeLayout out = layout;
    for (auto& e : out.electrodes) {
        if (e.panels_3d.panel_count() > 0)
            e.panels_3d = refine_to_size(e.panels_3d, target_panel_size_um);
    }
    return out;
}

// --- layout file ingest -----------------------------------------------------
//
// Schema (JSON, lengths in µm):
//   {
//     "units": "um",
//     "design_rules": {"min_spacing_um": 10.0},
//     "electrodes": [
//       {"id": "...", "role": "RF|DC|GND",
//        "polygons": [[[x,y], ...], ...],          // optional planar rings
//        "mesh": "relative/path.off",              // optional 3D surface
//        "extrude": {"cross_section": [[u,w],...], // optional swept 3D rail
//                    "path": [[x,y],...], "height": h},
//        "boxes": [{"min": [x,y,z], "max": [x,y,z]}, ...]} // optional prisms
//     ]
//   }

inline ElectrodeLayout layout_from_json(const nlohmann::json& j,
                                        const std::filesystem::path& base_dir = ".") {
    ElectrodeLayout layout;
    if (!j.contains("units") || j.at("units").get<std::string>() != "um")
        throw parse_error("layout: required key 'units' must be \"um\"");
    if (j.contains("design_rules"))
        layout.design_rules.min_spacing_um =
            j.at("design_rules").value("min_spacing_um", 0.0);
    if (!j.contains("electrodes") || !j.at("electrodes").is_array())
        throw parse_error("layout: required key 'electrodes' must be an array");

    for (const auto& je : j.at("electrodes")) {
        Electrode e;
        e.id = je.at("id").get<std::string>();
        e.role = role_from_string(je.at("role").get<std::string>());
        if (je.contains("polygons")) {
            for (const auto& jring : je.at("polygons")) {
                Polygon poly;
                for (const auto& jv : jring) {
                    if (!jv.is_array() || jv.size() != 2)
                        throw parse_error("layout: polygon vertex of '" + e.id +
                                          "' must be [x,y]");
                    poly.push_back({jv[0].get<double>(), jv[1].get<double>()});
                }
                make_ccw(poly);
                e.planar_faces.push_back(std::move(poly));
            }
        }
        if (je.contains("mesh")) {
            const auto mesh_path = base_dir / je.at("mesh").get<std::string>();
            e.panels_3d.append(load_mesh(mesh_path.string()));
        }
        if (je.contains("extrude")) {
            const auto& jx = je.at("extrude");
            Polygon cs;
            for (const auto& jv : jx.at("cross_section"))
                cs.push_back({jv[0].get<double>(), jv[1].get<double>()});
            std::vector<Vec2> path;
            for (const auto& jv : jx.at("path"))
                path.push_back({jv[0].get<double>(), jv[1].get<double>()});
            e.panels_3d.append(extrude_rail(cs, path, jx.at("height").get<double>()));
        }
        if (je.contains("boxes")) {
            for (const auto& jb : je.at("boxes")) {
                const Vec3 lo{jb.at("min")[0].get<double>(), jb.at("min")[1].get<double>(),
                              jb.at("min")[2].get<double>()};
                const Vec3 hi{jb.at("max")[0].get<double>(), jb.at("max")[1].get<double>(),
                              jb.at("max")[2].get<double>()};
                if (!(hi.x > lo.x && hi.y > lo.y && hi.z > lo.z))
                    throw validation_error("electrode '" + e.id + "' has a degenerate box");
                e.panels_3d.append(make_box(lo, hi));
            }
        }
        layout.electrodes.push_back(std::move(e));
    }
    if (layout.electrodes.empty()) throw validation_error("layout has no electrodes");
    if (j.contains("bounding_box")) {
        const auto& jb = j.at("bounding_box");
        layout.bounding_box.lo = {jb.at("min")[0].get<double>(), jb.at("min")[1].get<double>(),
                                  jb.at("min")[2].get<double>()};
        layout.bounding_box.hi = {jb.at("max")[0].get<double>(), jb.at("max")[1].get<double>(),
                                  jb.at("max")[2].get<double>()};
    } else {
        layout.bounding_box = compute_bounding_box(layout.electrodes);
    }
    validate_layout(layout);
    return layout;
}

inline ElectrodeLayout load_layout(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("load_layout: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw parse_error("load_layout: malformed JSON in '" + path + "': " + ex.what());
    }
    try {
        return layout_from_json(j, std::filesystem::path(path).parent_path());
    } catch (const nlohmann::json::exception& ex) {
        throw parse_error("load_layout: bad layout schema in '" + path + "': " + ex.what());
    }
}

} // namespace iontrap

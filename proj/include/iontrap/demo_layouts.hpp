#pragma once

#include <nlohmann/json.hpp>

#include "iontrap/layout.hpp"

namespace iontrap {

// Parametric demo geometries. Both builders emit the documented layout
// schema, so the shipped layout files and the in-code layouts share one
// source of truth.

struct TwoRailParams {
    double rail_width_um = 120.0;   // RF rail width
    double separation_um = 71.5;    // inner-edge to inner-edge RF gap
    double half_length_um = 600.0;  // rail half length along x
    double dc_margin_um = 10.0;     // RF-DC clearance
};

// Conventional five-wire surface trap: two RF rails along x with DC between
// and outside. For long rails the RF nil sits at z0 = sqrt(a*b), a = sep/2,
// b = sep/2 + width.
inline nlohmann::ordered_json two_rail_layout_json(const TwoRailParams& p = {}) {
    using nlohmann::ordered_json;
    const double a = 0.5 * p.separation_um;
    const double b = a + p.rail_width_um;
    const double L = p.half_length_um;
    const double m = p.dc_margin_um;
    auto rect = [](double x0, double y0, double x1, double y1) {
        return ordered_json::array(
            {ordered_json::array({x0, y0}), ordered_json::array({x1, y0}),
             ordered_json::array({x1, y1}), ordered_json::array({x0, y1})});
    };
    ordered_json j;
    j["units"] = "um";
    j["design_rules"] = {{"min_spacing_um", 10.0}};
    j["electrodes"] = ordered_json::array();
    auto add = [&](const std::string& id, const std::string& role, ordered_json poly) {
        j["electrodes"].push_back(
            {{"id", id}, {"role", role}, {"polygons", ordered_json::array({poly})}});
    };
    add("rf_plus", "RF", rect(-L, a, L, b));
    add("rf_minus", "RF", rect(-L, -b, L, -a));
    add("dc_center", "DC", rect(-L, -a + m, L, a - m));
    add("dc_outer_plus", "DC", rect(-L, b + m, L, b + m + 200.0));
    add("dc_outer_minus", "DC", rect(-L, -b - m - 200.0, L, -b - m));
    return j;
}

inline ElectrodeLayout make_surface_two_rail(const TwoRailParams& p = {}) {
    return layout_from_json(two_rail_layout_json(p));
}

struct Junction3dParams {
    double cell_half_um = 600.0;         // branch length from the junction center
    double strip_half_width_um = 60.0;   // surface RF strip half width (120 wide)
    double rail_height_um = 247.0;       // overhead rail centerline elevation
    double rail_half_width_um = 28.0;    // diamond: 56 µm horizontally
    double rail_half_height_um = 41.0;   // diamond: 82 µm vertically
    // Junction shaping knobs (the two free optimization positions): o1 is the
    // surface-RF half width at the junction center (tapered from the strip
    // half width over taper_length), o2 is where the overhead rails stop
    // short of the crossing hub.
    double o1_um = 20.0;
    double o2_um = 30.0;
    double taper_length_um = 120.0;
    // Solid RF block joining the four overhead rails at the crossing; the
    // concentrated overhead field is what deflects the trap minimum toward
    // the surface near the junction.
    bool crossing_hub = true;
    bool include_posts = true;
    double post_half_um = 28.0;          // 56 µm square pedestals
    double post_center_um = 300.0;       // posts at the cell corners
    double dc_margin_um = 10.0;
};

// Approximate single X-junction cell of the 3D-printed junction array:
// surface RF cross under two crossing elevated diamond-profile RF rails,
// corner support posts, and quadrant DC pads. Dimensions follow the stated
// device numbers; the junction shaping is parametric.
inline nlohmann::ordered_json junction3d_layout_json(const Junction3dParams& p = {}) {
    using nlohmann::ordered_json;
    const double L = p.cell_half_um;
    const double w = p.strip_half_width_um;
    const double o1 = p.o1_um;
    const double t = p.taper_length_um;

    ordered_json j;
    j["units"] = "um";
    j["design_rules"] = {{"min_spacing_um", 10.0}};
    j["electrodes"] = ordered_json::array();
    auto arr2 = [](double x, double y) { return ordered_json::array({x, y}); };

    // Surface RF: through strip along x (optionally necked at the center)
    // plus the two y-branch stubs, as one electrode of three faces.
    ordered_json strip_x = ordered_json::array();
    if (o1 < w) {
        strip_x = {arr2(-L, -w), arr2(-t, -w), arr2(0.0, -o1), arr2(t, -w), arr2(L, -w),
                   arr2(L, w),   arr2(t, w),   arr2(0.0, o1),  arr2(-t, w), arr2(-L, w)};
    } else {
        strip_x = {arr2(-L, -w), arr2(L, -w), arr2(L, w), arr2(-L, w)};
    }
    ordered_json rf_faces = ordered_json::array();
    rf_faces.push_back(strip_x);
    rf_faces.push_back({arr2(-w, w), arr2(w, w), arr2(w, L), arr2(-w, L)});     // +y stub
    rf_faces.push_back({arr2(-w, -L), arr2(w, -L), arr2(w, -w), arr2(-w, -w)}); // -y stub
    ordered_json rf_surface = {{"id", "rf_surface"}, {"role", "RF"}, {"polygons", rf_faces}};

    // Pedestal pads under the posts stay at RF potential.
    if (p.include_posts) {
        const double c = p.post_center_um;
        const double h = p.post_half_um;
        for (double sx : {-1.0, 1.0}) {
            for (double sy : {-1.0, 1.0}) {
                rf_surface["polygons"].push_back({arr2(sx * c - h, sy * c - h),
                                                  arr2(sx * c + h, sy * c - h),
                                                  arr2(sx * c + h, sy * c + h),
                                                  arr2(sx * c - h, sy * c + h)});
            }
        }
    }
    j["electrodes"].push_back(rf_surface);

    // Overhead rails: diamond cross-section, through rail along x, crossing
    // rail split to stop short of the through rail by the o2 gap.
    const ordered_json diamond = {arr2(p.rail_half_width_um, 0.0), arr2(0.0, p.rail_half_height_um),
                                  arr2(-p.rail_half_width_um, 0.0),
                                  arr2(0.0, -p.rail_half_height_um)};
    j["electrodes"].push_back({{"id", "rf_rail_x"},
                               {"role", "RF"},
                               {"extrude",
                                {{"cross_section", diamond},
                                 {"path", ordered_json::array({arr2(-L, 0.0), arr2(L, 0.0)})},
                                 {"height", p.rail_height_um}}}});
    j["electrodes"].push_back({{"id", "rf_rail_y_plus"},
                               {"role", "RF"},
                               {"extrude",
                                {{"cross_section", diamond},
                                 {"path", ordered_json::array({arr2(0.0, p.o2_um), arr2(0.0, L)})},
                                 {"height", p.rail_height_um}}}});
    j["electrodes"].push_back({{"id", "rf_rail_y_minus"},
                               {"role", "RF"},
                               {"extrude",
                                {{"cross_section", diamond},
                                 {"path", ordered_json::array({arr2(0.0, -L), arr2(0.0, -p.o2_um)})},
                                 {"height", p.rail_height_um}}}});

    if (p.include_posts) {
        const double c = p.post_center_um;
        const double h = p.post_half_um;
        const double top = p.rail_height_um - p.rail_half_height_um;
        ordered_json boxes = ordered_json::array();
        for (double sx : {-1.0, 1.0}) {
            for (double sy : {-1.0, 1.0}) {
                boxes.push_back({{"min", ordered_json::array({sx * c - h, sy * c - h, 0.0})},
                                 {"max", ordered_json::array({sx * c + h, sy * c + h, top})}});
            }
        }
        j["electrodes"].push_back({{"id", "rf_posts"}, {"role", "RF"}, {"boxes", boxes}});
    }

    // Quadrant DC pads, two per quadrant, clear of the RF cross and posts.
    const double m = p.dc_margin_um;
    const double inner = w + m;
    const double post_lo = p.post_center_um - p.post_half_um - m;
    const double post_hi = p.post_center_um + p.post_half_um + m;
    int pad_idx = 0;
    for (double sx : {-1.0, 1.0}) {
        for (double sy : {-1.0, 1.0}) {
            auto pad = [&](double x0, double y0, double x1, double y1) {
                ordered_json poly = {arr2(std::min(sx * x0, sx * x1), std::min(sy * y0, sy * y1)),
                                     arr2(std::max(sx * x0, sx * x1), std::min(sy * y0, sy * y1)),
                                     arr2(std::max(sx * x0, sx * x1), std::max(sy * y0, sy * y1)),
                                     arr2(std::min(sx * x0, sx * x1), std::max(sy * y0, sy * y1))};
                j["electrodes"].push_back({{"id", "dc_q" + std::to_string(pad_idx++)},
                                           {"role", "DC"},
                                           {"polygons", ordered_json::array({poly})}});
            };
            pad(inner, inner, L, post_lo);
            pad(inner, post_hi, L, L);
        }
    }
    return j;
}

inline ElectrodeLayout make_junction3d_approx(const Junction3dParams& p = {}) {
    return layout_from_json(junction3d_layout_json(p));
}

} // namespace iontrap

#pragma once

#include <cmath>

#include "iontrap/constants.hpp"
#include "iontrap/errors.hpp"
#include "iontrap/polygon.hpp"
#include "iontrap/vec.hpp"

namespace iontrap {

// Gapless-plane electrostatics: a planar patch held at unit potential on an
// otherwise grounded infinite plane at z = 0. The half-space solution is
//
//   phi(r) = Omega(r) / (2 pi),
//
// where Omega is the solid angle the patch subtends at r. Both the solid
// angle and its gradient have closed forms over polygon edges, so no
// quadrature is involved anywhere in the planar solver.

namespace detail {

// Signed solid angle of triangle (a,b,c) seen from p, positive when p lies
// on the side from which (a,b,c) winds counter-clockwise.
inline double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p) {
    const Vec3 r1 = a - p;
    const Vec3 r2 = b - p;
    const Vec3 r3 = c - p;
    const double n1 = norm(r1);
    const double n2 = norm(r2);
    const double n3 = norm(r3);
    const double numer = triple(r1, r2, r3);
    const double denom =
        n1 * n2 * n3 + dot(r1, r2) * n3 + dot(r2, r3) * n1 + dot(r3, r1) * n2;
    // van Oosterom-Strackee; atan2 keeps the branch for obtuse spans.
    return -2.0 * std::atan2(numer, denom);
}

} // namespace detail

// Solid angle subtended by a CCW planar polygon (z = 0) at a point above the
// plane. Fan decomposition is valid for any simple polygon because the
// triangle terms are signed.
inline double patch_solid_angle(const Polygon& poly, const Vec3& p_um) {
    const Vec3 v0{poly[0].x, poly[0].y, 0.0};
    double omega = 0.0;
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        const Vec3 v1{poly[i].x, poly[i].y, 0.0};
        const Vec3 v2{poly[i + 1].x, poly[i + 1].y, 0.0};
        omega += detail::triangle_solid_angle(v0, v1, v2, p_um);
    }
    return omega;
}

// Potential (V per unit patch volt) of the gapless patch solution.
inline double planar_patch_potential(const Polygon& poly, const Vec3& p_um) {
    if (p_um.z <= 0.0) throw domain_error("planar patch potential requires z > 0");
    return patch_solid_angle(poly, p_um) / (2.0 * constants::pi);
}

// Electric field (V/m per unit patch volt) of the gapless patch solution.
// E = -(1/2 pi) grad Omega; the gradient reduces to the Biot-Savart-style
// closed form over the polygon edges.
inline Vec3 planar_basis_field(const Polygon& poly, const Vec3& p_um) {
    if (p_um.z <= 0.0) throw domain_error("planar basis field requires z > 0");
    const std::size_t n = poly.size();
    Vec3 sum{};
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& va = poly[i];
        const Vec2& vb = poly[(i + 1) % n];
        const Vec3 a{va.x, va.y, 0.0};
        const Vec3 b{vb.x, vb.y, 0.0};
        const Vec3 A = p_um - a;
        const Vec3 B = p_um - b;
        const Vec3 L = b - a;
        const Vec3 LxA = cross(L, A);
        const double lever2 = norm2(LxA);
        if (lever2 < 1e-30) continue; // on the edge line: contribution vanishes
        const double s = (dot(L, A) / norm(A) - dot(L, B) / norm(B)) / lever2;
        sum += LxA * s;
    }
    // sum is in 1/µm for a unit-volt patch; convert to V/m.
    return sum * (m_to_um / (2.0 * constants::pi));
}

} // namespace iontrap

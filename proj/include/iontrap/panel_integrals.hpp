#pragma once

#include <cmath>

#include "iontrap/vec.hpp"

namespace iontrap {
namespace panel {

// Closed-form integrals of the free-space kernel over a flat triangle with
// uniform source density (the constant-panel collocation BEM kernel):
//
//   potential_integral :  I(r) = \int_T dA' / |r - r'|
//   field_integral     :  K(r) = \int_T (r - r') / |r - r'|^3 dA'
//
// Edge-wise evaluation after Wilton et al. The observation point may sit in
// the panel plane (h = 0), including at the panel centroid, which is how the
// collocation self-terms are produced. Lengths are unit-agnostic: I scales
// like length, K is dimensionless.

struct TrianglePanel {
    Vec3 v[3];
    Vec3 unit_normal;

    explicit TrianglePanel(const Vec3& a, const Vec3& b, const Vec3& c) {
        v[0] = a;
        v[1] = b;
        v[2] = c;
        unit_normal = normalized(cross(b - a, c - a));
    }
};

struct KernelValues {
    double potential = 0.0; // I(r)
    Vec3 field{};           // K(r)
};

inline KernelValues evaluate(const TrianglePanel& t, const Vec3& r) {
    const Vec3& n = t.unit_normal;
    const double h = dot(r - t.v[0], n);
    const Vec3 rho = r - n * h;
    const double abs_h = std::abs(h);
    const double sign_h = (h > 0.0) - (h < 0.0);

    double pot = 0.0;
    double beta_sum = 0.0;
    Vec3 tangential{};
    for (int i = 0; i < 3; ++i) {
        const Vec3& s = t.v[i];
        const Vec3& e = t.v[(i + 1) % 3];
        const Vec3 edge = e - s;
        const double edge_len = norm(edge);
        if (edge_len < 1e-300) continue;
        const Vec3 lhat = edge / edge_len;
        const Vec3 uhat = cross(lhat, n); // outward edge normal for CCW winding
        const double lm = dot(s - rho, lhat);
        const double lp = dot(e - rho, lhat);
        const double p0 = dot(s - rho, uhat);
        const double rm = norm(r - s);
        const double rp = norm(r - e);
        const double r02 = p0 * p0 + h * h;

        // ln((rp+lp)/(rm+lm)) with the cancellation-free branch.
        double q;
        if (lp + lm >= 0.0)
            q = std::log((rp + lp) / std::max(rm + lm, 1e-300));
        else
            q = std::log(std::max(rm - lm, 1e-300) / std::max(rp - lp, 1e-300));

        const double beta = std::atan2(p0 * lp, r02 + abs_h * rp) -
                            std::atan2(p0 * lm, r02 + abs_h * rm);
        pot += p0 * q;
        beta_sum += beta;
        tangential += uhat * q;
    }
    KernelValues out;
    out.potential = pot - abs_h * beta_sum;
    out.field = tangential + n * (sign_h * beta_sum);
    return out;
}

} // namespace panel
} // namespace iontrap

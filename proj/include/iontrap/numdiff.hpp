#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "iontrap/constants.hpp"
#include "iontrap/vec.hpp"

namespace iontrap {

// Central-difference derivatives of scalar fields sampled in µm coordinates,
// returned with respect to SI metres. The fields analysed here come from
// numeric solvers, so analytic derivatives are unavailable in general; one
// Richardson extrapolation knocks the truncation error down to O(h^4).
struct NumDiffOptions {
    // Step in µm; 0 selects 1 % of the local characteristic length (the
    // height above the trap surface, floored at 1 µm).
    double step_um = 0.0;
    bool richardson = true;

    double resolve_step(const Vec3& p_um) const {
        if (step_um > 0.0) return step_um;
        return 0.01 * std::max(std::abs(p_um.z), 1.0);
    }
};

namespace numdiff {

template <class F>
Vec3 gradient_once(const F& f, const Vec3& p, double h_um) {
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
        Vec3 hi = p, lo = p;
        hi[a] += h_um;
        lo[a] -= h_um;
        g[a] = (f(hi) - f(lo)) / (2.0 * h_um * um_to_m);
    }
    return g;
}

// Gradient in (field units)/m.
template <class F>
Vec3 gradient(const F& f, const Vec3& p_um, const NumDiffOptions& opts = {}) {
    const double h = opts.resolve_step(p_um);
    const Vec3 g1 = gradient_once(f, p_um, h);
    if (!opts.richardson) return g1;
    const Vec3 g2 = gradient_once(f, p_um, 0.5 * h);
    return (g2 * 4.0 - g1) / 3.0;
}

template <class F>
Eigen::Matrix3d hessian_once(const F& f, const Vec3& p, double h_um) {
    Eigen::Matrix3d m;
    const double h_m = h_um * um_to_m;
    const double f0 = f(p);
    for (int a = 0; a < 3; ++a) {
        Vec3 hi = p, lo = p;
        hi[a] += h_um;
        lo[a] -= h_um;
        m(a, a) = (f(hi) - 2.0 * f0 + f(lo)) / (h_m * h_m);
    }
    for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
            Vec3 pp = p, pm = p, mp = p, mm = p;
            pp[a] += h_um;
            pp[b] += h_um;
            pm[a] += h_um;
            pm[b] -= h_um;
            mp[a] -= h_um;
            mp[b] += h_um;
            mm[a] -= h_um;
            mm[b] -= h_um;
            const double v = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h_m * h_m);
            m(a, b) = v;
            m(b, a) = v;
        }
    }
    return m;
}

// Hessian in (field units)/m^2; symmetric by construction.
template <class F>
Eigen::Matrix3d hessian(const F& f, const Vec3& p_um, const NumDiffOptions& opts = {}) {
    const double h = opts.resolve_step(p_um);
    const Eigen::Matrix3d m1 = hessian_once(f, p_um, h);
    if (!opts.richardson) return m1;
    const Eigen::Matrix3d m2 = hessian_once(f, p_um, 0.5 * h);
    return (4.0 * m2 - m1) / 3.0;
}

template <class F>
double laplacian_once(const F& f, const Vec3& p, double h_um) {
    const double h_m = h_um * um_to_m;
    const double f0 = f(p);
    double sum = 0.0;
    for (int a = 0; a < 3; ++a) {
        Vec3 hi = p, lo = p;
        hi[a] += h_um;
        lo[a] -= h_um;
        sum += f(hi) - 2.0 * f0 + f(lo);
    }
    return sum / (h_m * h_m);
}

// Laplacian in (field units)/m^2 with one Richardson step.
template <class F>
double laplacian(const F& f, const Vec3& p_um, const NumDiffOptions& opts = {}) {
    const double h = opts.resolve_step(p_um);
    const double l1 = laplacian_once(f, p_um, h);
    if (!opts.richardson) return l1;
    const double l2 = laplacian_once(f, p_um, 0.5 * h);
    return (4.0 * l2 - l1) / 3.0;
}

} // namespace numdiff
} // namespace iontrap

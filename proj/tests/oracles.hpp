#pragma once

// Independent numerical oracles used by the test suites. Everything here is
// deliberately built on different math than the library paths it checks:
// adaptive quadrature of the raw Green's-function integrands, brute-force
// time integration of the driven equation of motion, hand-rolled series.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "iontrap/vec.hpp"

namespace oracles {

// --- adaptive Simpson quadrature --------------------------------------------

inline double adaptive_simpson_impl(const std::function<double(double)>& f, double a, double b,
                                    double fa, double fm, double fb, double whole, double tol,
                                    int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_impl(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_impl(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 28) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_impl(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Iterated 2D quadrature over a rectangle [x0,x1] x [y0,y1].
inline double integrate_rect(const std::function<double(double, double)>& f, double x0, double x1,
                             double y0, double y1, double tol) {
    return adaptive_simpson(
        [&](double x) {
            return adaptive_simpson([&](double y) { return f(x, y); }, y0, y1, tol * 0.05);
        },
        x0, x1, tol);
}

// Iterated 2D quadrature over the triangle (a,b,c) via barycentric mapping.
inline double integrate_triangle(const std::function<double(iontrap::Vec3)>& f,
                                 const iontrap::Vec3& a, const iontrap::Vec3& b,
                                 const iontrap::Vec3& c, double tol) {
    const iontrap::Vec3 e1 = b - a;
    const iontrap::Vec3 e2 = c - a;
    const double jac = iontrap::norm(iontrap::cross(e1, e2)); // dA = jac du dv
    return adaptive_simpson(
        [&](double u) {
            return adaptive_simpson(
                [&](double v) { return f(a + e1 * u + e2 * v); }, 0.0, 1.0 - u, tol * 0.05);
        },
        0.0, 1.0, tol) * jac;
}

// --- half-space Green's-function integrals for the gapless plane ------------
//
// Patch at unit volt on a grounded plane: phi(r) = (z/2pi) Int dA'/R^3.
// Differentiating under the integral gives the field components.

struct PlanarOracle {
    double x0, x1, y0, y1; // rectangle patch bounds, µm

    double potential(const iontrap::Vec3& p, double tol = 1e-10) const {
        const double z = p.z;
        return z / (2.0 * M_PI) *
               integrate_rect(
                   [&](double xs, double ys) {
                       const double dx = p.x - xs;
                       const double dy = p.y - ys;
                       const double r2 = dx * dx + dy * dy + z * z;
                       return 1.0 / (r2 * std::sqrt(r2));
                   },
                   x0, x1, y0, y1, tol);
    }

    // V/µm per unit volt (caller converts to V/m).
    iontrap::Vec3 field(const iontrap::Vec3& p, double tol = 1e-12) const {
        const double z = p.z;
        auto moment = [&](auto weight) {
            return integrate_rect(
                [&](double xs, double ys) {
                    const double dx = p.x - xs;
                    const double dy = p.y - ys;
                    const double r2 = dx * dx + dy * dy + z * z;
                    const double r = std::sqrt(r2);
                    return weight(dx, dy, r2, r);
                },
                x0, x1, y0, y1, tol);
        };
        const double ex = 3.0 * z / (2.0 * M_PI) *
                          moment([](double dx, double, double r2, double r) {
                              return dx / (r2 * r2 * r);
                          });
        const double ey = 3.0 * z / (2.0 * M_PI) *
                          moment([](double, double dy, double r2, double r) {
                              return dy / (r2 * r2 * r);
                          });
        const double ez = 1.0 / (2.0 * M_PI) *
                          moment([&](double, double, double r2, double r) {
                              return 3.0 * z * z / (r2 * r2 * r) - 1.0 / (r2 * r);
                          });
        return {ex, ey, ez};
    }
};

// --- single-layer kernel over a triangle (for the BEM panel integrals) ------

inline double triangle_single_layer_potential(const iontrap::Vec3& a, const iontrap::Vec3& b,
                                              const iontrap::Vec3& c, const iontrap::Vec3& r,
                                              double tol = 1e-10) {
    return integrate_triangle(
        [&](iontrap::Vec3 y) { return 1.0 / iontrap::norm(r - y); }, a, b, c, tol);
}

inline iontrap::Vec3 triangle_single_layer_field(const iontrap::Vec3& a, const iontrap::Vec3& b,
                                                 const iontrap::Vec3& c, const iontrap::Vec3& r,
                                                 double tol = 1e-11) {
    iontrap::Vec3 out;
    for (int k = 0; k < 3; ++k) {
        out[k] = integrate_triangle(
            [&](iontrap::Vec3 y) {
                const iontrap::Vec3 d = r - y;
                const double rn = iontrap::norm(d);
                return d[k] / (rn * rn * rn);
            },
            a, b, c, tol);
    }
    return out;
}

// --- sphere-above-plane capacitance (image-charge series) -------------------
//
// Grounded plane at z = 0, sphere of radius R centered at height d:
//   C = 4 pi eps0 R sinh(alpha) Sum_{n>=1} 1/sinh(n alpha),  cosh(alpha) = d/R.
inline double sphere_plane_capacitance_factor(double radius, double height) {
    const double alpha = std::acosh(height / radius);
    double sum = 0.0;
    for (int n = 1; n < 200; ++n) {
        const double term = 1.0 / std::sinh(n * alpha);
        sum += term;
        if (term < 1e-15 * sum) break;
    }
    return radius * std::sinh(alpha) * sum; // multiply by 4 pi eps0 for farads
}

// --- driven-motion integrator (Floquet oracle) -------------------------------
//
// Integrates m x'' = qE(x, t) for E(x, t) = -G x cos(Omega t) (ideal linear
// quadrupole) with classical RK4 and extracts the secular frequency from the
// zero crossings of x(t). Independent of every pseudopotential code path.
struct QuadrupoleFloquet {
    double charge;  // C
    double mass;    // kg
    double gradient; // V/m^2
    double omega_rf; // rad/s

    double secular_frequency(double x0 = 1e-6, int rf_periods = 2000,
                             int steps_per_period = 400) const {
        const double dt = (2.0 * M_PI / omega_rf) / steps_per_period;
        double x = x0;
        double v = 0.0;
        double t = 0.0;
        auto accel = [&](double xx, double tt) {
            return -(charge / mass) * gradient * xx * std::cos(omega_rf * tt);
        };
        std::vector<double> crossings;
        double prev_x = x;
        double prev_t = t;
        const long nsteps = static_cast<long>(rf_periods) * steps_per_period;
        for (long i = 0; i < nsteps; ++i) {
            const double k1x = v, k1v = accel(x, t);
            const double k2x = v + 0.5 * dt * k1v, k2v = accel(x + 0.5 * dt * k1x, t + 0.5 * dt);
            const double k3x = v + 0.5 * dt * k2v, k3v = accel(x + 0.5 * dt * k2x, t + 0.5 * dt);
            const double k4x = v + dt * k3v, k4v = accel(x + dt * k3x, t + dt);
            x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            t += dt;
            if ((prev_x > 0.0) != (x > 0.0)) {
                // Linear interpolation of the crossing time.
                crossings.push_back(prev_t + (t - prev_t) * prev_x / (prev_x - x));
            }
            prev_x = x;
            prev_t = t;
        }
        if (crossings.size() < 6) return 0.0;
        // Average half-period over the full run; crossings.front()..back()
        // spans (n-1) half-periods.
        const double half_period =
            (crossings.back() - crossings.front()) / double(crossings.size() - 1);
        return M_PI / half_period;
    }
};

// Mathieu characteristic exponent for a = 0 via the monodromy matrix of
// x'' + (q_m/ ... ) -- in physical time: x'' = -(q_m Omega^2/2) cos(Omega t) x.
// Returns the secular angular frequency nu*Omega/2 with cos(pi nu) from the
// trace of the one-period transfer matrix.
inline double mathieu_secular_frequency(double q_m, double omega_rf, int steps = 200000) {
    const double period = 2.0 * M_PI / omega_rf;
    const double dt = period / steps;
    auto accel = [&](double x, double t) {
        return -0.5 * q_m * omega_rf * omega_rf * std::cos(omega_rf * t) * x;
    };
    // Two fundamental solutions.
    double x1 = 1.0, v1 = 0.0, x2 = 0.0, v2 = 1.0, t = 0.0;
    for (int i = 0; i < steps; ++i) {
        auto step = [&](double& x, double& v) {
            const double k1x = v, k1v = accel(x, t);
            const double k2x = v + 0.5 * dt * k1v, k2v = accel(x + 0.5 * dt * k1x, t + 0.5 * dt);
            const double k3x = v + 0.5 * dt * k2v, k3v = accel(x + 0.5 * dt * k2x, t + 0.5 * dt);
            const double k4x = v + dt * k3v, k4v = accel(x + dt * k3x, t + dt);
            x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        };
        const double t0 = t;
        step(x1, v1);
        t = t0;
        step(x2, v2);
        t = t0 + dt;
    }
    const double half_trace = 0.5 * (x1 + v2);
    if (std::abs(half_trace) > 1.0) return 0.0; // unstable
    const double nu = std::acos(half_trace) / M_PI; // in units of Omega/2
    return nu * omega_rf / 2.0;
}

} // namespace oracles

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "iontrap/constants.hpp"
#include "iontrap/errors.hpp"
#include "iontrap/field_basis.hpp"
#include "iontrap/field_grid.hpp"
#include "iontrap/layout.hpp"
#include "iontrap/numdiff.hpp"

namespace iontrap {

struct PseudoParams {
    IonSpecies species;
    DriveConfig drive;
};

// Pseudopotential energy q*Phi_pp in eV for a given RF field amplitude:
//   q^2 |E|^2 / (4 m Omega_rf^2)
inline double pseudopotential(double e_amplitude_V_m, const PseudoParams& params) {
    const double q = params.species.charge_C();
    const double m = params.species.mass_kg();
    const double omega = params.drive.rf_omega;
    const double u_joule = q * q * e_amplitude_V_m * e_amplitude_V_m / (4.0 * m * omega * omega);
    return u_joule / constants::electron_volt;
}

inline double pseudopotential(const Vec3& e_amplitude, const PseudoParams& params) {
    return pseudopotential(norm(e_amplitude), params);
}

// Inverse map: the field amplitude that produces a given q*Phi_pp (eV).
inline double field_for_pseudopotential(double qphi_ev, const PseudoParams& params) {
    const double q = params.species.charge_C();
    const double m = params.species.mass_kg();
    const double omega = params.drive.rf_omega;
    return std::sqrt(4.0 * m * omega * omega * qphi_ev * constants::electron_volt) / q;
}

// Scalar field adapter: position (µm) -> q*Phi_pp (eV).
using PseudoFieldFn = std::function<double(const Vec3&)>;

inline PseudoFieldFn make_pseudo_field(const FieldBasis& basis, const PseudoParams& params) {
    return [&basis, params](const Vec3& p_um) {
        return pseudopotential(basis.rf_field_amplitude(params.drive, p_um), params);
    };
}

// Trilinear interpolation over a cached grid; used for coarse seeding.
inline PseudoFieldFn make_pseudo_field(const FieldGrid& grid, const PseudoParams& params) {
    FieldGrid g = grid;
    if (g.qphi_ev.empty()) {
        g.qphi_ev.resize(g.e_field.size());
        for (std::size_t i = 0; i < g.e_field.size(); ++i)
            g.qphi_ev[i] = pseudopotential(g.e_field[i], params);
    }
    return [g](const Vec3& p_um) {
        const auto& s = g.spec;
        double fx[3];
        int ix[3];
        for (int a = 0; a < 3; ++a) {
            if (s.counts[a] == 1) {
                ix[a] = 0;
                fx[a] = 0.0;
                continue;
            }
            const double t = (p_um[a] - s.origin_um[a]) / s.spacing_um[a];
            if (t < 0.0 || t > s.counts[a] - 1)
                throw domain_error("grid pseudopotential: point outside lattice");
            ix[a] = std::min(int(t), s.counts[a] - 2);
            fx[a] = t - ix[a];
        }
        double u = 0.0;
        for (int dx = 0; dx < 2; ++dx) {
            for (int dy = 0; dy < 2; ++dy) {
                for (int dz = 0; dz < 2; ++dz) {
                    const double w = (dx ? fx[0] : 1.0 - fx[0]) * (dy ? fx[1] : 1.0 - fx[1]) *
                                     (dz ? fx[2] : 1.0 - fx[2]);
                    if (w == 0.0) continue;
                    u += w * g.qphi_ev[g.index(std::min(ix[0] + dx, s.counts[0] - 1),
                                               std::min(ix[1] + dy, s.counts[1] - 1),
                                               std::min(ix[2] + dz, s.counts[2] - 1))];
                }
            }
        }
        return u;
    };
}

struct TrapSite {
    Vec3 position_um;
    std::array<double, 3> freq_hz{};       // principal secular frequencies, ascending
    std::array<Vec3, 3> axes{};            // matching orthonormal axes
    std::array<double, 3> q{};             // q_i = 2 sqrt(2) w_i / Omega
    double depth_ev = 0.0;
    Vec3 escape_direction{};
    bool depth_boundary_limited = false;
    double confinement_ev_m2 = 0.0;        // C = div grad qPhi_pp
};

struct MinimizeOptions {
    int max_iterations = 120;
    double gradient_tol_ev_m = 1e-3;
    NumDiffOptions diff{};
};

// Newton descent with backtracking from a seed; the pseudopotential is
// smooth, so this converges in a handful of steps from any sane seed.
template <class F>
Vec3 find_minimum(const F& u, const Vec3& seed_um, const MinimizeOptions& opts = {}) {
    Vec3 p = seed_um;
    double up = u(p);
    for (int it = 0; it < opts.max_iterations; ++it) {
        const Vec3 g = numdiff::gradient(u, p, opts.diff);
        if (norm(g) < opts.gradient_tol_ev_m) {
            const Eigen::Matrix3d h = numdiff::hessian(u, p, opts.diff);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h);
            if (eig.eigenvalues()(0) <= 0.0)
                throw convergence_error(
                    "find_minimum: converged to a saddle or flat point, not a minimum");
            return p;
        }
        const Eigen::Matrix3d h = numdiff::hessian(u, p, opts.diff);
        Eigen::Vector3d gv(g.x, g.y, g.z);
        Eigen::Vector3d step;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h);
        if (eig.eigenvalues()(0) > 0.0) {
            step = -h.ldlt().solve(gv);
        } else {
            // Not convex here: steepest descent with a curvature-scaled step.
            const double scale = std::max(std::abs(eig.eigenvalues()(0)),
                                          std::abs(eig.eigenvalues()(2)));
            step = -gv / std::max(scale, 1e-30);
        }
        // Backtracking line search in µm space.
        Vec3 dir{step(0) * m_to_um, step(1) * m_to_um, step(2) * m_to_um};
        double t = 1.0;
        for (int ls = 0; ls < 40; ++ls) {
            const Vec3 cand = p + dir * t;
            double uc;
            try {
                uc = u(cand);
            } catch (const domain_error&) {
                t *= 0.5;
                continue;
            }
            if (uc < up || (uc == up && ls > 0)) {
                p = cand;
                up = uc;
                break;
            }
            t *= 0.5;
            if (ls == 39)
                throw convergence_error("find_minimum: line search stalled at gradient norm " +
                                        std::to_string(norm(g)) + " eV/m");
        }
    }
    throw convergence_error("find_minimum: no convergence within iteration budget");
}

// Principal-axis analysis at a verified minimum. Frequencies from the
// eigenvalues of the q*Phi_pp Hessian; q_i through the pure-RF secular
// relation q_i = 2 sqrt(2) w_i / Omega.
template <class F>
TrapSite harmonic_analysis(const F& u, const Vec3& position_um, const PseudoParams& params,
                           const NumDiffOptions& diff = {}) {
    TrapSite site;
    site.position_um = position_um;
    const Eigen::Matrix3d h = numdiff::hessian(u, position_um, diff); // eV/m^2
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h);
    const double m = params.species.mass_kg();
    for (int i = 0; i < 3; ++i) {
        const double lambda = eig.eigenvalues()(i);
        if (lambda <= 0.0)
            throw convergence_error("harmonic_analysis: non-positive curvature " +
                                    std::to_string(lambda) +
                                    " eV/m^2; position is not a minimum");
        const double omega = std::sqrt(lambda * constants::electron_volt / m);
        site.freq_hz[i] = omega / two_pi;
        site.q[i] = 2.0 * std::sqrt(2.0) * omega / params.drive.rf_omega;
        site.axes[i] = {eig.eigenvectors()(0, i), eig.eigenvectors()(1, i),
                        eig.eigenvectors()(2, i)};
    }
    site.confinement_ev_m2 = h.trace();
    return site;
}

// Laplacian of q*Phi_pp (eV/m^2): the total confinement C.
template <class F>
double total_confinement(const F& u, const Vec3& p_um, const NumDiffOptions& diff = {}) {
    return numdiff::laplacian(u, p_um, diff);
}

struct DepthResult {
    double depth_ev = 0.0;
    Vec3 escape_direction{};
    Vec3 barrier_position_um{};
    bool boundary_limited = false;
};

struct DepthOptions {
    double march_step_um = 2.0;
    MinimizeOptions newton{};
};

namespace detail {

// Largest value along a ray before u starts descending, golden-section
// refined. Returns false when u still rises at the region boundary.
template <class F>
bool ray_barrier(const F& u, const Vec3& origin, const Vec3& dir, const BoundingBox& region,
                 double step, double prune_above, double& out_value, Vec3& out_pos,
                 bool& hit_boundary) {
    double prev = u(origin);
    double t = step;
    double t_prev = 0.0;
    hit_boundary = false;
    while (true) {
        const Vec3 p = origin + dir * t;
        if (!region.contains(p)) {
            hit_boundary = true;
            out_value = prev;
            out_pos = origin + dir * t_prev;
            return false;
        }
        const double v = u(p);
        if (v < prev) {
            // Bracket [t-2s, t] around the crest; refine by golden section.
            double a = std::max(0.0, t_prev - step);
            double b = t;
            const double gr = 0.61803398874989484820;
            double c = b - gr * (b - a);
            double d = a + gr * (b - a);
            double fc = u(origin + dir * c);
            double fd = u(origin + dir * d);
            for (int it = 0; it < 60 && (b - a) > 1e-4 * step; ++it) {
                if (fc > fd) {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - gr * (b - a);
                    fc = u(origin + dir * c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + gr * (b - a);
                    fd = u(origin + dir * d);
                }
            }
            const double tm = 0.5 * (a + b);
            out_pos = origin + dir * tm;
            out_value = u(out_pos);
            return true;
        }
        prev = v;
        t_prev = t;
        t += step;
        if (prev > prune_above) {
            // Already higher than the best barrier seen; this direction
            // cannot host the lowest saddle.
            out_value = prev;
            out_pos = origin + dir * t_prev;
            hit_boundary = true;
            return false;
        }
    }
}

} // namespace detail

// Depth = lowest escape barrier relative to the site, scanned along the
// principal axes plus a 26-direction sweep, then Newton-polished toward the
// true saddle when one exists.
template <class F>
DepthResult trap_depth(const F& u, const TrapSite& site, const BoundingBox& region,
                       const DepthOptions& opts = {}) {
    const double u0 = u(site.position_um);
    std::vector<Vec3> dirs;
    for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dz = -1; dz <= 1; ++dz) {
                if (!dx && !dy && !dz) continue;
                dirs.push_back(normalized(Vec3{double(dx), double(dy), double(dz)}));
            }
    for (const auto& ax : site.axes) {
        dirs.push_back(ax);
        dirs.push_back(-ax);
    }

    DepthResult best;
    best.depth_ev = std::numeric_limits<double>::infinity();
    bool found_any = false;
    for (const auto& dir : dirs) {
        double value;
        Vec3 pos;
        bool boundary;
        const double prune = std::isfinite(best.depth_ev)
                                 ? u0 + best.depth_ev
                                 : std::numeric_limits<double>::infinity();
        const bool crest = detail::ray_barrier(u, site.position_um, dir, region,
                                               opts.march_step_um, prune, value, pos, boundary);
        if (!crest && !boundary) continue;
        const double barrier = value - u0;
        if (barrier < best.depth_ev) {
            best.depth_ev = barrier;
            best.escape_direction = dir;
            best.barrier_position_um = pos;
            best.boundary_limited = !crest;
            found_any = true;
        }
    }
    if (!found_any) throw convergence_error("trap_depth: no escape direction scanned");

    if (!best.boundary_limited) {
        // Newton toward the stationary point of the barrier crest.
        Vec3 p = best.barrier_position_um;
        for (int it = 0; it < opts.newton.max_iterations; ++it) {
            const Vec3 g = numdiff::gradient(u, p, opts.newton.diff);
            if (norm(g) < opts.newton.gradient_tol_ev_m) break;
            const Eigen::Matrix3d h = numdiff::hessian(u, p, opts.newton.diff);
            const Eigen::Vector3d step = -h.fullPivLu().solve(Eigen::Vector3d(g.x, g.y, g.z));
            const Vec3 cand = p + Vec3{step(0), step(1), step(2)} * m_to_um;
            if (!region.contains(cand) || norm(cand - p) > 20.0 * opts.march_step_um) break;
            p = cand;
        }
        if (region.contains(p)) {
            const Eigen::Matrix3d h = numdiff::hessian(u, p, opts.newton.diff);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h);
            int negatives = 0;
            for (int i = 0; i < 3; ++i)
                if (eig.eigenvalues()(i) < 0.0) ++negatives;
            const double refined = u(p) - u0;
            if (negatives == 1 && refined <= best.depth_ev + 1e-12 && refined > 0.0) {
                best.depth_ev = refined;
                best.barrier_position_um = p;
            }
        }
    }
    return best;
}

inline nlohmann::ordered_json trap_site_report(const TrapSite& site) {
    nlohmann::ordered_json j;
    j["position_um"] = {site.position_um.x, site.position_um.y, site.position_um.z};
    j["freq_hz"] = {site.freq_hz[0], site.freq_hz[1], site.freq_hz[2]};
    j["axes"] = {{site.axes[0].x, site.axes[0].y, site.axes[0].z},
                 {site.axes[1].x, site.axes[1].y, site.axes[1].z},
                 {site.axes[2].x, site.axes[2].y, site.axes[2].z}};
    j["q"] = {site.q[0], site.q[1], site.q[2]};
    j["depth_ev"] = site.depth_ev;
    j["confinement_ev_m2"] = site.confinement_ev_m2;
    return j;
}

} // namespace iontrap

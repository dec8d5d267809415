#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "iontrap/constants.hpp"
#include "iontrap/errors.hpp"
#include "iontrap/numdiff.hpp"
#include "iontrap/pseudo.hpp"

namespace iontrap {

enum class PathKind { MinimumPath, CTCPath };

struct PathSample {
    double x_um = 0.0;
    double y_um = 0.0;
    double z_um = 0.0;
    double qphi_ev = 0.0;
    double confinement_ev_m2 = 0.0;
    double height_um = 0.0; // height above the z = 0 electrode surface
};

struct TransportPath {
    PathKind kind = PathKind::MinimumPath;
    std::vector<PathSample> samples; // strictly increasing in x
    double c_target_ev_m2 = 0.0;     // CTC paths only
    std::string truncation_reason;   // nonempty when the path ended early
};

struct PathOptions {
    double z_min_um = 2.0;
    double z_max_um = 250.0;
    double coarse_step_um = 2.0;   // transverse scan resolution
    double seed_window_um = 15.0;  // continuity window around the previous z
    double branch_jump_um = 5.0;   // larger CTC root jumps abort
    double solve_tol_um = 1e-6;
    NumDiffOptions diff{};
};

namespace detail {

// Golden-section minimum of f over [a, b].
inline double golden_min(const std::function<double(double)>& f, double a, double b, double tol) {
    const double gr = 0.61803398874989484820;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Bisection on a bracketing interval.
inline double bisect(const std::function<double(double)>& f, double a, double b, double fa,
                     double tol) {
    double fb = f(b);
    (void)fb;
    while (b - a > tol) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fa <= 0.0) == (fm <= 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

// x sample set: ascending, inclusive of both ends.
inline std::vector<double> x_samples(double x_min, double x_max, double dx) {
    if (dx <= 0.0) throw domain_error("path sampling step must be positive");
    if (x_max < x_min) std::swap(x_min, x_max);
    std::vector<double> xs;
    const int n = int(std::round((x_max - x_min) / dx));
    xs.reserve(std::size_t(n) + 1);
    for (int i = 0; i <= n; ++i) xs.push_back(x_min + i * dx);
    if (xs.back() < x_max - 1e-9) xs.push_back(x_max);
    return xs;
}

} // namespace detail

// Transverse pseudopotential-minimum path in the y = 0 plane: a 1D minimum
// in z at each x, seeded by continuity from the previous sample. Traversal
// starts at the max-x end (the linear-region side), so a reversed x range
// yields the same point set.
template <class F>
TransportPath minimum_path(const F& u, double x_min_um, double x_max_um, double dx_um,
                           const PathOptions& opts = {}) {
    const auto xs = detail::x_samples(x_min_um, x_max_um, dx_um);
    TransportPath path;
    path.kind = PathKind::MinimumPath;

    double seed_lo = opts.z_min_um;
    double seed_hi = opts.z_max_um;
    bool have_seed = false;
    double prev_z = 0.0;

    std::vector<PathSample> reversed;
    for (std::size_t k = xs.size(); k-- > 0;) {
        const double x = xs[k];
        auto uz = [&](double z) { return u(Vec3{x, 0.0, z}); };
        double lo = have_seed ? std::max(opts.z_min_um, prev_z - opts.seed_window_um) : seed_lo;
        double hi = have_seed ? std::min(opts.z_max_um, prev_z + opts.seed_window_um) : seed_hi;

        // Coarse bracket of the transverse minimum.
        double best_z = lo;
        double best_u = uz(lo);
        for (double z = lo + opts.coarse_step_um; z <= hi + 1e-12; z += opts.coarse_step_um) {
            const double v = uz(z);
            if (v < best_u) {
                best_u = v;
                best_z = z;
            }
        }
        const double bracket = 1.5 * opts.coarse_step_um;
        if (best_z <= lo + 1e-12 || best_z >= hi - 1e-12) {
            if (!have_seed)
                throw convergence_error("minimum_path: no transverse minimum inside the scan "
                                        "window at x = " + std::to_string(x) + " um");
            path.truncation_reason = "transverse minimum vanished at x = " + std::to_string(x) +
                                     " um (barrier-free escape)";
            break;
        }
        const double z = detail::golden_min(uz, std::max(lo, best_z - bracket),
                                            std::min(hi, best_z + bracket), opts.solve_tol_um);

        PathSample s;
        s.x_um = x;
        s.y_um = 0.0;
        s.z_um = z;
        s.height_um = z;
        s.qphi_ev = uz(z);
        s.confinement_ev_m2 = numdiff::laplacian(u, Vec3{x, 0.0, z}, opts.diff);
        reversed.push_back(s);
        prev_z = z;
        have_seed = true;
    }
    path.samples.assign(reversed.rbegin(), reversed.rend());
    return path;
}

// Constant-total-confinement path: at each x, the z root of
// laplacian(qPhi_pp)(x, 0, z) = C_target, branch-tracked by continuity from
// the linear-region (max-x) end. Root jumps beyond the branch window abort
// rather than silently hopping branches.
template <class F>
TransportPath ctc_path(const F& u, const PseudoParams& /*params*/, double c_target_ev_m2,
                       double x_min_um, double x_max_um, double dx_um,
                       const PathOptions& opts = {}) {
    if (c_target_ev_m2 <= 0.0) throw domain_error("ctc_path: C target must be positive");
    const auto xs = detail::x_samples(x_min_um, x_max_um, dx_um);
    TransportPath path;
    path.kind = PathKind::CTCPath;
    path.c_target_ev_m2 = c_target_ev_m2;

    auto confinement = [&](double x, double z) {
        return numdiff::laplacian(u, Vec3{x, 0.0, z}, opts.diff);
    };

    // All brackets of C(z) = C_target on a z scan.
    auto scan_roots = [&](double x, double lo, double hi, double step) {
        std::vector<std::pair<double, double>> brackets;
        double zp = lo;
        double fp = confinement(x, zp) - c_target_ev_m2;
        for (double z = lo + step; z <= hi + 1e-12; z += step) {
            const double f = confinement(x, z) - c_target_ev_m2;
            if ((fp <= 0.0) != (f <= 0.0)) brackets.emplace_back(zp, z);
            zp = z;
            fp = f;
        }
        return brackets;
    };
    auto refine_root = [&](double x, std::pair<double, double> bracket) {
        auto f = [&](double z) { return confinement(x, z) - c_target_ev_m2; };
        return detail::bisect(f, bracket.first, bracket.second, f(bracket.first),
                              opts.solve_tol_um);
    };

    bool have_prev = false;
    double prev_z = 0.0;
    std::vector<PathSample> reversed;
    for (std::size_t k = xs.size(); k-- > 0;) {
        const double x = xs[k];
        double z_root = 0.0;
        if (!have_prev) {
            // Start on the branch holding the transverse pseudopotential
            // minimum at the linear-region end.
            auto uz = [&](double z) { return u(Vec3{x, 0.0, z}); };
            double best_z = opts.z_min_um;
            double best_u = uz(best_z);
            for (double z = opts.z_min_um; z <= opts.z_max_um + 1e-12; z += opts.coarse_step_um) {
                const double v = uz(z);
                if (v < best_u) {
                    best_u = v;
                    best_z = z;
                }
            }
            const auto brackets = scan_roots(x, opts.z_min_um, opts.z_max_um,
                                             0.5 * opts.coarse_step_um);
            if (brackets.empty()) {
                double cmax = -std::numeric_limits<double>::infinity();
                for (double z = opts.z_min_um; z <= opts.z_max_um; z += opts.coarse_step_um)
                    cmax = std::max(cmax, confinement(x, z));
                throw convergence_error(
                    "ctc_path: confinement never reaches C_target at x = " + std::to_string(x) +
                    " um; maximum attainable C = " + std::to_string(cmax) + " eV/m^2");
            }
            double best_gap = std::numeric_limits<double>::infinity();
            for (const auto& b : brackets) {
                const double z = refine_root(x, b);
                const double gap = std::abs(z - best_z);
                // Nearest root to the trap height; ties resolve upward.
                if (gap < best_gap - 1e-9 ||
                    (std::abs(gap - best_gap) <= 1e-9 && z > z_root)) {
                    best_gap = gap;
                    z_root = z;
                }
            }
        } else {
            const double lo = std::max(opts.z_min_um, prev_z - opts.branch_jump_um);
            const double hi = std::min(opts.z_max_um, prev_z + opts.branch_jump_um);
            const auto brackets = scan_roots(x, lo, hi, std::min(0.5, opts.branch_jump_um / 8.0));
            if (brackets.empty()) {
                // Diagnose: any root elsewhere means a branch jump, none
                // means the target is unattainable here.
                const auto wide = scan_roots(x, opts.z_min_um, opts.z_max_um,
                                             0.5 * opts.coarse_step_um);
                if (!wide.empty()) {
                    const double z_far = refine_root(x, wide.front());
                    throw convergence_error(
                        "ctc_path: branch ambiguity at x = " + std::to_string(x) +
                        " um: nearest root jumps " + std::to_string(std::abs(z_far - prev_z)) +
                        " um (> " + std::to_string(opts.branch_jump_um) + " um)");
                }
                double cmax = -std::numeric_limits<double>::infinity();
                for (double z = opts.z_min_um; z <= opts.z_max_um; z += opts.coarse_step_um)
                    cmax = std::max(cmax, confinement(x, z));
                throw convergence_error(
                    "ctc_path: confinement never reaches C_target on x in [" +
                    std::to_string(xs.front()) + ", " + std::to_string(x) +
                    "] um; maximum attainable C = " + std::to_string(cmax) + " eV/m^2");
            }
            double best_gap = std::numeric_limits<double>::infinity();
            for (const auto& b : brackets) {
                const double z = refine_root(x, b);
                if (std::abs(z - prev_z) < best_gap) {
                    best_gap = std::abs(z - prev_z);
                    z_root = z;
                }
            }
        }

        PathSample s;
        s.x_um = x;
        s.y_um = 0.0;
        s.z_um = z_root;
        s.height_um = z_root;
        s.qphi_ev = u(Vec3{x, 0.0, z_root});
        s.confinement_ev_m2 = confinement(x, z_root);
        reversed.push_back(s);
        prev_z = z_root;
        have_prev = true;
    }
    path.samples.assign(reversed.rbegin(), reversed.rend());
    return path;
}

struct PathMetrics {
    double max_barrier_ev = 0.0;          // max qPhi - linear-region qPhi
    double min_confinement_fraction = 1.0; // min C / linear-region C
    double min_height_um = 0.0;
    double max_height_um = 0.0;
    double max_height_deviation_um = 0.0; // vs companion path, when given
};

inline PathMetrics path_metrics(const TransportPath& path,
                                const TransportPath* companion = nullptr) {
    if (path.samples.empty()) throw domain_error("path_metrics: empty path");
    PathMetrics m;
    const PathSample& linear = path.samples.back(); // max-x = linear-region end
    m.min_height_um = m.max_height_um = path.samples.front().height_um;
    double qmax = -std::numeric_limits<double>::infinity();
    double cmin = std::numeric_limits<double>::infinity();
    for (const auto& s : path.samples) {
        qmax = std::max(qmax, s.qphi_ev);
        cmin = std::min(cmin, s.confinement_ev_m2);
        m.min_height_um = std::min(m.min_height_um, s.height_um);
        m.max_height_um = std::max(m.max_height_um, s.height_um);
    }
    m.max_barrier_ev = qmax - linear.qphi_ev;
    m.min_confinement_fraction =
        linear.confinement_ev_m2 != 0.0 ? cmin / linear.confinement_ev_m2 : 1.0;
    if (companion) {
        if (companion->samples.size() != path.samples.size())
            throw domain_error("path_metrics: companion path has a different sample set");
        for (std::size_t i = 0; i < path.samples.size(); ++i) {
            if (std::abs(companion->samples[i].x_um - path.samples[i].x_um) > 1e-9)
                throw domain_error("path_metrics: companion path has a different x grid");
            m.max_height_deviation_um =
                std::max(m.max_height_deviation_um,
                         std::abs(companion->samples[i].height_um - path.samples[i].height_um));
        }
    }
    return m;
}

// Micromotion amplitude (m) from a residual pseudopotential (eV):
//   x_mm = sqrt(4 qPhi_pp / (m Omega_rf^2)).
inline double micromotion_amplitude(double qphi_ev, const PseudoParams& params) {
    if (qphi_ev < 0.0) throw domain_error("micromotion_amplitude: qPhi_pp must be >= 0");
    const double m = params.species.mass_kg();
    const double omega = params.drive.rf_omega;
    return std::sqrt(4.0 * qphi_ev * constants::electron_volt / (m * omega * omega));
}

struct PathOverlap {
    double max_separation_um = 0.0;
    double rms_separation_um = 0.0;
};

inline PathOverlap path_overlap(const TransportPath& a, const TransportPath& b) {
    if (a.samples.size() != b.samples.size())
        throw domain_error("path_overlap: paths have different sample counts");
    PathOverlap out;
    double sq = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        if (std::abs(a.samples[i].x_um - b.samples[i].x_um) > 1e-9)
            throw domain_error("path_overlap: paths do not share the x sample set");
        const double d = std::abs(a.samples[i].z_um - b.samples[i].z_um);
        out.max_separation_um = std::max(out.max_separation_um, d);
        sq += d * d;
    }
    out.rms_separation_um = std::sqrt(sq / double(a.samples.size()));
    return out;
}

struct TransportPlan {
    TransportPath path;
    std::vector<double> speed_m_s; // per path sample

    static TransportPlan constant_speed(TransportPath p, double v) {
        if (v <= 0.0) throw domain_error("transport plan: speed must be positive");
        TransportPlan plan;
        plan.speed_m_s.assign(p.samples.size(), v);
        plan.path = std::move(p);
        return plan;
    }
};

inline void write_path_csv(const TransportPath& path, std::ostream& out) {
    out << "x_um,z_um,height_um,qphi_ev,confinement_ev_m2\n";
    char buf[192];
    for (const auto& s : path.samples) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g\n", s.x_um, s.z_um, s.height_um,
                      s.qphi_ev, s.confinement_ev_m2);
        out << buf;
    }
}

// Reads a path export back; heating analysis runs off these files so it
// works on any exported path, synthetic fixtures included.
inline TransportPath read_path_csv(std::istream& in, PathKind kind = PathKind::CTCPath) {
    TransportPath path;
    path.kind = kind;
    std::string line;
    if (!std::getline(in, line) || line.rfind("x_um,z_um,height_um,qphi_ev,confinement_ev_m2", 0) != 0)
        throw parse_error("path file: missing or wrong header line");
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        PathSample s;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &s.x_um, &s.z_um, &s.height_um,
                        &s.qphi_ev, &s.confinement_ev_m2) != 5)
            throw parse_error("path file: malformed row '" + line + "'");
        path.samples.push_back(s);
    }
    if (path.samples.empty()) throw parse_error("path file: no samples");
    return path;
}

} // namespace iontrap

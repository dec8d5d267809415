#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iontrap/constants.hpp"
#include "iontrap/errors.hpp"
#include "iontrap/pseudo.hpp"

namespace iontrap {

// Normalized polynomial expansion of q*Phi_pp about a trap site:
//
//   q*Phi_pp = (1/2) m w_z^2 * Sum C_ijk x^i y^j z^k,
//
// displacements in µm, C_ijk in µm^(2-i-j-k), C_002 = 1 by construction of
// w_z. The expansion starts at total degree 2; mixed terms participate when
// any single index is >= 2 (degree-1x1x1 terms are not part of the model).
struct AnharmonicFit {
    Vec3 site_position_um;
    double omega_z = 0.0;    // rad/s, the normalization frequency
    int max_order = 4;
    double window_um = 5.0;  // half-width per axis
    std::map<std::array<int, 3>, double> coeffs; // (i,j,k) -> C_ijk
    double residual_rms_ev = 0.0;
    double normalization_discrepancy = 0.0; // |fitted C_002 - 1|

    double coeff(int i, int j, int k) const {
        const auto it = coeffs.find({i, j, k});
        if (it == coeffs.end())
            throw fit_error("anharmonic fit does not contain C_" + std::to_string(i) +
                            std::to_string(j) + std::to_string(k));
        return it->second;
    }
};

struct FitOptions {
    int max_order = 4;
    double window_um = 5.0;
    int stencil = 21; // points per axis
    double condition_limit = 1e10;
};

namespace detail {

inline std::vector<std::array<int, 3>> fit_basis_terms(int max_order) {
    std::vector<std::array<int, 3>> terms;
    for (int total = 2; total <= max_order; ++total) {
        for (int i = 0; i <= total; ++i) {
            for (int j = 0; j + i <= total; ++j) {
                const int k = total - i - j;
                if (std::max({i, j, k}) < 2) continue;
                terms.push_back({i, j, k});
            }
        }
    }
    return terms;
}

} // namespace detail

// Least-squares polynomial fit of the pseudopotential sampled on a cubic
// stencil around the site. The normalization uses w_z from the harmonic
// analysis (not the fit's own quadratic term); the discrepancy between the
// two is reported on the fit.
template <class F>
AnharmonicFit fit_expansion(const F& u, const TrapSite& site, const PseudoParams& params,
                            const FitOptions& opts = {}) {
    if (opts.stencil < 4) throw fit_error("fit_expansion: stencil too coarse");
    if (opts.max_order < 2) throw fit_error("fit_expansion: max order must be >= 2");

    // w_z = frequency along the principal axis closest to z.
    int zi = 0;
    double best = -1.0;
    for (int i = 0; i < 3; ++i) {
        const double a = std::abs(site.axes[i].z);
        if (a > best) {
            best = a;
            zi = i;
        }
    }
    const double omega_z = two_pi * site.freq_hz[zi];
    const double m = params.species.mass_kg();
    // eV per µm^2 normalization of the quadratic z term.
    const double scale =
        0.5 * m * omega_z * omega_z * um_to_m * um_to_m / constants::electron_volt;

    const auto terms = detail::fit_basis_terms(opts.max_order);
    const int n = opts.stencil;
    const std::size_t rows = std::size_t(n) * n * n;
    Eigen::MatrixXd design(rows, terms.size());
    Eigen::VectorXd target(rows);
    const double u0 = u(site.position_um);
    std::size_t r = 0;
    for (int ix = 0; ix < n; ++ix) {
        const double dx = -opts.window_um + 2.0 * opts.window_um * ix / (n - 1);
        for (int iy = 0; iy < n; ++iy) {
            const double dy = -opts.window_um + 2.0 * opts.window_um * iy / (n - 1);
            for (int iz = 0; iz < n; ++iz, ++r) {
                const double dz = -opts.window_um + 2.0 * opts.window_um * iz / (n - 1);
                target(r) = (u(site.position_um + Vec3{dx, dy, dz}) - u0) / scale;
                for (std::size_t c = 0; c < terms.size(); ++c) {
                    design(r, c) = std::pow(dx, terms[c][0]) * std::pow(dy, terms[c][1]) *
                                   std::pow(dz, terms[c][2]);
                }
            }
        }
    }

    // Column scaling keeps the window's dynamic range out of the condition
    // number; the estimate reported below is for the scaled system.
    Eigen::VectorXd col_norm(terms.size());
    for (std::size_t c = 0; c < terms.size(); ++c) {
        col_norm(c) = design.col(c).norm();
        if (col_norm(c) <= 0.0)
            throw fit_error("fit_expansion: degenerate design column (window too small?)");
        design.col(c) /= col_norm(c);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    const Eigen::VectorXd diag = qr.matrixR().diagonal().cwiseAbs();
    const double cond = diag.maxCoeff() / std::max(diag.minCoeff(), 1e-300);
    if (cond > opts.condition_limit)
        throw fit_error("fit_expansion: ill-conditioned design matrix, condition estimate " +
                        std::to_string(cond) + " (enlarge the window or refine the grid)");
    Eigen::VectorXd sol = qr.solve(target);
    for (std::size_t c = 0; c < terms.size(); ++c) sol(c) /= col_norm(c);

    AnharmonicFit fit;
    fit.site_position_um = site.position_um;
    fit.omega_z = omega_z;
    fit.max_order = opts.max_order;
    fit.window_um = opts.window_um;
    for (std::size_t c = 0; c < terms.size(); ++c) fit.coeffs[terms[c]] = sol(c);

    Eigen::VectorXd residual = target;
    for (std::size_t c = 0; c < terms.size(); ++c) {
        design.col(c) *= col_norm(c); // undo scaling for the residual pass
        residual -= design.col(c) * sol(c);
    }
    fit.residual_rms_ev = std::sqrt(residual.squaredNorm() / double(rows)) * scale;
    fit.normalization_discrepancy = std::abs(fit.coeff(0, 0, 2) - 1.0);

    // Contract: the window must be small enough that the unmodelled residual
    // stays below 1 % of the quadratic term at the window edge.
    const double quad_edge_ev = scale * opts.window_um * opts.window_um;
    if (fit.residual_rms_ev > 0.01 * quad_edge_ev)
        throw fit_error("fit_expansion: residual " + std::to_string(fit.residual_rms_ev) +
                        " eV exceeds 1% of the quadratic term at the window edge; shrink the "
                        "window");
    return fit;
}

// Frequency-shift coefficients from the axial cubic and quartic terms:
//   alpha_2 = -15 C003^2 / 16 + 3 C004 / 4   [µm^-2]
//   alpha_3 = C003 * alpha_2                 [µm^-3]
struct ShiftCoeffs {
    double alpha2_per_um2 = 0.0;
    double alpha3_per_um3 = 0.0;
};

inline ShiftCoeffs shift_coeffs(const AnharmonicFit& fit) {
    const double c003 = fit.coeff(0, 0, 3);
    const double c004 = fit.coeff(0, 0, 4);
    ShiftCoeffs s;
    s.alpha2_per_um2 = -15.0 * c003 * c003 / 16.0 + 3.0 * c004 / 4.0;
    s.alpha3_per_um3 = c003 * s.alpha2_per_um2;
    return s;
}

inline ShiftCoeffs shift_coeffs(double c003, double c004) {
    ShiftCoeffs s;
    s.alpha2_per_um2 = -15.0 * c003 * c003 / 16.0 + 3.0 * c004 / 4.0;
    s.alpha3_per_um3 = c003 * s.alpha2_per_um2;
    return s;
}

// Amplitude-dependent trap frequency, truncated at the cubic shift order:
//   w(A) = w_z [1 + a2 A^2 + a3 A^3].
struct ShiftedFrequency {
    double freq_hz = 0.0;
    double fractional_shift = 0.0;
    bool extrapolated = false; // amplitude outside the fit window
};

inline ShiftedFrequency frequency_shift(double freq_z_hz, const ShiftCoeffs& coeffs,
                                        double amplitude_um, double window_um = 0.0) {
    ShiftedFrequency out;
    out.fractional_shift = coeffs.alpha2_per_um2 * amplitude_um * amplitude_um +
                           coeffs.alpha3_per_um3 * amplitude_um * amplitude_um * amplitude_um;
    out.freq_hz = freq_z_hz * (1.0 + out.fractional_shift);
    out.extrapolated = window_um > 0.0 && std::abs(amplitude_um) > window_um;
    return out;
}

// Table-style export: the coefficient rows the fit was asked for, one line
// per (i,j,k), with the aggregate size of everything else appended.
inline void write_fit_csv(const AnharmonicFit& fit, std::ostream& out) {
    static const std::array<std::array<int, 3>, 9> table_rows = {{{2, 0, 0},
                                                                  {2, 0, 1},
                                                                  {4, 0, 0},
                                                                  {0, 2, 0},
                                                                  {0, 2, 1},
                                                                  {0, 4, 0},
                                                                  {0, 0, 2},
                                                                  {0, 0, 3},
                                                                  {0, 0, 4}}};
    out << "i,j,k,C_ijk,units\n";
    char buf[160];
    double other_sq = 0.0;
    std::size_t other_n = 0;
    for (const auto& [ijk, value] : fit.coeffs) {
        const bool tabled =
            std::find(table_rows.begin(), table_rows.end(), ijk) != table_rows.end();
        if (!tabled) {
            other_sq += value * value;
            ++other_n;
        }
    }
    for (const auto& row : table_rows) {
        const auto it = fit.coeffs.find(row);
        if (it == fit.coeffs.end()) continue;
        const int degree = row[0] + row[1] + row[2];
        const std::string units =
            degree == 2 ? "1" : ("um^" + std::to_string(2 - degree));
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.9g,%s\n", row[0], row[1], row[2], it->second,
                      units.c_str());
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "# other_terms_rms,%.9g\n",
                  other_n ? std::sqrt(other_sq / double(other_n)) : 0.0);
    out << buf;
    std::snprintf(buf, sizeof buf, "# residual_rms_ev,%.9g\n", fit.residual_rms_ev);
    out << buf;
}

} // namespace iontrap

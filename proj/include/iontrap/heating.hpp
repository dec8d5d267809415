#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iontrap/constants.hpp"
#include "iontrap/errors.hpp"
#include "iontrap/pseudo.hpp"
#include "iontrap/transport.hpp"

namespace iontrap {

// RF voltage-noise level relative to the carrier, interpreted as a
// single-sided density per Hz at observations Omega_rf + omega_x. The dBc
// figure and the S_VN/V_rf^2 ratio interconvert exactly.
struct NoiseSpec {
    double dbc = -300.0;

    double ratio_per_hz() const { return std::pow(10.0, dbc / 10.0); }

    static NoiseSpec from_dbc(double dbc_value) { return NoiseSpec{dbc_value}; }
    static NoiseSpec from_ratio(double ratio) {
        if (ratio <= 0.0) throw domain_error("noise ratio must be positive");
        return NoiseSpec{10.0 * std::log10(ratio)};
    }
};

inline double dbc_to_ratio(double dbc) {
    if (!std::isfinite(dbc)) throw domain_error("dbc_to_ratio: input must be finite");
    return std::pow(10.0, dbc / 10.0);
}

// RF-noise heating rate (quanta/s):
//   ndot = q^4 / (16 m^3 Omega_rf^4 hbar w_x) * (dE^2/dx)^2 * S_VN/V_rf^2
inline double rf_heating_rate(double de2_dx_V2_m3, double omega_x, const NoiseSpec& noise,
                              const PseudoParams& params) {
    if (omega_x <= 0.0) throw domain_error("rf_heating_rate: omega_x must be positive");
    const double q = params.species.charge_C();
    const double m = params.species.mass_kg();
    const double w = params.drive.rf_omega;
    const double pre = std::pow(q, 4) /
                       (16.0 * m * m * m * std::pow(w, 4) * constants::hbar * omega_x);
    return pre * de2_dx_V2_m3 * de2_dx_V2_m3 * noise.ratio_per_hz();
}

struct HeatingSample {
    double x_um = 0.0;
    double qphi_ev = 0.0;
    double de2dx_si = 0.0; // V^2/m^3
    double ndot = 0.0;     // quanta/s
};

struct HeatingProfile {
    std::vector<HeatingSample> samples;
    double omega_x = 0.0; // rad/s
    NoiseSpec noise;
    PseudoParams params;

    double peak_ndot() const {
        double p = 0.0;
        for (const auto& s : samples) p = std::max(p, s.ndot);
        return p;
    }
    double peak_x_um() const {
        double p = 0.0, best = -1.0;
        for (const auto& s : samples)
            if (s.ndot > best) {
                best = s.ndot;
                p = s.x_um;
            }
        return p;
    }
};

// Position-resolved heating along a path. E^2(x) is reconstructed from the
// carried qPhi_pp samples through the pseudopotential relation, so the
// profile works on any path export, including synthetic fixtures; dE^2/dx
// uses nonuniform central differences along the path.
inline HeatingProfile heating_profile(const TransportPath& path, const NoiseSpec& noise,
                                      double omega_x, const PseudoParams& params,
                                      double max_spacing_um = 2.0) {
    const auto& ps = path.samples;
    if (ps.size() < 3) throw domain_error("heating_profile: path needs at least 3 samples");
    for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
        const double gap = ps[i + 1].x_um - ps[i].x_um;
        if (gap <= 0.0) throw domain_error("heating_profile: path x must increase strictly");
        if (gap > max_spacing_um + 1e-9)
            throw domain_error("heating_profile: sample spacing " + std::to_string(gap) +
                               " um too sparse for differentiation (max " +
                               std::to_string(max_spacing_um) + " um)");
    }
    const double m = params.species.mass_kg();
    const double q = params.species.charge_C();
    const double w = params.drive.rf_omega;
    // E^2 = 4 m Omega^2 (qPhi_pp J) / q^2.
    auto e2 = [&](double qphi_ev) {
        return 4.0 * m * w * w * qphi_ev * constants::electron_volt / (q * q);
    };

    HeatingProfile profile;
    profile.omega_x = omega_x;
    profile.noise = noise;
    profile.params = params;
    profile.samples.resize(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        double de2dx; // V^2/m^2 per metre of x
        if (i == 0) {
            de2dx = (e2(ps[1].qphi_ev) - e2(ps[0].qphi_ev)) /
                    ((ps[1].x_um - ps[0].x_um) * um_to_m);
        } else if (i + 1 == ps.size()) {
            de2dx = (e2(ps[i].qphi_ev) - e2(ps[i - 1].qphi_ev)) /
                    ((ps[i].x_um - ps[i - 1].x_um) * um_to_m);
        } else {
            const double h1 = (ps[i].x_um - ps[i - 1].x_um) * um_to_m;
            const double h2 = (ps[i + 1].x_um - ps[i].x_um) * um_to_m;
            const double fm = e2(ps[i - 1].qphi_ev);
            const double f0 = e2(ps[i].qphi_ev);
            const double fp = e2(ps[i + 1].qphi_ev);
            de2dx = (h1 * h1 * fp - h2 * h2 * fm + (h2 * h2 - h1 * h1) * f0) /
                    (h1 * h2 * (h1 + h2));
        }
        HeatingSample s;
        s.x_um = ps[i].x_um;
        s.qphi_ev = ps[i].qphi_ev;
        s.de2dx_si = de2dx;
        s.ndot = rf_heating_rate(de2dx, omega_x, noise, params);
        profile.samples[i] = s;
    }
    return profile;
}

// Round-trip motional excitation: trapezoidal integral of ndot/v over the
// forward pass, doubled for the return over the same path.
inline double round_trip_excitation(const HeatingProfile& profile, const TransportPlan& plan) {
    const auto& hs = profile.samples;
    const auto& ps = plan.path.samples;
    if (hs.size() != ps.size() || plan.speed_m_s.size() != ps.size())
        throw domain_error("round_trip_excitation: profile and plan must share the path");
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if (std::abs(hs[i].x_um - ps[i].x_um) > 1e-9)
            throw domain_error("round_trip_excitation: profile and plan x grids differ");
        if (plan.speed_m_s[i] <= 0.0)
            throw domain_error("round_trip_excitation: speeds must be positive");
    }
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < hs.size(); ++i) {
        const double dx_m = (hs[i + 1].x_um - hs[i].x_um) * um_to_m;
        const double fa = hs[i].ndot / plan.speed_m_s[i];
        const double fb = hs[i + 1].ndot / plan.speed_m_s[i + 1];
        integral += 0.5 * (fa + fb) * dx_m;
    }
    return 2.0 * integral;
}

// Surface-noise scaling between species/geometries:
//   ndot_t = (m_r/m_t) (w_r/w_t)^(1+gamma) (d_r/d_t)^beta ndot_r
struct ScalingInputs {
    double ref_mass_amu = 0.0;
    double ref_freq_hz = 0.0;
    double ref_distance_um = 0.0;
    double ref_rate = 0.0; // quanta/s
    double target_mass_amu = 0.0;
    double target_freq_hz = 0.0;
    double target_distance_um = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
};

inline double surface_scaling(const ScalingInputs& in) {
    for (double v : {in.ref_mass_amu, in.ref_freq_hz, in.ref_distance_um, in.ref_rate,
                     in.target_mass_amu, in.target_freq_hz, in.target_distance_um, in.gamma,
                     in.beta}) {
        if (!(v > 0.0)) throw domain_error("surface_scaling: all inputs must be positive");
    }
    return (in.ref_mass_amu / in.target_mass_amu) *
           std::pow(in.ref_freq_hz / in.target_freq_hz, 1.0 + in.gamma) *
           std::pow(in.ref_distance_um / in.target_distance_um, in.beta) * in.ref_rate;
}

inline void write_heating_csv(const HeatingProfile& profile, std::ostream& out) {
    out << "x_um,qphi_ev,de2dx_si,ndot_quanta_per_s\n";
    char buf[160];
    for (const auto& s : profile.samples) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g\n", s.x_um, s.qphi_ev, s.de2dx_si,
                      s.ndot);
        out << buf;
    }
}

inline nlohmann::ordered_json heating_summary(const HeatingProfile& profile,
                                              double total_round_trip_quanta) {
    nlohmann::ordered_json j;
    j["total_round_trip_quanta"] = total_round_trip_quanta;
    j["peak_ndot"] = profile.peak_ndot();
    j["peak_x_um"] = profile.peak_x_um();
    return j;
}

} // namespace iontrap

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "iontrap/pseudo.hpp"
#include "oracles.hpp"

using namespace iontrap;

namespace {

const IonSpecies yb = make_species("171Yb+", 171.0, 1);
const IonSpecies sr = make_species("88Sr+", 88.0, 1);

PseudoParams yb_params(double rf_volts = 190.0, double rf_hz = 44.3e6) {
    return PseudoParams{yb, make_drive(rf_volts, rf_hz)};
}

// Ideal 3D quadrupole amplitude: E = G (x, y, -2z) in SI, positions in µm.
auto quadrupole_field(double gradient_si, Vec3 center = {}) {
    return [gradient_si, center](const Vec3& p_um) {
        const Vec3 d = (p_um - center) * um_to_m;
        return Vec3{gradient_si * d.x, gradient_si * d.y, -2.0 * gradient_si * d.z};
    };
}

} // namespace

TEST_CASE("pseudopotential: zero field, scaling, and round-trip inversion") {
    const auto params = yb_params();
    CHECK(pseudopotential(0.0, params) == 0.0);

    // Quadratic in |E|, inverse-quadratic in the drive frequency.
    const double u1 = pseudopotential(1e5, params);
    CHECK(pseudopotential(2e5, params) == Catch::Approx(4.0 * u1));
    const auto params2 = PseudoParams{yb, make_drive(190.0, 2.0 * 44.3e6)};
    CHECK(pseudopotential(1e5, params2) == Catch::Approx(0.25 * u1));

    // Round-trip through the inverse map at the paper's residual value.
    const double target_ev = 5e-5;
    const double e_field = field_for_pseudopotential(target_ev, params);
    CHECK(pseudopotential(e_field, params) == Catch::Approx(target_ev).epsilon(1e-12));
}

TEST_CASE("pseudopotential mass law: qPhi and frequencies scale as 1/m") {
    const auto drive = make_drive(190.0, 44.3e6);
    const PseudoParams p_yb{yb, drive};
    const PseudoParams p_sr{sr, drive};
    const double e_field = 2.5e5;
    CHECK(pseudopotential(e_field, p_sr) / pseudopotential(e_field, p_yb) ==
          Catch::Approx(171.0 / 88.0).epsilon(1e-12));

    const double gradient = 1.0e9;
    auto u_yb = [&](const Vec3& p) { return pseudopotential(norm(quadrupole_field(gradient)(p)), p_yb); };
    auto u_sr = [&](const Vec3& p) { return pseudopotential(norm(quadrupole_field(gradient)(p)), p_sr); };
    const auto site_yb = harmonic_analysis(u_yb, {0, 0, 0}, p_yb, NumDiffOptions{.step_um = 1.0});
    const auto site_sr = harmonic_analysis(u_sr, {0, 0, 0}, p_sr, NumDiffOptions{.step_um = 1.0});
    CHECK(site_sr.freq_hz[0] / site_yb.freq_hz[0] == Catch::Approx(171.0 / 88.0).epsilon(1e-9));
}

TEST_CASE("drive-amplitude scaling law: qPhi ~ s^2, frequencies ~ s") {
    const double gradient = 8.0e8;
    const PseudoParams p1 = yb_params(100.0);
    // Scaling the drive voltage scales the quadrupole gradient linearly.
    auto u1 = [&](const Vec3& p) { return pseudopotential(norm(quadrupole_field(gradient)(p)), p1); };
    auto u2 = [&](const Vec3& p) {
        return pseudopotential(norm(quadrupole_field(3.0 * gradient)(p)), p1);
    };
    const Vec3 probe{2.0, -1.0, 1.5};
    CHECK(u2(probe) == Catch::Approx(9.0 * u1(probe)).epsilon(1e-12));
    const auto s1 = harmonic_analysis(u1, {0, 0, 0}, p1, NumDiffOptions{.step_um = 1.0});
    const auto s2 = harmonic_analysis(u2, {0, 0, 0}, p1, NumDiffOptions{.step_um = 1.0});
    CHECK(s2.freq_hz[2] == Catch::Approx(3.0 * s1.freq_hz[2]).epsilon(1e-9));
}

TEST_CASE("find_minimum: symmetric quadrupole converges to the symmetry center") {
    const auto params = yb_params();
    const Vec3 center{12.0, -7.0, 55.0};
    auto u = [&](const Vec3& p) {
        return pseudopotential(norm(quadrupole_field(1.0e9, center)(p)), params);
    };
    const Vec3 found = find_minimum(u, center + Vec3{9.0, 6.0, -14.0});
    CHECK(norm(found - center) < 1e-3);
}

TEST_CASE("find_minimum: reports saddles instead of minima") {
    // qPhi-like scalar with a saddle at the origin.
    auto u = [](const Vec3& p) {
        const Vec3 d = p * um_to_m;
        return 1e9 * (d.x * d.x + d.y * d.y) - 5e8 * d.z * d.z;
    };
    CHECK_THROWS_AS(find_minimum(u, Vec3{0.01, -0.02, 0.0}), convergence_error);
}

TEST_CASE("harmonic_analysis reproduces the paper's q_z arithmetic") {
    // omega_z/2pi = 2.32 MHz at Omega/2pi = 44.3 MHz gives q_z = 0.148.
    const auto params = yb_params();
    const double omega_z = two_pi * 2.32e6;
    const double m = yb.mass_kg();
    auto u = [&](const Vec3& p) {
        const Vec3 d = p * um_to_m;
        return 0.5 * m * omega_z * omega_z * norm2(d) / constants::electron_volt;
    };
    const auto site = harmonic_analysis(u, {0, 0, 0}, params, NumDiffOptions{.step_um = 0.5});
    CHECK(site.freq_hz[0] == Catch::Approx(2.32e6).epsilon(1e-6));
    CHECK(site.freq_hz[2] == Catch::Approx(2.32e6).epsilon(1e-6));
    CHECK(site.q[2] == Catch::Approx(0.14813).margin(2e-4));
    // Isotropic bowl: any orthonormal axes are acceptable.
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(dot(site.axes[i], site.axes[j]) - (i == j ? 1.0 : 0.0)) < 1e-9);
    }
}

TEST_CASE("harmonic_analysis recovers a constructed anisotropic eigensystem") {
    // Rotation by 30 degrees about (1,1,1)/sqrt(3).
    const double ang = constants::pi / 6.0;
    const Vec3 axis = normalized(Vec3{1, 1, 1});
    auto rotate = [&](const Vec3& v) {
        const Vec3 k = axis;
        return v * std::cos(ang) + cross(k, v) * std::sin(ang) +
               k * dot(k, v) * (1.0 - std::cos(ang));
    };
    const Vec3 v0 = rotate({1, 0, 0});
    const Vec3 v1 = rotate({0, 1, 0});
    const Vec3 v2 = rotate({0, 0, 1});
    const double l0 = 2.0e8, l1 = 5.0e8, l2 = 9.0e8; // eV/m^2 curvature pairs
    auto u = [&](const Vec3& p) {
        const Vec3 d = p * um_to_m;
        const double c0 = dot(d, v0), c1 = dot(d, v1), c2 = dot(d, v2);
        return 0.5 * (l0 * c0 * c0 + l1 * c1 * c1 + l2 * c2 * c2);
    };
    const auto params = yb_params();
    const auto site = harmonic_analysis(u, {0, 0, 0}, params, NumDiffOptions{.step_um = 0.5});

    const double m = yb.mass_kg();
    auto freq = [&](double lambda) {
        return std::sqrt(lambda * constants::electron_volt / m) / two_pi;
    };
    CHECK(site.freq_hz[0] == Catch::Approx(freq(l0)).epsilon(1e-3));
    CHECK(site.freq_hz[1] == Catch::Approx(freq(l1)).epsilon(1e-3));
    CHECK(site.freq_hz[2] == Catch::Approx(freq(l2)).epsilon(1e-3));
    CHECK(std::abs(std::abs(dot(site.axes[0], v0)) - 1.0) < 1e-3);
    CHECK(std::abs(std::abs(dot(site.axes[1], v1)) - 1.0) < 1e-3);
    CHECK(std::abs(std::abs(dot(site.axes[2], v2)) - 1.0) < 1e-3);
    CHECK(site.confinement_ev_m2 == Catch::Approx(l0 + l1 + l2).epsilon(1e-6));
}

TEST_CASE("numeric Hessian is symmetric before eigendecomposition") {
    auto u = [](const Vec3& p) {
        const Vec3 d = p * um_to_m;
        return 1e9 * (d.x * d.x + 0.7 * d.y * d.y + 1.3 * d.z * d.z + 0.31 * d.x * d.y -
                      0.17 * d.y * d.z) +
               3e12 * d.x * d.y * d.z;
    };
    const auto h = numdiff::hessian(u, {3.0, -2.0, 4.0}, NumDiffOptions{.step_um = 0.5});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(h(i, j) - h(j, i)) <= 1e-3 * std::abs(h(i, j)));
}

TEST_CASE("Floquet oracle: pseudopotential frequency within 1% at q = 0.15") {
    const auto params = yb_params();
    const double m = yb.mass_kg();
    const double q_C = yb.charge_C();
    const double omega_rf = params.drive.rf_omega;

    for (double q_target : {0.05, 0.15}) {
        const double gradient = q_target * m * omega_rf * omega_rf / (2.0 * q_C);
        auto u = [&](const Vec3& p) {
            return pseudopotential(norm(quadrupole_field(gradient)(p)), params);
        };
        const auto site = harmonic_analysis(u, {0, 0, 0}, params, NumDiffOptions{.step_um = 0.2});
        // freq_hz[0] = freq_hz[1] is the x/y pair driven at q_target.
        CHECK(site.q[0] == Catch::Approx(q_target).epsilon(1e-6));

        const oracles::QuadrupoleFloquet oracle{q_C, m, gradient, omega_rf};
        const double w_floquet = oracle.secular_frequency();
        REQUIRE(w_floquet > 0.0);
        const double w_pseudo = two_pi * site.freq_hz[0];
        CHECK(std::abs(w_pseudo / w_floquet - 1.0) < 0.01);
    }
}

TEST_CASE("Floquet property: deviation bounded by q^2/2 up to q = 0.3") {
    const auto params = yb_params();
    const double m = yb.mass_kg();
    const double q_C = yb.charge_C();
    const double omega_rf = params.drive.rf_omega;
    for (double q_target : {0.05, 0.15, 0.30}) {
        const double gradient = q_target * m * omega_rf * omega_rf / (2.0 * q_C);
        const double w_pseudo = q_target * omega_rf / (2.0 * std::sqrt(2.0));
        const oracles::QuadrupoleFloquet oracle{q_C, m, gradient, omega_rf};
        const double w_floquet = oracle.secular_frequency();
        REQUIRE(w_floquet > 0.0);
        CHECK(std::abs(w_pseudo / w_floquet - 1.0) <= 0.5 * q_target * q_target);
        // Cross-check the time-domain oracle against the monodromy exponent.
        const double w_monodromy = oracles::mathieu_secular_frequency(q_target, omega_rf);
        CHECK(w_floquet == Catch::Approx(w_monodromy).epsilon(1e-4));
    }
}

TEST_CASE("total_confinement: exact on a pure quadratic") {
    const double a = 7.3e8; // eV/m^2
    auto u = [&](const Vec3& p) {
        const Vec3 d = p * um_to_m;
        return a * norm2(d);
    };
    const double c = total_confinement(u, {5.0, 3.0, 40.0}, NumDiffOptions{.step_um = 1.0});
    CHECK(c == Catch::Approx(6.0 * a).epsilon(1e-6));
}

TEST_CASE("total_confinement matches a closed-form position-dependent Laplacian") {
    const double amp = 0.5;     // eV
    const double sigma = 40e-6; // m
    auto u = [&](const Vec3& p) {
        const Vec3 d = p * um_to_m;
        return amp * std::exp(-norm2(d) / (2.0 * sigma * sigma));
    };
    auto lap_exact = [&](const Vec3& p_um) {
        const Vec3 d = p_um * um_to_m;
        const double r2 = norm2(d);
        return amp * std::exp(-r2 / (2.0 * sigma * sigma)) *
               (r2 / std::pow(sigma, 4) - 3.0 / (sigma * sigma));
    };
    for (const Vec3 p : {Vec3{10, 0, 20}, Vec3{-15, 25, 5}, Vec3{0, 0, 55}}) {
        const double c = total_confinement(u, p, NumDiffOptions{.step_um = 0.5});
        CHECK(c == Catch::Approx(lap_exact(p)).epsilon(1e-4));
    }
}

TEST_CASE("trap_depth: synthetic double well hits the analytic saddle") {
    const double u0 = 0.25;  // eV barrier
    const double h = 60.0;   // µm, saddle plane
    const double w = 20.0;   // µm, well offset
    auto u = [&](const Vec3& p) {
        const double zeta = (p.z - h) / w;
        const double bowl = (zeta * zeta - 1.0) * (zeta * zeta - 1.0);
        return u0 * bowl + 1e-4 * (p.x * p.x + p.y * p.y);
    };
    const auto params = yb_params();
    const Vec3 site_pos{0.0, 0.0, h - w};
    const auto site = harmonic_analysis(u, site_pos, params, NumDiffOptions{.step_um = 0.2});
    BoundingBox region{{-200, -200, 1.0}, {200, 200, 200.0}};
    const auto depth = trap_depth(u, site, region, DepthOptions{.march_step_um = 1.0});
    CHECK_FALSE(depth.boundary_limited);
    CHECK(depth.depth_ev == Catch::Approx(u0).epsilon(0.01));
    CHECK(std::abs(depth.barrier_position_um.z - h) < 1.0);
    CHECK(depth.escape_direction.z > 0.5);
}

TEST_CASE("trap_depth: quadratic bowl truncated by the region boundary is flagged") {
    auto u = [](const Vec3& p) {
        const Vec3 d = (p - Vec3{0, 0, 50}) * um_to_m;
        return 5e8 * norm2(d);
    };
    const auto params = yb_params();
    const auto site = harmonic_analysis(u, {0, 0, 50}, params, NumDiffOptions{.step_um = 0.5});
    BoundingBox region{{-80, -80, 1.0}, {80, 80, 120.0}};
    const auto depth = trap_depth(u, site, region, DepthOptions{.march_step_um = 2.0});
    CHECK(depth.boundary_limited);
    CHECK(depth.depth_ev > 0.0);
}

TEST_CASE("trap site report carries the normative field names") {
    const auto params = yb_params();
    auto u = [&](const Vec3& p) {
        return pseudopotential(norm(quadrupole_field(1.0e9)(p)), params);
    };
    auto site = harmonic_analysis(u, {0, 0, 0}, params, NumDiffOptions{.step_um = 0.5});
    site.depth_ev = 1.25;
    const auto j = trap_site_report(site);
    CHECK(j.contains("position_um"));
    CHECK(j.contains("freq_hz"));
    CHECK(j.contains("axes"));
    CHECK(j.contains("q"));
    CHECK(j.contains("depth_ev"));
    CHECK(j.contains("confinement_ev_m2"));
    CHECK(j["freq_hz"].size() == 3);
    CHECK(j["axes"].size() == 3);
    CHECK(j["axes"][0].size() == 3);
}

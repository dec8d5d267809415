#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "iontrap/transport.hpp"

using namespace iontrap;

namespace {

const IonSpecies yb = make_species("171Yb+", 171.0, 1);

PseudoParams yb_params() { return PseudoParams{yb, make_drive(190.0, 44.3e6)}; }

TransportPath hand_path(const std::vector<double>& xs,
                        const std::function<double(double)>& z_of_x,
                        const std::function<double(double)>& qphi_of_x, double c0 = 1e9) {
    TransportPath p;
    for (double x : xs) {
        PathSample s;
        s.x_um = x;
        s.z_um = z_of_x(x);
        s.height_um = s.z_um;
        s.qphi_ev = qphi_of_x(x);
        s.confinement_ev_m2 = c0;
        p.samples.push_back(s);
    }
    return p;
}

std::vector<double> linspace_step(double a, double b, double dx) {
    std::vector<double> xs;
    for (double x = a; x <= b + 1e-9; x += dx) xs.push_back(x);
    return xs;
}

} // namespace

TEST_CASE("minimum_path: translationally invariant field gives constant height") {
    const double z0 = 74.6;
    auto u = [&](const Vec3& p) {
        return 1e-4 * ((p.z - z0) * (p.z - z0) + p.y * p.y) + 2e-3;
    };
    const auto path = minimum_path(u, 0.0, 100.0, 1.0);
    REQUIRE(path.samples.size() == 101);
    CHECK(path.truncation_reason.empty());
    for (const auto& s : path.samples) {
        CHECK(std::abs(s.z_um - z0) < 1e-4);
        CHECK(s.qphi_ev == Catch::Approx(2e-3).margin(1e-9));
    }
}

TEST_CASE("minimum_path recovers a closed-form nil line to 0.01 um") {
    auto z0 = [](double x) { return 70.0 + 10.0 * std::cos(constants::pi * x / 150.0); };
    auto u = [&](const Vec3& p) {
        const double dz = p.z - z0(p.x);
        return 2e-4 * (dz * dz + 0.5 * p.y * p.y) + 1e-3 * (1.0 + std::cos(p.x / 90.0));
    };
    const auto path = minimum_path(u, 0.0, 300.0, 1.0);
    REQUIRE(path.samples.size() == 301);
    for (const auto& s : path.samples) {
        CHECK(std::abs(s.z_um - z0(s.x_um)) < 1e-2);
    }
    // Transverse second derivative positive at every sample.
    for (std::size_t i = 0; i < path.samples.size(); i += 25) {
        const auto& s = path.samples[i];
        const double h = 0.5;
        const double d2 = u({s.x_um, 0, s.z_um + h}) - 2.0 * u({s.x_um, 0, s.z_um}) +
                          u({s.x_um, 0, s.z_um - h});
        CHECK(d2 > 0.0);
    }
}

TEST_CASE("minimum_path: reversal and mirror symmetry") {
    auto z0 = [](double x) { return 60.0 + 5.0 * std::cos(constants::pi * x / 100.0); };
    auto u = [&](const Vec3& p) {
        const double dz = p.z - z0(p.x);
        return 1e-4 * (dz * dz + p.y * p.y);
    };
    const auto fwd = minimum_path(u, -200.0, 200.0, 2.0);
    const auto rev = minimum_path(u, 200.0, -200.0, 2.0);
    REQUIRE(fwd.samples.size() == rev.samples.size());
    for (std::size_t i = 0; i < fwd.samples.size(); ++i) {
        CHECK(fwd.samples[i].x_um == rev.samples[i].x_um);
        CHECK(fwd.samples[i].z_um == Catch::Approx(rev.samples[i].z_um).margin(1e-9));
    }
    // Even in x: path symmetric under x -> -x.
    const std::size_t n = fwd.samples.size();
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(fwd.samples[i].z_um == Catch::Approx(fwd.samples[n - 1 - i].z_um).margin(1e-6));
    }
}

TEST_CASE("minimum_path truncates when the transverse minimum vanishes") {
    // Below x = 150 the z-profile inverts (no interior minimum), so the
    // junction-side march truncates.
    auto u = [](const Vec3& p) {
        const double conf = p.x > 150.0 ? 1.0 : -1.0;
        return conf * 1e-4 * (p.z - 60.0) * (p.z - 60.0) + 1e-4 * p.y * p.y + 5e-3;
    };
    const auto path = minimum_path(u, 0.0, 300.0, 1.0);
    CHECK_FALSE(path.truncation_reason.empty());
    CHECK(path.samples.size() < 301);
    CHECK(path.samples.empty() == false);
}

TEST_CASE("ctc_path matches the separable closed-form root (acceptance fixture)") {
    // u = A (1 + x^2/L^2)(z - z0)^2 + g(x) with g chosen so the Laplacian has
    // the closed-form root (z - z0)^2 = 400 - 112.5 cos(2 pi x / 300).
    const double A = 1e-3;  // eV/µm^2
    const double L = 150.0; // µm
    const double z0 = 50.0;
    const double eps = 1e-5;
    const double period = 300.0;
    const double wcos = two_pi / period;
    auto g = [&](double x) {
        return -A * std::pow(x, 4) / (6.0 * L * L) +
               eps / (wcos * wcos) * (1.0 - std::cos(wcos * x));
    };
    auto u = [&](const Vec3& p) {
        const double dz = p.z - z0;
        return A * (1.0 + p.x * p.x / (L * L)) * dz * dz + g(p.x);
    };
    const double c_target = (2.0 * A + 2.0 * A * 400.0 / (L * L)) * 1e12; // eV/m^2
    auto analytic_z = [&](double x) {
        const double d2 = (c_target / 1e12 - 2.0 * A - eps * std::cos(wcos * x)) * L * L /
                          (2.0 * A);
        return z0 + std::sqrt(d2);
    };

    const auto params = yb_params();
    const auto path = ctc_path(u, params, c_target, 0.0, 300.0, 1.0);
    REQUIRE(path.samples.size() == 301);
    for (const auto& s : path.samples) {
        CHECK(std::abs(s.z_um - analytic_z(s.x_um)) < 1e-2);
    }
    // Post-hoc confinement invariant with an independent stencil.
    for (std::size_t i = 0; i < path.samples.size(); i += 10) {
        const auto& s = path.samples[i];
        const double c_check = numdiff::laplacian(
            u, {s.x_um, 0.0, s.z_um}, NumDiffOptions{.step_um = 0.37, .richardson = false});
        CHECK(std::abs(c_check - c_target) < 1e-3 * c_target);
    }
}

TEST_CASE("ctc_path: infeasible target fails with no partial path") {
    auto u = [](const Vec3& p) {
        const double dz = p.z - 60.0;
        return 1e-4 * (dz * dz + p.y * p.y);
    };
    // Global confinement is 4e8 eV/m^2; ask for far more.
    CHECK_THROWS_AS(ctc_path(u, yb_params(), 5e9, 0.0, 100.0, 1.0), convergence_error);
    try {
        ctc_path(u, yb_params(), 5e9, 0.0, 100.0, 1.0);
    } catch (const convergence_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("maximum attainable") != std::string::npos);
    }
}

TEST_CASE("ctc_path aborts on a branch jump larger than the window") {
    // The confinement ridge re-centres abruptly between two samples: the
    // tracked root vanishes locally while a distant branch persists.
    const double a = 3e-3;  // eV/µm^2
    const double k = 2e-6;  // eV/µm^4
    auto m_of_x = [](double x) { return 60.0 + 50.0 / (1.0 + std::exp((x - 150.5) / 0.02)); };
    auto u = [&](const Vec3& p) {
        const double dm = p.z - m_of_x(p.x);
        return 0.5 * a * p.z * p.z - k / 12.0 * dm * dm * dm * dm;
    };
    const double c_target = (a - 250.0 * k) * 1e12; // roots at m(x) +/- 15.8 µm
    try {
        ctc_path(u, yb_params(), c_target, 0.0, 300.0, 1.0);
        FAIL("expected branch-ambiguity abort");
    } catch (const convergence_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("branch") != std::string::npos);
    }
}

TEST_CASE("path_metrics: constant path has zero barrier and unit confinement fraction") {
    const auto xs = linspace_step(0, 100, 1.0);
    const auto path = hand_path(
        xs, [](double) { return 70.0; }, [](double) { return 3e-3; });
    const auto m = path_metrics(path);
    CHECK(m.max_barrier_ev == Catch::Approx(0.0).margin(1e-15));
    CHECK(m.min_confinement_fraction == Catch::Approx(1.0));
    CHECK(m.min_height_um == 70.0);
    CHECK(m.max_height_um == 70.0);
}

TEST_CASE("path_metrics: synthetic 7 meV Gaussian barrier is reported") {
    const auto xs = linspace_step(0, 300, 1.0);
    const double u0 = 7e-3;
    const auto path = hand_path(
        xs, [](double) { return 70.0; },
        [&](double x) { return 1e-4 + u0 * std::exp(-x * x / (2.0 * 40.0 * 40.0)); });
    const auto m = path_metrics(path);
    CHECK(m.max_barrier_ev == Catch::Approx(u0).epsilon(1e-4));
}

TEST_CASE("micromotion_amplitude: zero, the paper value, and sqrt scaling") {
    const auto params = yb_params();
    CHECK(micromotion_amplitude(0.0, params) == 0.0);
    // 5e-5 eV residual pseudopotential for 171Yb+ at 44.3 MHz -> 38 nm.
    const double amp = micromotion_amplitude(5e-5, params);
    CHECK(amp == Catch::Approx(38e-9).margin(1e-9));
    CHECK(micromotion_amplitude(4.0 * 5e-5, params) == Catch::Approx(2.0 * amp).epsilon(1e-12));
    CHECK_THROWS_AS(micromotion_amplitude(-1e-6, params), domain_error);
}

TEST_CASE("path_overlap: identity, constructed offset, and mismatch errors") {
    const auto xs = linspace_step(0, 99, 1.0); // 100 samples
    const auto a = hand_path(
        xs, [](double) { return 70.0; }, [](double) { return 0.0; });
    const auto same = path_overlap(a, a);
    CHECK(same.max_separation_um == 0.0);
    CHECK(same.rms_separation_um == 0.0);

    // 20 um offset over exactly half the samples: max 20, rms 20/sqrt(2).
    auto b = a;
    const std::size_t n = b.samples.size();
    REQUIRE(n % 2 == 0);
    for (std::size_t i = 0; i < n / 2; ++i) b.samples[i].z_um += 20.0;
    const auto off = path_overlap(a, b);
    CHECK(off.max_separation_um == Catch::Approx(20.0));
    CHECK(off.rms_separation_um == Catch::Approx(20.0 / std::sqrt(2.0)).epsilon(1e-12));

    auto c = a;
    c.samples.pop_back();
    CHECK_THROWS_AS(path_overlap(a, c), domain_error);
    auto d = a;
    d.samples[3].x_um += 0.5;
    CHECK_THROWS_AS(path_overlap(a, d), domain_error);

    // Surface-trap-like mismatch: nonzero separation, no crash.
    const auto e = hand_path(
        xs, [](double x) { return 70.0 - 0.05 * x; }, [](double) { return 0.0; });
    const auto mm = path_overlap(a, e);
    CHECK(mm.max_separation_um > 0.0);
}

TEST_CASE("path_metrics with companion reports the max height deviation") {
    const auto xs = linspace_step(0, 100, 1.0);
    const auto a = hand_path(
        xs, [](double) { return 70.0; }, [](double) { return 0.0; });
    const auto b = hand_path(
        xs, [](double x) { return 70.0 + (x >= 50.0 ? 3.0 : 0.0); }, [](double) { return 0.0; });
    const auto m = path_metrics(a, &b);
    CHECK(m.max_height_deviation_um == Catch::Approx(3.0));
}

TEST_CASE("transport plan requires positive speeds") {
    const auto xs = linspace_step(0, 10, 1.0);
    auto path = hand_path(
        xs, [](double) { return 70.0; }, [](double) { return 0.0; });
    CHECK_THROWS_AS(TransportPlan::constant_speed(path, 0.0), domain_error);
    const auto plan = TransportPlan::constant_speed(path, 4.0);
    CHECK(plan.speed_m_s.size() == plan.path.samples.size());
}

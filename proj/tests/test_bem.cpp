#include <catch2/catch_amalgamated.hpp>

#include "iontrap/bem.hpp"
#include "iontrap/mesh.hpp"
#include "oracles.hpp"

using namespace iontrap;

TEST_CASE("panel integrals match triangle quadrature") {
    const Vec3 a{0.0, 0.0, 0.0};
    const Vec3 b{3.0, 0.5, 0.2};
    const Vec3 c{1.0, 2.5, -0.4};
    const panel::TrianglePanel tri(a, b, c);

    const std::vector<Vec3> points = {
        {1.5, 1.0, 2.0},   // above
        {1.5, 1.0, -2.0},  // below
        {6.0, -1.0, 0.5},  // off to the side
        {1.2, 0.9, 0.05},  // very close to the plane
    };
    for (const auto& r : points) {
        const auto kv = panel::evaluate(tri, r);
        const double i_ref = oracles::triangle_single_layer_potential(a, b, c, r);
        CHECK(kv.potential == Catch::Approx(i_ref).epsilon(1e-6));
        const Vec3 k_ref = oracles::triangle_single_layer_field(a, b, c, r);
        const double scale = std::max({std::abs(k_ref.x), std::abs(k_ref.y), std::abs(k_ref.z)});
        CHECK(std::abs(kv.field.x - k_ref.x) < 2e-5 * scale);
        CHECK(std::abs(kv.field.y - k_ref.y) < 2e-5 * scale);
        CHECK(std::abs(kv.field.z - k_ref.z) < 2e-5 * scale);
    }

    // In-plane observation outside the triangle: finite, tangential only.
    const Vec3 in_plane = a + (b - a) * 2.5;
    const auto kv = panel::evaluate(tri, in_plane);
    CHECK(std::isfinite(kv.potential));
    CHECK(std::abs(dot(kv.field, tri.unit_normal)) < 1e-12);

    // Self-term at the centroid: positive and finite.
    const auto self = panel::evaluate(tri, (a + b + c) / 3.0);
    CHECK(self.potential > 0.0);
    CHECK(std::isfinite(self.potential));
}

TEST_CASE("bem: unit sphere capacitance within 1% at >= 1280 panels") {
    const double radius = 100.0; // µm
    const auto sphere = make_icosphere({0, 0, 0}, radius, 3); // 1280 panels
    REQUIRE(sphere.panel_count() == 1280);

    const auto sol = bem_solve({sphere}, {1.0});
    const double q_total = sol.total_charge(0);
    const double c_exact = 4.0 * constants::pi * constants::epsilon0 * radius * um_to_m;
    CHECK(q_total == Catch::Approx(c_exact).epsilon(0.01));
    CHECK(sol.meta.residual < 1e-9);
}

TEST_CASE("bem: closed box at uniform potential is a Faraday cage") {
    auto box = make_box({-50, -50, -50}, {50, 50, 50});
    box = refine_to_size(box, 20.0);
    const auto sol = bem_solve({box}, {1.0});

    std::vector<panel::TrianglePanel> panels;
    for (const auto& t : box.tris)
        panels.emplace_back(t.a * um_to_m, t.b * um_to_m, t.c * um_to_m);
    BemSystem sys(panels, BemOptions{});
    Eigen::VectorXd sigma(static_cast<Eigen::Index>(sol.sigma.size()));
    for (std::size_t i = 0; i < sol.sigma.size(); ++i)
        sigma[static_cast<Eigen::Index>(i)] = sol.sigma[i];

    const Vec3 inside = Vec3{3.0, -4.0, 5.0} * um_to_m;
    const Vec3 outside = Vec3{0.0, 0.0, 60.0} * um_to_m;
    const double e_in = norm(sys.group().field_at(sigma, inside));
    const double e_out = norm(sys.group().field_at(sigma, outside));
    CHECK(e_in < 1e-3 * e_out);
    // And the interior potential equals the conductor potential.
    CHECK(sys.group().potential_at(sigma, inside) == Catch::Approx(1.0).margin(2e-3));
}

TEST_CASE("bem: grounded plane via mirror images reproduces the image-charge series") {
    const double radius = 60.0;
    const double height = 150.0;
    const auto sphere = make_icosphere({0, 0, height}, radius, 3);

    BemOptions opts;
    opts.mirror_plane = true;
    const auto sol = bem_solve({sphere}, {1.0}, opts);
    const double q_total = sol.total_charge(0);

    const double c_factor = oracles::sphere_plane_capacitance_factor(radius, height);
    const double c_exact = 4.0 * constants::pi * constants::epsilon0 * c_factor * um_to_m;
    CHECK(q_total == Catch::Approx(c_exact).epsilon(0.02));
}

TEST_CASE("bem: capacitance matrix is symmetric (reciprocity)") {
    const auto a = make_icosphere({-150, 0, 0}, 50.0, 2);
    const auto b = make_box({100, -40, -40}, {180, 40, 40});
    const auto b_fine = refine_to_size(b, 25.0);

    const auto sol_a = bem_solve({a, b_fine}, {1.0, 0.0});
    const auto sol_b = bem_solve({a, b_fine}, {0.0, 1.0});
    const double c_ab = sol_a.total_charge(1); // induced on b by a at 1 V
    const double c_ba = sol_b.total_charge(0); // induced on a by b at 1 V
    CHECK(c_ab == Catch::Approx(c_ba).epsilon(0.01));
}

TEST_CASE("bem: superposition of solves") {
    const auto a = make_icosphere({-120, 0, 0}, 40.0, 2);
    const auto b = make_icosphere({120, 0, 0}, 40.0, 2);
    const auto sol_1 = bem_solve({a, b}, {2.0, 0.0});
    const auto sol_2 = bem_solve({a, b}, {0.0, -1.0});
    const auto sol_both = bem_solve({a, b}, {2.0, -1.0});
    for (std::size_t i = 0; i < sol_both.sigma.size(); i += 97) {
        CHECK(sol_both.sigma[i] ==
              Catch::Approx(sol_1.sigma[i] + sol_2.sigma[i]).margin(1e-12));
    }
}

TEST_CASE("bem: panel budget is refused before assembly") {
    const auto sphere = make_icosphere({0, 0, 0}, 100.0, 3);
    BemOptions opts;
    opts.max_panels = 1000;
    try {
        bem_solve({sphere}, {1.0}, opts);
        FAIL("expected solver_error");
    } catch (const solver_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("1280") != std::string::npos);
    }
}

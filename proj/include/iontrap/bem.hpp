#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "iontrap/constants.hpp"
#include "iontrap/errors.hpp"
#include "iontrap/mesh.hpp"
#include "iontrap/panel_integrals.hpp"
#include "iontrap/vec.hpp"

namespace iontrap {

struct BemOptions {
    // Grounded z = 0 plane handled with image panels of opposite charge.
    bool mirror_plane = false;
    // Collocation residual cap: max |reconstructed - prescribed| potential, V.
    double residual_tol = 1e-6;
    // Dense direct solve budget; larger systems are refused outright.
    std::size_t max_panels = 20000;
    int threads = 0; // 0 = hardware concurrency
};

struct BemMetadata {
    std::size_t panel_count = 0;
    double residual = 0.0;
    double condition_estimate = 0.0;
};

namespace detail {

inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t)>& chunk_fn) {
    unsigned hw = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
    if (hw < 1) hw = 1;
    if (hw == 1 || n < 2 * hw) {
        chunk_fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t step = (n + hw - 1) / hw;
    for (unsigned t = 0; t < hw; ++t) {
        const std::size_t lo = t * step;
        const std::size_t hi = std::min(n, lo + step);
        if (lo >= hi) break;
        pool.emplace_back(chunk_fn, lo, hi);
    }
    for (auto& th : pool) th.join();
}

inline panel::TrianglePanel mirror_across_plane(const panel::TrianglePanel& p) {
    auto flip = [](Vec3 v) { return Vec3{v.x, v.y, -v.z}; };
    // Swap two vertices so the winding still points away from the conductor.
    return panel::TrianglePanel(flip(p.v[0]), flip(p.v[2]), flip(p.v[1]));
}

} // namespace detail

// Panel storage plus charge-density evaluation: everything needed to use a
// solved (or cached) solution, with no dense matrix attached.
class PanelGroup {
public:
    PanelGroup(std::vector<panel::TrianglePanel> panels, bool mirror_plane)
        : panels_(std::move(panels)), mirror_(mirror_plane) {
        areas_.reserve(panels_.size());
        centroids_.reserve(panels_.size());
        for (const auto& p : panels_) {
            const Vec3 nrm = cross(p.v[1] - p.v[0], p.v[2] - p.v[0]);
            areas_.push_back(0.5 * norm(nrm));
            centroids_.push_back((p.v[0] + p.v[1] + p.v[2]) / 3.0);
        }
        if (mirror_) {
            mirrors_.reserve(panels_.size());
            for (const auto& p : panels_) mirrors_.push_back(detail::mirror_across_plane(p));
        }
    }

    std::size_t size() const { return panels_.size(); }
    bool mirrored() const { return mirror_; }
    const std::vector<panel::TrianglePanel>& panels() const { return panels_; }
    const std::vector<double>& areas() const { return areas_; }
    const std::vector<Vec3>& centroids() const { return centroids_; }

    // Unit-source influence (I - I*) / 4 pi eps0 of panel j at a point (m).
    double influence_potential(std::size_t j, const Vec3& p_m) const {
        double v = panel::evaluate(panels_[j], p_m).potential;
        if (mirror_) v -= panel::evaluate(mirrors_[j], p_m).potential;
        return v / (4.0 * constants::pi * constants::epsilon0);
    }

    // Potential (V) of a charge-density vector (C/m^2) at a point (m).
    double potential_at(const Eigen::VectorXd& sigma, const Vec3& p_m) const {
        double phi = 0.0;
        for (std::size_t j = 0; j < panels_.size(); ++j) {
            double v = panel::evaluate(panels_[j], p_m).potential;
            if (mirror_) v -= panel::evaluate(mirrors_[j], p_m).potential;
            phi += sigma[static_cast<Eigen::Index>(j)] * v;
        }
        return phi / (4.0 * constants::pi * constants::epsilon0);
    }

    // Field (V/m) of a charge-density vector at a point (m).
    Vec3 field_at(const Eigen::VectorXd& sigma, const Vec3& p_m) const {
        Vec3 e{};
        for (std::size_t j = 0; j < panels_.size(); ++j) {
            Vec3 k = panel::evaluate(panels_[j], p_m).field;
            if (mirror_) k = k - panel::evaluate(mirrors_[j], p_m).field;
            e += k * sigma[static_cast<Eigen::Index>(j)];
        }
        return e / (4.0 * constants::pi * constants::epsilon0);
    }

private:
    std::vector<panel::TrianglePanel> panels_;
    std::vector<panel::TrianglePanel> mirrors_;
    std::vector<double> areas_;
    std::vector<Vec3> centroids_;
    bool mirror_ = false;
};

// Dense collocation system over constant-strength triangular panels:
// potential continuity is imposed at panel centroids, self-terms use the
// analytic in-plane integral. Panels are stored in metres.
class BemSystem {
public:
    BemSystem(std::vector<panel::TrianglePanel> panels, const BemOptions& opts)
        : group_(std::move(panels), opts.mirror_plane), opts_(opts) {
        const std::size_t n = group_.size();
        if (n == 0) throw solver_error("bem: no panels to solve");
        if (n > opts_.max_panels)
            throw solver_error("bem: " + std::to_string(n) +
                               " panels exceed the dense-solve cap of " +
                               std::to_string(opts_.max_panels) + "; coarsen the panelization");
        matrix_.resize(n, n);
        detail::parallel_for(n, opts_.threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                const Vec3& x = group_.centroids()[i];
                for (std::size_t j = 0; j < n; ++j) {
                    matrix_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        group_.influence_potential(j, x);
                }
            }
        });
        lu_.compute(matrix_);
    }

    std::size_t panel_count() const { return group_.size(); }
    const PanelGroup& group() const { return group_; }

    // Solves for charge densities (C/m^2) given prescribed centroid
    // potentials. Checks the collocation residual and solution sanity.
    Eigen::VectorXd solve(const Eigen::VectorXd& potentials_V) const {
        Eigen::VectorXd sigma = lu_.solve(potentials_V);
        if (!sigma.allFinite())
            throw solver_error("bem: singular or ill-conditioned system, condition estimate " +
                               std::to_string(condition_estimate()));
        const double residual = (matrix_ * sigma - potentials_V).cwiseAbs().maxCoeff();
        if (residual > opts_.residual_tol)
            throw convergence_error("bem: collocation residual " + std::to_string(residual) +
                                    " V exceeds tolerance " + std::to_string(opts_.residual_tol) +
                                    " V (condition estimate " +
                                    std::to_string(condition_estimate()) + ")");
        last_residual_ = std::max(last_residual_, residual);
        return sigma;
    }

    double max_residual() const { return last_residual_; }

    // Crude 2-norm condition estimate from a few power iterations on A^T A
    // and its inverse; good enough for error reports.
    double condition_estimate() const {
        const Eigen::Index n = matrix_.rows();
        Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
        double smax = 0.0;
        for (int it = 0; it < 12; ++it) {
            v = (matrix_.transpose() * (matrix_ * v)).eval();
            smax = std::sqrt(v.norm());
            v.normalize();
        }
        Eigen::VectorXd w = Eigen::VectorXd::Ones(n).normalized();
        double smin_inv = 0.0;
        for (int it = 0; it < 12; ++it) {
            w = lu_.transpose().solve(lu_.solve(w)).eval();
            smin_inv = std::sqrt(w.norm());
            w.normalize();
        }
        if (smin_inv <= 0.0) return std::numeric_limits<double>::infinity();
        return smax * smin_inv;
    }

private:
    PanelGroup group_;
    BemOptions opts_;
    Eigen::MatrixXd matrix_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    mutable double last_residual_ = 0.0;
};

struct BemSolution {
    std::vector<double> sigma;            // C/m^2 per panel
    std::vector<std::size_t> conductor_of_panel;
    std::vector<double> panel_area_m2;
    BemMetadata meta;

    double total_charge(std::size_t conductor) const {
        double q = 0.0;
        for (std::size_t j = 0; j < sigma.size(); ++j)
            if (conductor_of_panel[j] == conductor) q += sigma[j] * panel_area_m2[j];
        return q;
    }
};

// Boundary-value solve for a set of conductors at prescribed potentials.
// Meshes are in µm; charge densities come back in SI.
inline BemSolution bem_solve(const std::vector<TriMesh>& conductors,
                             const std::vector<double>& potentials_V,
                             const BemOptions& opts = {}) {
    if (conductors.size() != potentials_V.size())
        throw solver_error("bem_solve: need one potential per conductor");
    std::vector<panel::TrianglePanel> panels;
    std::vector<std::size_t> owner;
    for (std::size_t c = 0; c < conductors.size(); ++c) {
        for (const auto& t : conductors[c].tris) {
            panels.emplace_back(t.a * um_to_m, t.b * um_to_m, t.c * um_to_m);
            owner.push_back(c);
        }
    }
    if (panels.empty()) throw solver_error("bem_solve: layout has no 3D panels");

    BemSystem sys(std::move(panels), opts);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(sys.panel_count()));
    for (std::size_t i = 0; i < sys.panel_count(); ++i)
        rhs[static_cast<Eigen::Index>(i)] = potentials_V[owner[i]];
    const Eigen::VectorXd sigma = sys.solve(rhs);

    BemSolution out;
    out.sigma.assign(sigma.data(), sigma.data() + sigma.size());
    out.conductor_of_panel = std::move(owner);
    out.panel_area_m2 = sys.group().areas();
    out.meta.panel_count = sys.panel_count();
    out.meta.residual = sys.max_residual();
    out.meta.condition_estimate = sys.condition_estimate();
    return out;
}

} // namespace iontrap

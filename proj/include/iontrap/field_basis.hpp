#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iontrap/bem.hpp"
#include "iontrap/layout.hpp"
#include "iontrap/planar_field.hpp"

namespace iontrap {

struct FieldBasisOptions {
    double target_panel_size_um = 25.0;
    BemOptions bem{.mirror_plane = true, .residual_tol = 1e-6, .max_panels = 20000, .threads = 0};
    // Panels whose centroid sits essentially in the z = 0 plane are flush
    // with the substrate metal and carry no exposed surface; they are
    // dropped (their mirror image would cancel them anyway).
    double plane_drop_z_um = 1e-3;
};

// Per-electrode unit-voltage electrostatic solution over a layout.
//
// Planar faces use the gapless-plane analytic solution; 3D panels carry BEM
// charge densities solved against the grounded plane (image panels), with
// the planar contribution entering the panel boundary conditions. After
// construction, evaluation is pure and reentrant.
class FieldBasis {
public:
    static FieldBasis solve(const ElectrodeLayout& layout, const FieldBasisOptions& opts = {}) {
        FieldBasis fb = prepare(layout, opts);
        if (fb.panels_) {
            BemSystem sys(fb.panels_->panels(), opts.bem);
            const Eigen::Index n = static_cast<Eigen::Index>(sys.panel_count());
            for (std::size_t e = 0; e < fb.ids_.size(); ++e) {
                Eigen::VectorXd rhs(n);
                for (Eigen::Index i = 0; i < n; ++i) {
                    const Vec3 c_um = fb.panels_->centroids()[std::size_t(i)] * m_to_um;
                    double target = fb.electrode_of_panel_[std::size_t(i)] == e ? 1.0 : 0.0;
                    for (const auto& poly : fb.polys_[e])
                        target -= planar_patch_potential(poly, c_um);
                    rhs[i] = target;
                }
                fb.sigma_.push_back(sys.solve(rhs));
            }
            fb.meta_.panel_count = sys.panel_count();
            fb.meta_.residual = sys.max_residual();
            fb.meta_.condition_estimate = sys.condition_estimate();
        }
        fb.combine_rf();
        return fb;
    }

    // Rebuilds evaluation state from previously solved charge densities
    // (panelization is deterministic, so panel order matches).
    static FieldBasis from_cached_charges(const ElectrodeLayout& layout,
                                          const FieldBasisOptions& opts,
                                          const std::vector<std::vector<double>>& charges) {
        FieldBasis fb = prepare(layout, opts);
        if (charges.size() != fb.ids_.size())
            throw dependency_error("cached charges cover " + std::to_string(charges.size()) +
                                   " electrodes, layout has " + std::to_string(fb.ids_.size()));
        const std::size_t n = fb.panels_ ? fb.panels_->size() : 0;
        for (const auto& c : charges) {
            if (c.size() != n)
                throw dependency_error("cached charge vector length " + std::to_string(c.size()) +
                                       " does not match " + std::to_string(n) + " panels");
            Eigen::VectorXd v(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = c[i];
            fb.sigma_.push_back(std::move(v));
        }
        fb.meta_.panel_count = n;
        fb.combine_rf();
        return fb;
    }

    std::size_t electrode_count() const { return ids_.size(); }
    const std::vector<std::string>& electrode_ids() const { return ids_; }
    const BemMetadata& metadata() const { return meta_; }
    const BoundingBox& bounding_box() const { return bbox_; }
    std::size_t panel_count() const { return panels_ ? panels_->size() : 0; }

    const std::vector<Eigen::VectorXd>& charge_vectors() const { return sigma_; }

    std::size_t index_of(const std::string& id) const {
        for (std::size_t e = 0; e < ids_.size(); ++e)
            if (ids_[e] == id) return e;
        throw domain_error("field basis: unknown electrode '" + id + "'");
    }

    // Field (V/m) per unit volt on electrode e, everything else grounded.
    Vec3 unit_field(std::size_t e, const Vec3& p_um) const {
        check_point(p_um);
        Vec3 out{};
        for (const auto& poly : polys_[e]) out += planar_basis_field(poly, p_um);
        if (panels_ && sigma_[e].size() > 0) out += panels_->field_at(sigma_[e], p_um * um_to_m);
        return out;
    }

    // Potential (V) per unit volt on electrode e.
    double unit_potential(std::size_t e, const Vec3& p_um) const {
        check_point(p_um);
        double phi = 0.0;
        for (const auto& poly : polys_[e]) phi += planar_patch_potential(poly, p_um);
        if (panels_ && sigma_[e].size() > 0)
            phi += panels_->potential_at(sigma_[e], p_um * um_to_m);
        return phi;
    }

    // RF field amplitude vector (V/m): the in-phase sum over RF electrodes
    // scaled by the drive amplitude. DC and GND electrodes contribute zero.
    Vec3 rf_field_amplitude(const DriveConfig& drive, const Vec3& p_um) const {
        check_point(p_um);
        Vec3 out{};
        for (const auto& poly : rf_polys_) out += planar_basis_field(poly, p_um);
        if (panels_ && rf_sigma_.size() > 0) out += panels_->field_at(rf_sigma_, p_um * um_to_m);
        return out * drive.rf_amplitude_V;
    }

    // Points closer to a 3D panel than its own size are inside the
    // collocation error halo; values there are usable but flagged.
    bool reliable_at(const Vec3& p_um) const {
        if (!panels_) return true;
        const Vec3 p_m = p_um * um_to_m;
        const auto& centroids = panels_->centroids();
        for (std::size_t j = 0; j < centroids.size(); ++j) {
            if (norm(p_m - centroids[j]) < panel_sizes_um_[j] * um_to_m) return false;
        }
        return true;
    }

private:
    static FieldBasis prepare(const ElectrodeLayout& layout, const FieldBasisOptions& opts) {
        FieldBasis fb;
        const ElectrodeLayout refined = panelize(layout, opts.target_panel_size_um);
        fb.bbox_ = refined.bounding_box;

        std::vector<panel::TrianglePanel> panels;
        for (const auto& e : refined.electrodes) {
            fb.ids_.push_back(e.id);
            fb.roles_.push_back(e.role);
            fb.polys_.push_back(e.planar_faces);
            for (const auto& t : e.panels_3d.tris) {
                for (const auto& v : {t.a, t.b, t.c}) {
                    if (v.z < -1e-9)
                        throw validation_error("electrode '" + e.id +
                                               "' has panels below the z = 0 surface");
                }
                if (opts.bem.mirror_plane && t.centroid().z <= opts.plane_drop_z_um) continue;
                panels.emplace_back(t.a * um_to_m, t.b * um_to_m, t.c * um_to_m);
                fb.panel_sizes_um_.push_back(t.circumdiameter());
                fb.electrode_of_panel_.push_back(fb.ids_.size() - 1);
            }
        }
        if (!panels.empty())
            fb.panels_ = std::make_shared<PanelGroup>(std::move(panels), opts.bem.mirror_plane);
        else
            fb.sigma_.clear();
        return fb;
    }

    void combine_rf() {
        if (sigma_.empty() && panels_)
            throw solver_error("field basis: missing charge vectors for 3D panels");
        if (sigma_.empty()) sigma_.resize(ids_.size());
        Eigen::VectorXd rf_sigma;
        for (std::size_t e = 0; e < ids_.size(); ++e) {
            if (roles_[e] != ElectrodeRole::RF) continue;
            for (const auto& poly : polys_[e]) rf_polys_.push_back(poly);
            if (sigma_[e].size() > 0)
                rf_sigma = rf_sigma.size() ? (rf_sigma + sigma_[e]).eval() : sigma_[e];
        }
        rf_sigma_ = rf_sigma;
    }

    void check_point(const Vec3& p_um) const {
        if (p_um.z <= 0.0)
            throw domain_error("field evaluation requires z > 0 (got z = " +
                               std::to_string(p_um.z) + " um)");
        if (!bbox_.contains(p_um))
            throw domain_error("field evaluation outside the layout bounding box at (" +
                               std::to_string(p_um.x) + ", " + std::to_string(p_um.y) + ", " +
                               std::to_string(p_um.z) + ") um");
    }

    std::vector<std::string> ids_;
    std::vector<ElectrodeRole> roles_;
    std::vector<std::vector<Polygon>> polys_;
    std::vector<Eigen::VectorXd> sigma_;
    std::vector<double> panel_sizes_um_;
    std::vector<std::size_t> electrode_of_panel_;
    std::vector<Polygon> rf_polys_;
    Eigen::VectorXd rf_sigma_;
    std::shared_ptr<PanelGroup> panels_;
    BoundingBox bbox_;
    BemMetadata meta_;
};

// Spec-facing alias for the combined-RF evaluation.
inline Vec3 combined_rf_field(const FieldBasis& basis, const DriveConfig& drive,
                              const Vec3& p_um) {
    return basis.rf_field_amplitude(drive, p_um);
}

} // namespace iontrap

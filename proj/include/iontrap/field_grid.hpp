#pragma once

#include <array>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "iontrap/bem.hpp"
#include "iontrap/errors.hpp"
#include "iontrap/field_basis.hpp"

namespace iontrap {

struct LatticeSpec {
    Vec3 origin_um;
    Vec3 spacing_um;
    std::array<int, 3> counts{1, 1, 1};

    std::size_t node_count() const {
        return std::size_t(counts[0]) * std::size_t(counts[1]) * std::size_t(counts[2]);
    }

    Vec3 node(int ix, int iy, int iz) const {
        return {origin_um.x + ix * spacing_um.x, origin_um.y + iy * spacing_um.y,
                origin_um.z + iz * spacing_um.z};
    }
};

// Sampled combined-RF field amplitude on an axis-aligned lattice. Node order
// is fixed: z fastest, then y, then x.
struct FieldGrid {
    LatticeSpec spec;
    std::vector<Vec3> e_field;   // V/m
    std::vector<double> qphi_ev; // optional pseudopotential cache

    std::size_t index(int ix, int iy, int iz) const {
        return (std::size_t(ix) * spec.counts[1] + std::size_t(iy)) * spec.counts[2] +
               std::size_t(iz);
    }
};

inline FieldGrid sample_grid(const FieldBasis& basis, const DriveConfig& drive,
                             const LatticeSpec& spec, int threads = 0) {
    for (int a = 0; a < 3; ++a) {
        if (spec.counts[a] < 1) throw domain_error("sample_grid: lattice counts must be >= 1");
        if (spec.counts[a] > 1 && spec.spacing_um[a] <= 0.0)
            throw domain_error("sample_grid: lattice spacing must be positive");
    }
    FieldGrid grid;
    grid.spec = spec;
    grid.e_field.resize(spec.node_count());
    const int ny = spec.counts[1];
    const int nz = spec.counts[2];
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;
    detail::parallel_for(std::size_t(spec.counts[0]), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t ix = lo; ix < hi && !failed; ++ix) {
            for (int iy = 0; iy < ny; ++iy) {
                for (int iz = 0; iz < nz; ++iz) {
                    try {
                        grid.e_field[grid.index(int(ix), iy, iz)] =
                            basis.rf_field_amplitude(drive, spec.node(int(ix), iy, iz));
                    } catch (const domain_error& err) {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        failed = true;
                        failure = "sample_grid: node (" + std::to_string(ix) + "," +
                                  std::to_string(iy) + "," + std::to_string(iz) +
                                  "): " + err.what();
                        return;
                    }
                }
            }
        }
    });
    if (failed) throw domain_error(failure);
    return grid;
}

// Tabular serialization: one row per node, z fastest, fixed 9-significant-
// digit formatting so identical inputs produce byte-identical files.
inline void write_grid_csv(const FieldGrid& grid, std::ostream& out) {
    char buf[256];
    const auto& s = grid.spec;
    std::snprintf(buf, sizeof buf,
                  "# lattice origin_um=%.9g,%.9g,%.9g spacing_um=%.9g,%.9g,%.9g counts=%d,%d,%d "
                  "order=z-fastest\n",
                  s.origin_um.x, s.origin_um.y, s.origin_um.z, s.spacing_um.x, s.spacing_um.y,
                  s.spacing_um.z, s.counts[0], s.counts[1], s.counts[2]);
    out << buf;
    out << "x_um,y_um,z_um,Ex_V_per_m,Ey_V_per_m,Ez_V_per_m\n";
    for (int ix = 0; ix < s.counts[0]; ++ix) {
        for (int iy = 0; iy < s.counts[1]; ++iy) {
            for (int iz = 0; iz < s.counts[2]; ++iz) {
                const Vec3 p = s.node(ix, iy, iz);
                const Vec3& e = grid.e_field[grid.index(ix, iy, iz)];
                std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", p.x, p.y, p.z,
                              e.x, e.y, e.z);
                out << buf;
            }
        }
    }
}

inline void write_grid_csv(const FieldGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write grid file '" + path + "'");
    write_grid_csv(grid, out);
}

} // namespace iontrap

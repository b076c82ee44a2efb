#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mstm/core/rng.hpp"
#include "mstm/hydro/state.hpp"

namespace mstm::hydro {

enum class GeometryKind { porous, lattice };

inline const char* kind_name(GeometryKind k) {
    return k == GeometryKind::porous ? "porous" : "lattice";
}

/// Full description of one simulation setup. Lengths in cm, speeds in
/// cm/us, densities in g/cm^3, pressures in Mbar.
struct GeometryConfig {
    GeometryKind kind = GeometryKind::porous;

    double porosity = 0.4;
    double thickness = 0.6;       // porous target slab extent along x
    double diameter = 3.8;        // porous disc extent along y
    double angle_deg = 0.0;       // lattice rotation
    double pitch = 0.10;          // lattice strut spacing
    double lattice_thickness = 0.6;
    double flier_speed = 0.23;
    double flier_thickness = 0.3175;
    double backer_thickness = 0.3175;

    double rho_solid = 2.7;
    double gamma = 1.4;
    double cv = 1.0;
    double ambient_density_ratio = 1e-3;  // void gas density relative to rho_solid
    double ambient_pressure = 1e-6;

    std::size_t grid_n = 240;    // internal square grid
    std::size_t output_n = 60;   // recorded resolution (grid_n must divide evenly)
    std::size_t frames = 0;      // 0 = kind default (60 porous, 50 lattice)
    double cfl = 0.4;
    double t_end = 0.0;          // 0 = auto from domain size and flier speed
    std::uint64_t rng_seed = 0;

    std::size_t frame_count() const {
        if (frames) return frames;
        return kind == GeometryKind::porous ? 60 : 50;
    }

    double domain_side() const {
        const double target = kind == GeometryKind::porous ? thickness : lattice_thickness;
        return flier_thickness + target + backer_thickness;
    }

    double end_time() const {
        if (t_end > 0.0) return t_end;
        return 0.8 * domain_side() / std::max(flier_speed, 0.05);
    }

    void validate() const {
        auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
        if (kind == GeometryKind::porous) {
            if (!in(porosity, 0.05, 0.75))
                throw std::invalid_argument("porous porosity outside [0.05, 0.75]");
            if (!in(thickness, 0.2, 1.0))
                throw std::invalid_argument("porous thickness outside [0.2, 1.0] cm");
            if (!in(diameter, 0.05, 3.8))
                throw std::invalid_argument("porous diameter outside [0.05, 3.8] cm");
        } else {
            if (!in(porosity, 0.10, 0.90))
                throw std::invalid_argument("lattice porosity outside [0.10, 0.90]");
            if (!in(angle_deg, 0.0, 45.0))
                throw std::invalid_argument("lattice angle outside [0, 45] degrees");
            if (!(pitch > 0.0)) throw std::invalid_argument("pitch must be positive");
            if (!(lattice_thickness > 0.0))
                throw std::invalid_argument("lattice thickness must be positive");
        }
        // 0 is admitted for quiescent diagnostics even though production runs
        // use 0.23 (porous) or [0.1, 0.4] (lattice).
        if (!in(flier_speed, 0.0, 0.5))
            throw std::invalid_argument("flier speed outside [0, 0.5] cm/us");
        if (!(rho_solid > 0.0)) throw std::invalid_argument("rho_solid must be positive");
        if (!(gamma > 1.0)) throw std::invalid_argument("gamma must exceed 1");
        if (!(cv > 0.0)) throw std::invalid_argument("cv must be positive");
        if (!(ambient_density_ratio > 0.0 && ambient_density_ratio < 1.0))
            throw std::invalid_argument("ambient density ratio must lie in (0, 1)");
        if (!(ambient_pressure > 0.0)) throw std::invalid_argument("ambient pressure must be positive");
        if (!(cfl > 0.0 && cfl < 1.0)) throw std::invalid_argument("cfl must lie in (0, 1)");
        if (grid_n == 0 || output_n == 0 || grid_n % output_n != 0)
            throw std::invalid_argument("grid_n must be a positive multiple of output_n");
        if (frame_count() < 2) throw std::invalid_argument("need at least 2 frames");
    }

    /// Metadata embedded in generated sequences.
    std::map<std::string, double> metadata() const {
        std::map<std::string, double> m;
        m["kind"] = kind == GeometryKind::porous ? 0.0 : 1.0;
        m["porosity"] = porosity;
        m["flier_speed"] = flier_speed;
        m["rho_solid"] = rho_solid;
        m["gamma"] = gamma;
        m["cv"] = cv;
        m["grid_n"] = static_cast<double>(grid_n);
        m["rng_seed"] = static_cast<double>(rng_seed);
        if (kind == GeometryKind::porous) {
            m["thickness"] = thickness;
            m["diameter"] = diameter;
        } else {
            m["angle_deg"] = angle_deg;
            m["pitch"] = pitch;
            m["lattice_thickness"] = lattice_thickness;
        }
        return m;
    }
};

namespace geometry_detail {

inline void fill_cell(ConservedState& s, std::size_t idx, double rho, double ux, double p,
                      double mat, const IdealGas& eos) {
    s.rho[idx] = rho;
    s.mx[idx] = rho * ux;
    s.my[idx] = 0.0;
    s.etot[idx] = p / (eos.gamma - 1.0) + 0.5 * rho * ux * ux;
    s.rhom[idx] = rho * mat;
}

/// Carves voids into the target band until the void-cell fraction matches
/// the requested porosity within half a percent. Circles are capped so they
/// cannot overshoot; the final approach flips single cells.
inline void carve_voids(std::vector<char>& solid, const std::vector<std::size_t>& band_cells,
                        const Grid& grid, double target_porosity, Rng& rng) {
    if (band_cells.empty()) return;
    std::vector<char> in_band(grid.cells(), 0);
    for (std::size_t idx : band_cells) in_band[idx] = 1;
    const double total = static_cast<double>(band_cells.size());
    auto measured = [&] {
        std::size_t voids = 0;
        for (std::size_t idx : band_cells)
            if (!solid[idx]) ++voids;
        return static_cast<double>(voids) / total;
    };

    const std::size_t nx = grid.nx;
    double phi = measured();
    std::size_t guard = 0;
    while (phi < target_porosity - 0.0049 && ++guard < 200000) {
        const double deficit_cells = (target_porosity - phi) * total;
        const double r_cap = std::sqrt(deficit_cells / std::numbers::pi);
        if (r_cap < 1.5) {
            // flip individual solid cells; exact to one cell
            std::size_t want = static_cast<std::size_t>(std::llround(deficit_cells));
            while (want > 0 && ++guard < 200000) {
                const std::size_t pick = band_cells[rng.uniform_index(band_cells.size())];
                if (solid[pick]) {
                    solid[pick] = 0;
                    --want;
                }
            }
            break;
        }
        const double r = rng.uniform(1.0, std::min(6.0, r_cap));
        const std::size_t center = band_cells[rng.uniform_index(band_cells.size())];
        const double ci = static_cast<double>(center % nx);
        const double cj = static_cast<double>(center / nx);
        const int ir = static_cast<int>(std::ceil(r));
        for (int dj = -ir; dj <= ir; ++dj) {
            for (int di = -ir; di <= ir; ++di) {
                if (di * di + dj * dj > r * r) continue;
                const long long ii = static_cast<long long>(ci) + di;
                const long long jj = static_cast<long long>(cj) + dj;
                if (ii < 0 || jj < 0 || ii >= static_cast<long long>(grid.nx) ||
                    jj >= static_cast<long long>(grid.ny))
                    continue;
                const std::size_t idx =
                    static_cast<std::size_t>(jj) * nx + static_cast<std::size_t>(ii);
                if (in_band[idx]) solid[idx] = 0;
            }
        }
        phi = measured();
    }
}

}  // namespace geometry_detail

/// Initial condition assembly. The flier slab moves in +x against the
/// structured target; a solid backer sits downstream. Voids and ambient
/// regions hold quiescent low-density gas.
inline ConservedState build_geometry(const GeometryConfig& cfg) {
    cfg.validate();
    const IdealGas eos{cfg.gamma, cfg.cv};
    const double L = cfg.domain_side();
    const std::size_t n = cfg.grid_n;
    ConservedState state(n, n, L / static_cast<double>(n));
    const Grid& grid = state.grid;

    const double x_target0 = cfg.flier_thickness;
    const double x_target1 =
        cfg.flier_thickness + (cfg.kind == GeometryKind::porous ? cfg.thickness : cfg.lattice_thickness);

    // 1 = solid material, 0 = void/ambient gas
    std::vector<char> solid(grid.cells(), 0);
    std::vector<char> flier(grid.cells(), 0);

    auto cx = [&](std::size_t i) { return (static_cast<double>(i) + 0.5) * grid.dx; };
    auto cy = [&](std::size_t j) { return (static_cast<double>(j) + 0.5) * grid.dx; };

    if (cfg.kind == GeometryKind::porous) {
        std::vector<std::size_t> disc_cells;
        const double y_lo = 0.5 * L - 0.5 * cfg.diameter;
        const double y_hi = 0.5 * L + 0.5 * cfg.diameter;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t idx = grid.index(i, j);
                const double x = cx(i);
                solid[idx] = 1;  // flier, casing, backer, and target all solid
                if (x < x_target0) flier[idx] = 1;
                if (x >= x_target0 && x < x_target1 && cy(j) >= y_lo && cy(j) < y_hi)
                    disc_cells.push_back(idx);
            }
        }
        Rng rng(cfg.rng_seed);
        geometry_detail::carve_voids(solid, disc_cells, grid, cfg.porosity, rng);
    } else {
        // Square strut grid: a point is solid when its pattern coordinates sit
        // within a strut of width w along either axis of the rotated frame.
        const double w = cfg.pitch * (1.0 - std::sqrt(cfg.porosity));
        if (w < 2.0 * grid.dx) throw std::invalid_argument("unresolvable lattice");
        const double theta = cfg.angle_deg * std::numbers::pi / 180.0;
        const double ct = std::cos(theta), st = std::sin(theta);
        const double rx = x_target0 + 0.5 * (x_target1 - x_target0);
        const double ry = 0.5 * L;

        std::vector<std::size_t> band_cells;
        std::vector<double> score;  // min(u,v) - w: negative inside solid
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t idx = grid.index(i, j);
                const double x = cx(i), y = cy(j);
                if (x < x_target0) {
                    solid[idx] = 1;
                    flier[idx] = 1;
                    continue;
                }
                if (x >= x_target1) {
                    solid[idx] = 1;  // backer
                    continue;
                }
                const double xr = ct * (x - rx) - st * (y - ry);
                const double yr = st * (x - rx) + ct * (y - ry);
                const double u = xr - cfg.pitch * std::floor(xr / cfg.pitch);
                const double v = yr - cfg.pitch * std::floor(yr / cfg.pitch);
                const double sc = std::min(u, v) - w;
                solid[idx] = sc < 0.0 ? 1 : 0;
                band_cells.push_back(idx);
                score.push_back(sc);
            }
        }

        // Discretization correction: flip the cells nearest the strut
        // boundary until the solid-cell count matches (1 - porosity) exactly.
        const auto target_solid = static_cast<long long>(
            std::llround((1.0 - cfg.porosity) * static_cast<double>(band_cells.size())));
        long long measured_solid = 0;
        for (std::size_t k = 0; k < band_cells.size(); ++k)
            if (solid[band_cells[k]]) ++measured_solid;
        std::vector<std::size_t> order(band_cells.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        if (measured_solid > target_solid) {
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
            for (std::size_t k = 0; k < order.size() && measured_solid > target_solid; ++k) {
                const std::size_t idx = band_cells[order[k]];
                if (solid[idx]) {
                    solid[idx] = 0;
                    --measured_solid;
                }
            }
        } else if (measured_solid < target_solid) {
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
            for (std::size_t k = 0; k < order.size() && measured_solid < target_solid; ++k) {
                const std::size_t idx = band_cells[order[k]];
                if (!solid[idx]) {
                    solid[idx] = 1;
                    ++measured_solid;
                }
            }
        }
    }

    const double rho_ambient = cfg.ambient_density_ratio * cfg.rho_solid;
    for (std::size_t idx = 0; idx < grid.cells(); ++idx) {
        const double rho = solid[idx] ? cfg.rho_solid : rho_ambient;
        const double ux = flier[idx] ? cfg.flier_speed : 0.0;
        geometry_detail::fill_cell(state, idx, rho, ux, cfg.ambient_pressure,
                                   solid[idx] ? 1.0 : 0.0, eos);
    }
    return state;
}

}  // namespace mstm::hydro

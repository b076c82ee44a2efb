#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mstm/hydro/eos.hpp"

namespace mstm::hydro {

class PositivityError : public std::runtime_error {
  public:
    explicit PositivityError(const std::string& what) : std::runtime_error(what) {}
};

struct Grid {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double dx = 0.0;  // dy == dx

    std::size_t cells() const { return nx * ny; }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
};

/// Conserved cell variables: density, momentum densities, total energy per
/// unit volume, and rho * material-fraction advected as a passive tracer.
/// Arrays are row-major with x contiguous.
struct ConservedState {
    Grid grid;
    std::vector<double> rho;
    std::vector<double> mx;
    std::vector<double> my;
    std::vector<double> etot;
    std::vector<double> rhom;

    ConservedState() = default;
    ConservedState(std::size_t nx, std::size_t ny, double dx) {
        grid = {nx, ny, dx};
        const std::size_t n = nx * ny;
        rho.assign(n, 0.0);
        mx.assign(n, 0.0);
        my.assign(n, 0.0);
        etot.assign(n, 0.0);
        rhom.assign(n, 0.0);
    }

    std::size_t cells() const { return grid.cells(); }

    double material_fraction(std::size_t idx) const { return rhom[idx] / rho[idx]; }

    double internal_energy_density(std::size_t idx) const {
        return etot[idx] - 0.5 * (mx[idx] * mx[idx] + my[idx] * my[idx]) / rho[idx];
    }

    /// Throws if any cell has non-positive density or internal energy.
    void check_positivity() const {
        for (std::size_t idx = 0; idx < cells(); ++idx) {
            if (!(rho[idx] > 0.0))
                throw PositivityError("positivity failure: density at cell " +
                                      std::to_string(idx));
            if (!(internal_energy_density(idx) > 0.0))
                throw PositivityError("positivity failure: pressure at cell " +
                                      std::to_string(idx));
        }
    }

    double total_mass() const {
        double m = 0.0;
        for (double v : rho) m += v;
        return m * grid.dx * grid.dx;
    }

    double total_energy() const {
        double e = 0.0;
        for (double v : etot) e += v;
        return e * grid.dx * grid.dx;
    }

    double total_momentum_x() const {
        double m = 0.0;
        for (double v : mx) m += v;
        return m * grid.dx * grid.dx;
    }

    double total_momentum_y() const {
        double m = 0.0;
        for (double v : my) m += v;
        return m * grid.dx * grid.dx;
    }
};

}  // namespace mstm::hydro
